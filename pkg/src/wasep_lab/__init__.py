"""Simulation and verification laboratory for the weakly asymmetric exclusion process.

Modules
-------
lattice   discrete torus, box measures, sparse partitions
hydro     drift fields, lattice hydrodynamic equation, backward semigroup
wasep     exact sampling of the particle system
master    exact master equation, relative entropy, adjoint and entropy inequality
obs       normalised occupation products and the two-stage replacement functionals
flows     exact lattice flows between point mass, cube and smoothed cube measures
fluct     fluctuation fields, Sobolev norms, martingale decomposition
harness   experiments, statistics and the ``wasep-lab`` command line
"""
__version__ = "0.1.0"
