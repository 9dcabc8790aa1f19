"""Density fluctuation fields, Sobolev norms and the martingale decomposition.

For a test function ``H`` the fluctuation field is

    X_s(H_s) = n^{-d/2} sum_x (eta_x(s) - u_x(s)) H_s(x/n).

Dynkin's formula splits ``X_t(H_t) - X_0(H_0)`` into the time integral of
``(d/ds + L_n) X_s(H_s)`` and a martingale ``M_t``.  Without rate cap the
integrand is the sum of

* ``R``: ``n^{-d/2} sum_x H_x (L^n u - du/ds)_x`` (vanishes for the exact
  lattice hydrodynamics),
* ``A``: ``X_s((d/ds + Lambda_s) H_s)``,
* ``Q``: ``-n^{-d/2} sum_{x,b} 2 n (H_{x+b} - H_x) F_b(x) ebar_x ebar_{x+b}``
  with ``ebar = eta - u``,

and the predictable quadratic variation of ``M`` is the time integral of
``n^{-d} sum_{x,b} [r(x,x+b) eta_x (1-eta_{x+b}) + r(x+b,x) eta_{x+b} (1-eta_x)]
(H_{x+b} - H_x)^2``.  All of these are quadratic forms in ``eta`` and are
integrated exactly along recorded jump paths by :mod:`wasep_lab._kernels`.
"""
from __future__ import annotations

import inspect
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import _kernels
from .hydro import HydroTrajectory, backward_semigroup, discrete_generator_L, lambda_n
from .lattice import Torus
from .wasep import RateTable, Trajectory, rates_from_dual

__all__ = [
    "FourierField",
    "TestFunction",
    "DecompositionReport",
    "fluctuation_field",
    "fourier_modes",
    "sobolev_norm",
    "decompose",
    "quadratic_variation",
    "limit_variance",
    "integrate_forms",
    "linear_form",
    "pair_form",
    "path_coefficients",
    "DEFAULT_MODE_CUTOFF",
]

DEFAULT_MODE_CUTOFF = {1: 16, 2: 8, 3: 5}


# ---------------------------------------------------------------------------
# Fourier fields and norms
# ---------------------------------------------------------------------------

@dataclass
class FourierField:
    """Coefficients ``c(m)`` for all modes with ``|m|_inf <= M``.

    ``coeffs[m + M]`` (index shifted per axis) holds ``c(m)``.
    """

    M: int
    d: int
    coeffs: np.ndarray

    def modes(self) -> np.ndarray:
        """All modes, shape ``(K, d)``, in the order of ``coeffs.ravel()``."""
        ax = np.arange(-self.M, self.M + 1)
        grids = np.meshgrid(*([ax] * self.d), indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=1)

    def __getitem__(self, m) -> complex:
        idx = tuple(int(c) + self.M for c in np.atleast_1d(m))
        return complex(self.coeffs[idx])

    def conjugate_symmetric(self, tol: float = 1e-12) -> bool:
        flipped = self.coeffs[(slice(None, None, -1),) * self.d]
        return bool(np.allclose(flipped, np.conj(self.coeffs), atol=tol, rtol=0))

    def scaled(self, a: float) -> "FourierField":
        return FourierField(self.M, self.d, a * self.coeffs)

    def to_csv(self, path) -> None:
        m = self.modes()
        c = self.coeffs.ravel()
        names = ",".join(f"m{i + 1}" for i in range(self.d))
        np.savetxt(
            path,
            np.column_stack([m, c.real, c.imag]),
            delimiter=",",
            header=f"{names},re,im",
            comments="",
            fmt=["%d"] * self.d + ["%.17g", "%.17g"],
        )


def fourier_modes(M: int, d: int) -> np.ndarray:
    return FourierField(M, d, np.zeros((2 * M + 1,) * d)).modes()


def sobolev_norm(c: FourierField, k: float) -> float:
    """``(sum_m |c(m)|^2 (1 + |m|^2)^k)^{1/2}`` over the stored modes."""
    m = c.modes().astype(float)
    weight = (1.0 + (m ** 2).sum(axis=1)) ** k
    return float(math.sqrt(np.sum(np.abs(c.coeffs.ravel()) ** 2 * weight)))


def fluctuation_field(eta, u, f, torus: Torus):
    """Evaluate ``X(f) = n^{-d/2} sum_x (eta_x - u_x) f(x/n)``.

    Parameters
    ----------
    eta, u : ndarray, shape (N,)
    f : callable, ndarray or int
        A function of the points ``x/n`` (shape ``(N, d)``), its values on the
        lattice, or a mode cutoff ``M``; in the last case the coefficients
        ``X(exp(-2 pi i m.x))`` for ``|m|_inf <= M`` are returned.
    torus : Torus

    Returns
    -------
    float or FourierField
    """
    n, d = torus.n, torus.d
    centred = np.asarray(eta, dtype=float) - np.asarray(u, dtype=float)
    if isinstance(f, (int, np.integer)) and not isinstance(f, bool):
        M = int(f)
        spec = np.fft.fftn(centred.reshape(torus.shape)) * n ** (-d / 2.0)
        ax = np.arange(-M, M + 1) % n
        coeffs = spec[np.ix_(*([ax] * d))]
        return FourierField(M, d, coeffs)
    vals = f(torus.points()) if callable(f) else np.asarray(f, dtype=float)
    vals = np.asarray(vals).reshape(torus.size)
    return float(np.dot(centred, vals) * n ** (-d / 2.0))


# ---------------------------------------------------------------------------
# quadratic forms in eta
# ---------------------------------------------------------------------------

def linear_form(a: np.ndarray, u: np.ndarray, d: int):
    """Coefficients of ``sum_x a_x (eta_x - u_x)``: returns ``(A, C, const)``."""
    N = a.size
    return a.copy(), np.zeros((N, d)), -float(np.dot(a, u))


def pair_form(c: np.ndarray, u: np.ndarray, torus: Torus):
    """Coefficients of ``sum_{x,b} c_{x,b} (eta_x - u_x)(eta_{x+b} - u_{x+b})``."""
    A = np.zeros(torus.size)
    const = 0.0
    for b in range(torus.d):
        ip, im = torus.plus[b], torus.minus[b]
        A -= c[:, b] * u[ip] + c[im, b] * u[im]
        const += float(np.dot(c[:, b], u * u[ip]))
    return A, c.copy(), const


def _grad(H: np.ndarray, torus: Torus) -> np.ndarray:
    """``H_{x+b} - H_x`` as an ``(N, d)`` array."""
    return np.stack([H[torus.plus[b]] - H for b in range(torus.d)], axis=1)


def integrate_forms(traj: Trajectory, grid: np.ndarray, A: np.ndarray, C: np.ndarray,
                    const: np.ndarray, plus: np.ndarray, minus: np.ndarray) -> dict:
    """Integrate forms ``const + A.eta + C.eta eta`` along ``traj``.

    Coefficients are given at the grid nodes (shapes ``(G+1, K, N)``,
    ``(G+1, K, N, d)`` and ``(G+1, K)``) and interpolated linearly in time.
    With recorded events the result is exact for the interpolated
    coefficients; otherwise the grid must coincide with the snapshot times and
    the trapezoid rule is applied to snapshot values.

    Returns
    -------
    dict with ``integrals`` (G, K), ``node_values`` (G+1, K) and jump
    statistics (``jump_sum``, ``jump_sq``, ``jump_max``; only with events).
    """
    grid = np.asarray(grid, dtype=float)
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if grid[0] < -1e-12 or grid[-1] > traj.T + 1e-9:
        raise ValueError("grid extends beyond the trajectory")
    dconst = 0.5 * (const[1:] + const[:-1]) * np.diff(grid)[:, None]
    if traj.has_events:
        integ, nodes, js, jq, jm = _kernels.replay_forms(
            traj.initial.occupancy, traj.event_times, traj.event_from, traj.event_to,
            grid, A, C, plus, minus,
        )
        return {
            "integrals": integ + dconst,
            "node_values": nodes + const,
            "jump_sum": js,
            "jump_sq": jq,
            "jump_max": jm,
        }
    snap_t = traj.snapshot_times
    if snap_t.shape != grid.shape or np.max(np.abs(snap_t - grid)) > 1e-12:
        raise ValueError("without events the grid must equal the snapshot times")
    vals = _kernels.forms_on_snapshots(traj.snapshots, A, C, plus) + const
    integ = 0.5 * (vals[1:] + vals[:-1]) * np.diff(grid)[:, None]
    return {"integrals": integ, "node_values": vals}


# ---------------------------------------------------------------------------
# test functions and the decomposition
# ---------------------------------------------------------------------------

class TestFunction:
    """Possibly time-dependent test function on the torus.

    Parameters
    ----------
    fn : callable
        ``fn(points)`` or ``fn(t, points)`` with points of shape ``(N, d)``;
        only required positional parameters count towards the signature.
    dt_fn : callable, optional
        ``d/dt fn(t, points)``; when omitted for a time-dependent ``fn`` a
        centred difference with step ``1e-6`` is used.
    """

    __test__ = False  # not a pytest class

    def __init__(self, fn: Callable, dt_fn: Callable | None = None):
        if isinstance(fn, TestFunction):
            fn, dt_fn = fn.fn, fn.dt_fn
        self.fn = fn
        self.dt_fn = dt_fn
        try:
            nparams = sum(
                1 for prm in inspect.signature(fn).parameters.values()
                if prm.default is inspect.Parameter.empty
                and prm.kind in (prm.POSITIONAL_ONLY, prm.POSITIONAL_OR_KEYWORD)
            )
        except (TypeError, ValueError):
            nparams = 1
        self.time_dependent = nparams >= 2

    def values(self, t: float, torus: Torus) -> np.ndarray:
        pts = torus.points()
        out = self.fn(t, pts) if self.time_dependent else self.fn(pts)
        return np.broadcast_to(np.asarray(out, dtype=float), (torus.size,)).copy()

    def time_derivative(self, t: float, torus: Torus) -> np.ndarray:
        if not self.time_dependent:
            return np.zeros(torus.size)
        pts = torus.points()
        if self.dt_fn is not None:
            return np.broadcast_to(np.asarray(self.dt_fn(t, pts), dtype=float), (torus.size,)).copy()
        eps = 1e-6
        return (np.asarray(self.fn(t + eps, pts)) - np.asarray(self.fn(t - eps, pts))) / (2 * eps)


@dataclass
class DecompositionReport:
    """Terms of the martingale decomposition at the report times.

    ``M`` is the residual ``X - X0 - R - A - Q``.  ``compensator`` is the time
    integral of ``(d/ds + L_n) X_s(H_s)`` evaluated directly from the jump
    rates; ``route_gap`` is its difference with ``R + A + Q`` and vanishes up to
    rounding when the rate cap is inactive.  ``bracket`` is the sum of squared
    jumps of ``X`` (optional quadratic variation).
    """

    times: np.ndarray
    X: np.ndarray
    X0: float
    R: np.ndarray
    A: np.ndarray
    Q: np.ndarray
    M: np.ndarray
    QV: np.ndarray
    compensator: np.ndarray
    bracket: np.ndarray | None = None
    jump_max: float | None = None
    meta: dict = field(default_factory=dict)

    @property
    def route_gap(self) -> np.ndarray:
        return self.compensator - (self.R + self.A + self.Q)

    def to_csv(self, path) -> None:
        X0 = np.full_like(self.X, self.X0)
        np.savetxt(
            path,
            np.column_stack([self.times, self.X, X0, self.R, self.A, self.Q, self.M, self.QV]),
            delimiter=",",
            header="t,X,X0term,R,A,Q,M,QV",
            comments="",
            fmt="%.17g",
        )


FORM_NAMES = ("X", "A", "Q", "QV", "C", "R")


def _node_coefficients(H: TestFunction, s: float, hydro: HydroTrajectory, rates: RateTable):
    """Coefficients of the six forms X, A, Q, QV, compensator, R at time ``s``."""
    tor = hydro.torus
    n, d, N = tor.n, tor.d, tor.size
    Fdual = hydro.Fdual
    u = hydro.at(s)
    udot = hydro.rate_at(s)
    Hs = H.values(s, tor)
    dH = H.time_derivative(s, tor)
    scale = n ** (-d / 2.0)
    grad = _grad(Hs, tor)
    A = np.zeros((6, N))
    C = np.zeros((6, N, d))
    const = np.zeros(6)
    # X_s(H_s)
    A[0], C[0], const[0] = linear_form(scale * Hs, u, d)
    # A: X_s((d/ds + Lambda_s) H_s)
    A[1], C[1], const[1] = linear_form(scale * (dH + lambda_n(Hs, u, Fdual, tor)), u, d)
    # Q: quadratic term
    A[2], C[2], const[2] = pair_form(-2.0 * n * scale * grad * Fdual, u, tor)
    # <M>: rate-weighted squared gradients
    w = n ** (-d) * grad ** 2
    for b in range(d):
        im = tor.minus[b]
        A[3] += w[:, b] * rates.forward[:, b] + w[im, b] * rates.backward[im, b]
    C[3] = -w * (rates.forward + rates.backward)
    # compensator straight from the rates
    jump = scale * grad
    for b in range(d):
        im = tor.minus[b]
        A[4] += rates.forward[:, b] * jump[:, b] - rates.backward[im, b] * jump[im, b]
    C[4] = (rates.backward - rates.forward) * jump
    A[4] += scale * dH
    const[4] = -scale * float(np.dot(u, dH) + np.dot(udot, Hs))
    # R is deterministic
    const[5] = scale * float(np.dot(Hs, discrete_generator_L(u, Fdual, tor) - udot))
    return A, C, const


def path_coefficients(times, H, hydro: HydroTrajectory, rates: RateTable | None = None,
                      substeps: int = 8, events: bool = True) -> dict:
    """Coefficient nodes of the decomposition forms for the report ``times``.

    The nodes refine every report interval into ``substeps`` pieces when the
    paths carry events, and coincide with ``times`` otherwise.  The result can
    be reused for every path sampled with the same report times.
    """
    tor = hydro.torus
    if rates is None:
        rates = rates_from_dual(tor, hydro.Fdual)
    if rates.torus != tor or not np.allclose(rates.Fdual, hydro.Fdual):
        raise ValueError("rate table and hydrodynamic drift disagree")
    H = TestFunction(H)
    report_t = np.asarray(times, dtype=float)
    if report_t.size < 2 or report_t[0] != 0.0:
        raise ValueError("snapshots must start at t=0 and contain at least two times")
    if report_t[-1] > hydro.T + 1e-9:
        raise ValueError("hydrodynamic trajectory does not cover the particle path")
    if events:
        pieces = [np.linspace(a, b, substeps + 1)[:-1] for a, b in zip(report_t[:-1], report_t[1:])]
        grid = np.concatenate(pieces + [report_t[-1:]])
        step = substeps
    else:
        grid = report_t
        step = 1
    coefs = [_node_coefficients(H, s, hydro, rates) for s in grid]
    return {
        "times": report_t,
        "grid": grid,
        "step": step,
        "events": events,
        "A": np.ascontiguousarray(np.stack([c[0] for c in coefs])),
        "C": np.ascontiguousarray(np.stack([c[1] for c in coefs])),
        "const": np.stack([c[2] for c in coefs]),
        "rates": rates,
    }


def _path_terms(traj: Trajectory, H, hydro: HydroTrajectory, rates: RateTable | None,
                substeps: int, coefficients: dict | None = None) -> tuple[np.ndarray, np.ndarray, dict]:
    tor = traj.torus
    if hydro.torus != tor:
        raise ValueError("hydrodynamic trajectory lives on a different torus")
    if traj.T > hydro.T + 1e-9:
        raise ValueError("hydrodynamic trajectory does not cover the particle path")
    co = coefficients
    if co is None:
        co = path_coefficients(traj.snapshot_times, H, hydro, rates, substeps, traj.has_events)
    elif (co["events"] != traj.has_events or co["times"].shape != traj.snapshot_times.shape
          or np.max(np.abs(co["times"] - traj.snapshot_times)) > 1e-12):
        raise ValueError("precomputed coefficients do not match the trajectory")
    res = integrate_forms(traj, co["grid"], co["A"], co["C"], co["const"], tor.plus, tor.minus)
    cum = np.vstack([np.zeros((1, co["A"].shape[1])), np.cumsum(res["integrals"], axis=0)])
    idx = np.arange(0, co["grid"].size, co["step"])
    res["rates"] = co["rates"]
    return cum[idx], res["node_values"][idx], res


def decompose(traj: Trajectory, H, hydro: HydroTrajectory, rates: RateTable | None = None,
              substeps: int = 8, coefficients: dict | None = None) -> DecompositionReport:
    """Martingale decomposition of ``X_t(H_t)`` along one recorded path.

    Parameters
    ----------
    traj : Trajectory
        With events (exact path integrals) or dense snapshots (trapezoid).
    H : callable or TestFunction
        ``H(points)`` or ``H(t, points)``.
    hydro : HydroTrajectory
        Profile ``u`` covering ``[0, traj.T]``.
    rates : RateTable, optional
        Defaults to the rates of the hydrodynamic drift.
    substeps : int
        Coefficient nodes per snapshot interval (event paths only).
    coefficients : dict, optional
        Output of :func:`path_coefficients` for the same report times.

    Returns
    -------
    DecompositionReport
    """
    cum, nodes, res = _path_terms(traj, H, hydro, rates, substeps, coefficients)
    if res["rates"].cap_active:
        raise ValueError("decomposition assumes an inactive rate cap (n >= 2|F|)")
    X = nodes[:, 0]
    X0 = float(X[0])
    R, A_, Q, QV, Cmp = cum[:, 5], cum[:, 1], cum[:, 2], cum[:, 3], cum[:, 4]
    M = X - X0 - R - A_ - Q
    bracket = None
    jmax = None
    if "jump_sq" in res:
        step = (len(res["integrals"]) // (len(X) - 1)) if len(X) > 1 else 1
        bsum = np.cumsum(res["jump_sq"][:, 0])
        bracket = np.concatenate([[0.0], bsum[step - 1::step]])
        jmax = float(res["jump_max"][0])
    return DecompositionReport(
        times=np.asarray(traj.snapshot_times, dtype=float), X=X, X0=X0, R=R, A=A_, Q=Q, M=M,
        QV=QV, compensator=Cmp, bracket=bracket, jump_max=jmax,
    )


def quadratic_variation(traj: Trajectory, H, hydro: HydroTrajectory, rates: RateTable | None = None,
                        substeps: int = 8) -> np.ndarray:
    """Predictable quadratic variation ``<M(H)>_t`` at the snapshot times."""
    cum, _, _ = _path_terms(traj, H, hydro, rates, substeps)
    return cum[:, 3]


def limit_variance(f, hydro: HydroTrajectory, t: float, dt: float | None = None) -> float:
    """``int_0^t int 2 u (1 - u) |grad P_{s,t} f|^2 dx ds``.

    ``P_{s,t}`` is the lattice backward semigroup; gradients are discrete
    differences on edges, the mobility is averaged over the edge endpoints and
    the time integral uses the trapezoid rule on the semigroup's step grid.
    """
    tor = hydro.torus
    n, d = tor.n, tor.d
    fv = f(tor.points()) if callable(f) else np.asarray(f, dtype=float)
    fv = np.broadcast_to(np.asarray(fv, dtype=float), (tor.size,)).copy()
    _, times, path = backward_semigroup(fv, 0.0, t, hydro, dt=dt, return_path=True)
    vals = np.empty(times.size)
    for k, (s, v) in enumerate(zip(times, path)):
        u = hydro.at(s)
        mob = 2.0 * u * (1.0 - u)
        acc = 0.0
        for b in range(d):
            ip = tor.plus[b]
            acc += float(np.sum(0.5 * (mob + mob[ip]) * (n * (v[ip] - v)) ** 2))
        vals[k] = acc / tor.size
    return float(np.sum(0.5 * (vals[1:] + vals[:-1]) * np.diff(times)))
