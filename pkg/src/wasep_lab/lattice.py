"""Discrete torus geometry, lattice cubes, box measures and sparse partitions.

Sites of the torus ``T_n^d`` are encoded as integers in ``[0, n**d)`` using
row-major order over coordinates: coordinate 0 varies slowest.  All
site-indexed fields in the package are flat arrays in this order; fields
indexed by (site, direction) are arrays of shape ``(n**d, d)`` whose entry
``[x, b]`` refers to the oriented edge ``(x, x + e_b)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

__all__ = [
    "Torus",
    "SiteSet",
    "BoxMeasure",
    "wrap",
    "box_measures",
    "sparse_partition",
    "is_sparse",
]


@dataclass(frozen=True)
class Torus:
    """The discrete torus ``{0, ..., n-1}^d`` with periodic wraparound.

    Parameters
    ----------
    d : int
        Dimension, between 1 and 3.
    n : int
        Side length.
    """

    d: int
    n: int

    def __post_init__(self):
        if not 1 <= self.d <= 3:
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.d}")
        if self.n < 1:
            raise ValueError(f"side length must be positive, got {self.n}")

    @property
    def size(self) -> int:
        """Number of sites ``n**d``."""
        return self.n ** self.d

    @property
    def shape(self) -> tuple:
        return (self.n,) * self.d

    def decode(self, sites) -> np.ndarray:
        """Coordinates of ``sites``; shape ``(..., d)``."""
        sites = np.asarray(sites, dtype=np.int64)
        return np.stack(np.unravel_index(sites, self.shape), axis=-1)

    def encode(self, coords) -> np.ndarray:
        """Site indices of coordinate vectors (reduced mod ``n``)."""
        coords = np.asarray(coords, dtype=np.int64) % self.n
        return np.ravel_multi_index(tuple(np.moveaxis(coords, -1, 0)), self.shape)

    @cached_property
    def _coords(self) -> np.ndarray:
        return self.decode(np.arange(self.size))

    def points(self) -> np.ndarray:
        """Macroscopic positions ``x / n`` of all sites, shape ``(N, d)``."""
        return self._coords / self.n

    def shift(self, offset) -> np.ndarray:
        """Permutation array ``s`` with ``s[x] = x + offset`` on the torus."""
        offset = np.asarray(offset, dtype=np.int64).reshape(self.d)
        return self.encode(self._coords + offset)

    @cached_property
    def plus(self) -> np.ndarray:
        """``plus[b, x]`` is the site ``x + e_b``; shape ``(d, N)``."""
        return np.stack([self.shift(np.eye(self.d, dtype=np.int64)[b]) for b in range(self.d)])

    @cached_property
    def minus(self) -> np.ndarray:
        """``minus[b, x]`` is the site ``x - e_b``; shape ``(d, N)``."""
        return np.stack([self.shift(-np.eye(self.d, dtype=np.int64)[b]) for b in range(self.d)])

    def unit(self, b: int) -> np.ndarray:
        return np.eye(self.d, dtype=np.int64)[b]

    def sup_distance(self, x, y) -> np.ndarray:
        """Periodic sup-norm distance between sites."""
        diff = np.abs(self.decode(x) - self.decode(y))
        return np.minimum(diff, self.n - diff).max(axis=-1)


@dataclass(frozen=True)
class SiteSet:
    """Ordered, duplicate-free collection of torus sites."""

    torus: Torus
    sites: np.ndarray

    def __post_init__(self):
        sites = np.asarray(self.sites, dtype=np.int64)
        if np.unique(sites).size != sites.size:
            raise ValueError("site set contains duplicates")
        object.__setattr__(self, "sites", sites)

    def __len__(self):
        return int(self.sites.size)


def wrap(torus: Torus, site: int, offset) -> int:
    """Translate ``site`` by ``offset`` with periodic wraparound.

    Examples
    --------
    >>> wrap(Torus(1, 5), 4, [1])
    0
    """
    offset = np.asarray(offset, dtype=np.int64).reshape(torus.d)
    if np.any(np.abs(offset) >= torus.n):
        raise ValueError("offset components must be smaller than n in absolute value")
    return int(torus.encode(torus.decode(site) + offset))


@dataclass(frozen=True)
class BoxMeasure:
    """Probability measure on the cube ``{0, ..., L-1}^d`` with rational weights.

    The weight of offset ``z`` is ``counts[z] / den``; counts are stored on the
    dense grid of shape ``(L,) * d``.
    """

    counts: np.ndarray
    den: int

    @property
    def d(self) -> int:
        return self.counts.ndim

    @property
    def side(self) -> int:
        return self.counts.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """Dense float64 weights, same shape as ``counts``."""
        return self.counts.astype(np.float64) / self.den

    def support(self) -> np.ndarray:
        """Offsets with positive weight, shape ``(K, d)``."""
        return np.argwhere(self.counts > 0)

    def fraction(self, z) -> Fraction:
        z = tuple(int(c) for c in z)
        if any(c < 0 or c >= self.side for c in z):
            return Fraction(0)
        return Fraction(int(self.counts[z]), self.den)

    def total(self) -> Fraction:
        return Fraction(int(self.counts.sum()), self.den)


def box_measures(ell: int, d: int) -> tuple[BoxMeasure, BoxMeasure]:
    """Uniform measure ``p_ell`` on the cube and its self-convolution ``q_ell``.

    Parameters
    ----------
    ell : int
        Side of the cube ``Lambda_ell = {0, ..., ell-1}^d``.
    d : int
        Dimension.

    Returns
    -------
    p, q : BoxMeasure
        ``p`` lives on ``Lambda_ell`` and ``q = p * p`` on ``Lambda_{2 ell - 1}``.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    p = BoxMeasure(np.ones((ell,) * d, dtype=np.int64), ell ** d)
    # q factorises over coordinates into triangular profiles.
    tri = ell - np.abs(np.arange(2 * ell - 1) - (ell - 1))
    counts = tri
    for _ in range(d - 1):
        counts = np.multiply.outer(counts, tri)
    q = BoxMeasure(np.asarray(counts, dtype=np.int64).reshape((2 * ell - 1,) * d), ell ** (2 * d))
    return p, q


def _axis_blocks(n: int, ell: int) -> np.ndarray:
    """Offset of each coordinate value inside a balanced block decomposition.

    The circle ``{0..n-1}`` is cut into ``a = n // ell`` consecutive blocks of
    length at least ``ell``; the returned array gives the position of each
    coordinate inside its block.
    """
    a = n // ell
    lengths = np.full(a, n // a)
    lengths[: n % a] += 1
    return np.concatenate([np.arange(m) for m in lengths])


def sparse_partition(torus: Torus, ell: int) -> list[SiteSet]:
    """Partition the torus into ``ell``-sparse classes.

    Every axis is split into ``n // ell`` consecutive blocks whose lengths
    differ by at most one and are all at least ``ell``; a site's class is the
    tuple of its within-block offsets.  Two distinct sites of one class differ
    by a nonzero multiple of a block length along some axis, hence are at
    periodic sup-distance at least ``ell``.  The class count is
    ``ceil(n / (n // ell))**d``, which is at most ``(d + 1) ell**d`` for
    ``d <= 3``.

    Parameters
    ----------
    torus : Torus
    ell : int
        Sparsity scale, ``1 <= ell < n / 2``.

    Returns
    -------
    list of SiteSet
        Nonempty classes, each sorted by site index.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    if 2 * ell >= torus.n:
        raise ValueError(f"need ell < n/2, got ell={ell}, n={torus.n}")
    offs = _axis_blocks(torus.n, ell)
    c = int(offs.max()) + 1
    coords = torus.decode(np.arange(torus.size))
    label = np.zeros(torus.size, dtype=np.int64)
    for i in range(torus.d):
        label = label * c + offs[coords[:, i]]
    order = np.argsort(label, kind="stable")
    cuts = np.flatnonzero(np.diff(label[order])) + 1
    return [SiteSet(torus, np.sort(chunk)) for chunk in np.split(order, cuts)]


def is_sparse(torus: Torus, sites, ell: int) -> bool:
    """True if distinct sites are pairwise at sup-distance at least ``ell``."""
    sites = np.asarray(sites, dtype=np.int64)
    if sites.size < 2:
        return True
    if np.unique(sites).size != sites.size:
        return False
    c = torus.decode(sites)
    for lo in range(0, len(c), 256):  # row blocks bound the pairwise array
        block = c[lo:lo + 256]
        diff = np.abs(block[:, None, :] - c[None, :, :])
        dist = np.minimum(diff, torus.n - diff).max(axis=-1)
        dist[np.arange(len(block)), np.arange(lo, lo + len(block))] = ell
        if dist.min() < ell:
            return False
    return True
