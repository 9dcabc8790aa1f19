"""Lattice flows between probability measures on cubes of ``Z^d``.

A flow ``phi`` assigns a value ``phi(z; b)`` to each oriented edge
``(z, z + e_b)``.  It *connects* a measure ``p`` to a measure ``q`` when

    p(z) - q(z) = sum_b [phi(z; b) - phi(z - e_b; b)]   for all z,

i.e. its divergence is ``p - q``.  Three constructions are provided:

* :func:`step_flow` -- connects the uniform measure ``p_k`` on
  ``{0..k-1}^d`` to ``p_{k-1}``, routing mass of each boundary layer
  straight down the coordinate axes;
* :func:`point_to_cube_flow` -- connects ``delta_0`` to ``p_l`` by
  chaining step flows;
* :func:`point_to_qell_flow` -- connects ``delta_0`` to ``q_l = p_l * p_l``.

Everything is exact: a :class:`Flow` stores integer numerators (Python ints in
an object array) over one common positive integer denominator, so divergence
identities can be checked by integer equality.  Floats appear only in the
reporting helpers.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce

import numpy as np

from .lattice import BoxMeasure, box_measures

__all__ = [
    "Flow",
    "ExactMeasure",
    "divergence",
    "step_flow",
    "point_to_cube_flow",
    "point_to_qell_flow",
    "g_d",
    "step_constant",
    "flow_values",
]


def _zeros(shape) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    out.fill(0)
    return out


@dataclass(frozen=True)
class ExactMeasure:
    """Signed measure on ``{0..L-1}^d`` with values ``num / den``."""

    num: np.ndarray
    den: int

    @property
    def side(self) -> int:
        return self.num.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ExactMeasure):
            return NotImplemented
        side = max(self.side, other.side)
        a = _embed(self.num, side) * other.den
        b = _embed(other.num, side) * self.den
        return bool(np.all(a == b))

    def total(self) -> Fraction:
        return Fraction(int(self.num.sum()), self.den)

    @classmethod
    def from_box(cls, m: BoxMeasure) -> "ExactMeasure":
        return cls(m.counts.astype(object), m.den)

    @classmethod
    def point_mass(cls, d: int) -> "ExactMeasure":
        num = _zeros((1,) * d)
        num[(0,) * d] = 1
        return cls(num, 1)

    def __sub__(self, other: "ExactMeasure") -> "ExactMeasure":
        side = max(self.side, other.side)
        den = math.lcm(self.den, other.den)
        num = _embed(self.num, side) * (den // self.den) - _embed(other.num, side) * (den // other.den)
        return ExactMeasure(num, den)

    def to_float(self) -> np.ndarray:
        return _to_float(self.num, self.den)


def _embed(arr: np.ndarray, side: int) -> np.ndarray:
    """Zero-pad a cube-shaped measure array to a larger side."""
    if arr.shape[0] == side:
        return arr
    out = _zeros((side,) * arr.ndim)
    out[tuple(slice(0, s) for s in arr.shape)] = arr
    return out


def _to_float(num: np.ndarray, den: int) -> np.ndarray:
    flat = [int(v) / den for v in num.ravel()]
    return np.array(flat, dtype=np.float64).reshape(num.shape)


@dataclass(frozen=True)
class Flow:
    """Finitely supported flow on the cube ``{0..L-1}^d``.

    Attributes
    ----------
    num : ndarray of object, shape ``(d, L, ..., L)``
        ``num[b][z]`` is the numerator of ``phi(z; e_b)``.
    den : int
        Common positive denominator.
    """

    num: np.ndarray
    den: int

    @property
    def d(self) -> int:
        return self.num.shape[0]

    @property
    def side(self) -> int:
        return self.num.shape[1] if self.num.ndim > 1 else 0

    @classmethod
    def zero(cls, d: int, side: int = 1) -> "Flow":
        return cls(_zeros((d,) + (side,) * d), 1)

    def embed(self, side: int) -> "Flow":
        if side < self.side:
            raise ValueError("cannot shrink a flow")
        if side == self.side:
            return self
        out = _zeros((self.d,) + (side,) * self.d)
        out[(slice(None),) + (slice(0, self.side),) * self.d] = self.num
        return Flow(out, self.den)

    def __add__(self, other: "Flow") -> "Flow":
        side = max(self.side, other.side)
        a, b = self.embed(side), other.embed(side)
        den = math.lcm(a.den, b.den)
        return Flow(a.num * (den // a.den) + b.num * (den // b.den), den)

    def __neg__(self) -> "Flow":
        return Flow(-self.num, self.den)

    def __sub__(self, other: "Flow") -> "Flow":
        return self + (-other)

    def value(self, z, b: int) -> Fraction:
        z = tuple(int(c) for c in z)
        if any(c < 0 or c >= self.side for c in z):
            return Fraction(0)
        return Fraction(int(self.num[(b,) + z]), self.den)

    def reduced(self) -> "Flow":
        """Same flow with numerators and denominator divided by their gcd."""
        g = reduce(math.gcd, (int(v) for v in self.num.ravel()), self.den)
        if g <= 1:
            return self
        return Flow(self.num // g, self.den // g)

    def support_within(self, side: int) -> bool:
        """True if every edge carrying flow has both endpoints in ``{0..side-1}^d``."""
        for b in range(self.d):
            nz = np.argwhere(self.num[b] != 0)
            if nz.size == 0:
                continue
            if nz.max() >= side:
                return False
            if nz[:, b].max() + 1 >= side:
                return False
        return True

    # -- float reports -------------------------------------------------
    def values(self) -> np.ndarray:
        """Float64 values, shape ``(d, L, ..., L)``."""
        return _to_float(self.num, self.den)

    def sum_sq(self) -> float:
        return float(Fraction(int(sum(int(v) * int(v) for v in self.num.ravel())), self.den * self.den))

    def sum_abs(self) -> float:
        return float(Fraction(int(sum(abs(int(v)) for v in self.num.ravel())), self.den))

    def max_abs(self) -> float:
        return float(Fraction(int(max(abs(int(v)) for v in self.num.ravel())), self.den))


def divergence(phi: Flow) -> ExactMeasure:
    """Exact divergence ``z -> sum_b [phi(z; b) - phi(z - e_b; b)]``.

    The result lives on the cube one larger than the flow's, since flow on an
    outward boundary edge deposits mass just outside.
    """
    d, L = phi.d, phi.side
    out = _zeros((L + 1,) * d)
    inner = (slice(0, L),) * d
    for b in range(d):
        out[inner] += phi.num[b]
        shifted = tuple(slice(1, L + 1) if i == b else slice(0, L) for i in range(d))
        out[shifted] -= phi.num[b]
    return ExactMeasure(out, phi.den)


# ---------------------------------------------------------------------------
# constructions
# ---------------------------------------------------------------------------

def step_constant(d: int) -> Fraction:
    """Combinatorial constant ``sup_k binom(d,k)^{-1} k^{-1} sum_{i>=k} binom(d,i)``.

    ``max |step_flow(l, d)| * l**d`` never exceeds this value.
    """
    return max(
        Fraction(sum(math.comb(d, i) for i in range(k, d + 1)), k * math.comb(d, k))
        for k in range(1, d + 1)
    )


@lru_cache(maxsize=None)
def step_flow(ell: int, d: int) -> Flow:
    """Flow connecting ``p_ell`` to ``p_{ell-1}``.

    Write ``k = ell``.  Sites of ``{0..k-1}^d`` with exactly ``m >= 1``
    coordinates equal to ``k - 1`` form the layer of index ``m``.  The measure
    obtained from ``p_k`` by sweeping all mass of layers ``>= m`` evenly onto
    layer ``m`` carries ``a_m`` per site of that layer; the layer-``m`` mass
    is then pushed inward along each of the ``m`` saturated axes in equal
    shares, one unit step at a time, spreading evenly over the ``k - 1``
    positions of the axis.  Summing over layers gives the closed form

        phi(y; b) = -(y_b + 1) / (k - 1) * a_m / m,   y_b <= k - 2,

    where ``m = 1 + #{i != b : y_i = k - 1}``.

    Parameters
    ----------
    ell : int
        Cube side, at least 2.
    d : int
        Dimension.
    """
    if ell < 2:
        raise ValueError("step_flow needs ell >= 2")
    k = ell
    M = reduce(math.lcm, (m * math.comb(d, m) for m in range(1, d + 1)), 1)
    den = k ** d * (k - 1) ** d * M
    # S_m = sum_{i >= m} binom(d, i) (k-1)^(d-i)
    S = [sum(math.comb(d, i) * (k - 1) ** (d - i) for i in range(m, d + 1)) for m in range(d + 2)]
    # numerator of a_m / m / (k-1) over den: S_m (k-1)^(m-1) M / (m binom(d,m))
    coef = [0] + [S[m] * (k - 1) ** (m - 1) * (M // (m * math.comb(d, m))) for m in range(1, d + 1)]
    grid = np.indices((k,) * d).reshape(d, -1).T if d > 0 else np.zeros((1, 0), dtype=int)
    num = _zeros((d,) + (k,) * d)
    top = grid == k - 1
    for b in range(d):
        m_arr = 1 + top.sum(axis=1) - top[:, b]
        for idx, y in enumerate(grid):
            if y[b] <= k - 2:
                num[(b,) + tuple(y)] = -(int(y[b]) + 1) * coef[int(m_arr[idx])]
    return Flow(num, den)


@lru_cache(maxsize=None)
def point_to_cube_flow(ell: int, d: int) -> Flow:
    """Flow connecting ``delta_0`` to ``p_ell``.

    In one dimension this is the cumulative-sum flow
    ``phi(x; e_1) = (ell - 1 - x) / ell`` for ``x = 0..ell-2``.  In higher
    dimension it is ``-sum_{k=2}^{ell} step_flow(k, d)``, whose divergence
    telescopes to ``p_1 - p_ell = delta_0 - p_ell``.
    """
    if ell < 1:
        raise ValueError("ell must be at least 1")
    if ell == 1:
        return Flow.zero(d)
    if d == 1:
        num = _zeros((1, ell))
        for x in range(ell - 1):
            num[0, x] = ell - 1 - x
        return Flow(num, ell)
    den = reduce(math.lcm, (step_flow(k, d).den for k in range(2, ell + 1)), 1)
    acc = _zeros((d,) + (ell,) * d)
    for k in range(2, ell + 1):
        f = step_flow(k, d)
        acc[(slice(None),) + (slice(0, k),) * d] -= f.num * (den // f.den)
    return Flow(acc, den).reduced()


def _box_sum(arr: np.ndarray, ell: int, axis: int) -> np.ndarray:
    """``out[i] = sum_{j=i-ell+1}^{i} arr[j]`` along ``axis``; length grows by ``ell - 1``."""
    shape = list(arr.shape)
    shape[axis] += ell - 1
    # np.pad would insert fixed-width zeros, which overflow against big ints
    padded = _zeros(shape) if arr.dtype == object else np.zeros(shape, dtype=arr.dtype)
    padded[tuple(slice(0, s) for s in arr.shape)] = arr
    csum = np.cumsum(padded, axis=axis)
    lagged = _zeros(csum.shape) if arr.dtype == object else np.zeros_like(csum)
    src = [slice(None)] * arr.ndim
    dst = [slice(None)] * arr.ndim
    src[axis] = slice(0, csum.shape[axis] - ell)
    dst[axis] = slice(ell, None)
    lagged[tuple(dst)] = csum[tuple(src)]
    return csum - lagged


def convolve_with_cube(phi: Flow, ell: int) -> Flow:
    """The flow ``z -> sum_w phi(z - w) p_ell(w)``; its divergence is ``div(phi) * p_ell``."""
    num = phi.num
    for axis in range(1, phi.d + 1):
        num = _box_sum(num, ell, axis)
    return Flow(num, phi.den * ell ** phi.d)


@lru_cache(maxsize=None)
def point_to_qell_flow(ell: int, d: int) -> Flow:
    """Flow connecting ``delta_0`` to ``q_ell = p_ell * p_ell``.

    Given ``psi`` connecting ``delta_0`` to ``p_ell``, the convolution
    ``psi * p_ell`` connects ``p_ell`` to ``q_ell``; their sum therefore
    connects ``delta_0`` to ``q_ell`` and is supported in ``{0..2 ell - 2}^d``.
    """
    psi = point_to_cube_flow(ell, d)
    if ell == 1:
        return psi
    return (psi + convolve_with_cube(psi, ell)).reduced()


@lru_cache(maxsize=None)
def flow_values(ell: int, d: int) -> np.ndarray:
    """Float64 values of :func:`point_to_qell_flow`, cached per ``(ell, d)``."""
    vals = point_to_qell_flow(ell, d).values()
    vals.setflags(write=False)
    return vals


def g_d(d: int, ell: float) -> float:
    """Energy gauge: ``ell`` in d=1, ``log ell`` in d=2, ``1`` in d=3."""
    if d == 1:
        return float(ell)
    if d == 2:
        if ell < 2:
            raise ValueError("g_2 needs ell >= 2")
        return math.log(ell)
    if d == 3:
        return 1.0
    raise ValueError(f"unsupported dimension {d}")


def cube_measures(ell: int, d: int) -> tuple[ExactMeasure, ExactMeasure]:
    """``(p_ell, q_ell)`` as exact measures."""
    p, q = box_measures(ell, d)
    return ExactMeasure.from_box(p), ExactMeasure.from_box(q)
