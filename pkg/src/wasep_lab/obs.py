"""Local observables built from normalised occupation variables.

For a density profile ``u`` and configuration ``eta`` the variables
``omega_x = (eta_x - u_x) / (u_x (1 - u_x))`` are centred under the product
measure.  This module evaluates products of them over translated offset sets,
their averages against ``q_ell`` and the two-stage functionals obtained by
replacing a single ``omega`` by its block average through the flow of
:func:`wasep_lab.flows.point_to_qell_flow`.

Throughout, a "site function" is a flat array of length ``N`` and a flow
convolution ``(phi * g)_x = sum_z phi(z; b) g_{x-z}`` is evaluated by direct
summation over the flow's support.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .flows import flow_values
from .lattice import Torus, box_measures

__all__ = [
    "LocalSet",
    "omega",
    "omega_products",
    "omega_A_field",
    "block_average",
    "V_functional",
    "FirstStage",
    "SecondStage",
    "first_stage",
    "second_stage",
    "ell_of_n",
]


@dataclass(frozen=True)
class LocalSet:
    """Finite set of offsets with nonpositive coordinates."""

    offsets: tuple

    def __init__(self, offsets):
        arr = np.atleast_2d(np.asarray(offsets, dtype=np.int64))
        if arr.size == 0:
            raise ValueError("local set must be nonempty")
        if np.any(arr > 0):
            raise ValueError("offsets must lie in the negative orthant")
        uniq = sorted({tuple(int(c) for c in row) for row in arr})
        object.__setattr__(self, "offsets", tuple(uniq))

    @classmethod
    def origin(cls, d: int) -> "LocalSet":
        return cls([[0] * d])

    @property
    def array(self) -> np.ndarray:
        return np.array(self.offsets, dtype=np.int64)

    @property
    def d(self) -> int:
        return len(self.offsets[0])

    @property
    def ell0(self) -> int:
        """Side of the smallest cube containing the set."""
        a = self.array
        return int((a.max(axis=0) - a.min(axis=0)).max()) + 1

    @property
    def ell1(self) -> int:
        """Smallest ``ell`` with ``-A`` contained in ``{0..ell-1}^d``."""
        return int((-self.array).max()) + 1


def omega(eta, u) -> np.ndarray:
    """``(eta - u) / (u (1 - u))``."""
    u = np.asarray(u, dtype=float)
    if u.min() <= 0 or u.max() >= 1:
        raise ValueError("profile must take values strictly inside (0, 1)")
    return (np.asarray(eta, dtype=float) - u) / (u * (1.0 - u))


def omega_A_field(om: np.ndarray, A: LocalSet, torus: Torus) -> np.ndarray:
    """Site function ``x -> prod_{a in A} omega_{x+a}``."""
    out = np.ones(torus.size)
    for a in A.array:
        out = out * om[torus.shift(a)]
    return out


def omega_products(eta, u, A: LocalSet, x: int, torus: Torus) -> float:
    """``prod_{a in A} omega_{x+a}`` at a single site."""
    om = omega(eta, u)
    return float(np.prod([om[torus.encode(torus.decode(x) + a)] for a in A.array]))


def _check_scale(torus: Torus, ell: int) -> None:
    if ell < 1:
        raise ValueError("ell must be at least 1")
    if 2 * ell >= torus.n:
        raise ValueError(f"need ell < n/2, got ell={ell}, n={torus.n}")


def block_average(om: np.ndarray, ell: int, torus: Torus) -> np.ndarray:
    """``omega^ell_x = sum_y omega_{x+y} q_ell(y)``."""
    _check_scale(torus, ell)
    _, q = box_measures(ell, torus.d)
    w = q.weights
    out = np.zeros(torus.size)
    for z in q.support():
        out += w[tuple(z)] * om[torus.shift(z)]
    return out


def _flow_convolve(vals_b: np.ndarray, g: np.ndarray, torus: Torus) -> np.ndarray:
    """``x -> sum_z phi(z) g_{x-z}`` for one direction's flow values ``vals_b``."""
    out = np.zeros(torus.size)
    for z in np.argwhere(vals_b != 0):
        out += vals_b[tuple(z)] * g[torus.shift(-z)]
    return out


def V_functional(om: np.ndarray, A: LocalSet, b: int, G: np.ndarray, torus: Torus) -> float:
    """``sum_x omega_{x+A} omega_{x+b} G_x``."""
    return float(np.sum(omega_A_field(om, A, torus) * om[torus.plus[b]] * G))


@dataclass
class FirstStage:
    """Values of the first replacement step.

    Attributes
    ----------
    V, V_ell : float
    W : ndarray, shape (d,)
        ``W[b'] = sum_x (h^{ell,b'}_x)^2``.
    Z : float
    h : ndarray, shape (d, N)
        ``h[b', x] = h^{ell,b'}_x``.
    residual : float
        ``(V - V_ell) - sum_{x,b'} h^{b'}_{x-b} (omega_x - omega_{x+b'})``.
        Since the flow has divergence ``delta_0 - q_ell``, summation by parts
        gives ``omega_x - omega^ell_x = -sum_{z,b'} phi(z;b') (omega_{x+z+b'} -
        omega_{x+z})``, whence the orientation of the gradient.
    """

    V: float
    V_ell: float
    W: np.ndarray
    Z: float
    h: np.ndarray
    residual: float
    ctx: dict = field(default_factory=dict, repr=False)

    @property
    def W_total(self) -> float:
        return float(self.W.sum())


@dataclass
class SecondStage:
    """Values of the second replacement step.

    ``h[b', b'', x] = h^{ell,b',b''}_x``; ``residual`` is
    ``(Z - V_tilde) - sum h^{b',b''}_{x-b'} (omega_x - omega_{x+b''})``.
    """

    V_tilde: float
    W_tilde: float
    Z_tilde: float
    h: np.ndarray
    residual: float


def first_stage(G, A: LocalSet, b: int, ell: int, eta, u, torus: Torus) -> FirstStage:
    """Evaluate ``V``, ``V^ell``, ``W^ell``, ``Z^ell`` and the fields ``h^{ell,b'}``.

    Parameters
    ----------
    G : ndarray, shape (N,)
        Site weights.
    A : LocalSet
    b : int
        Direction index of the second factor ``omega_{x+b}``.
    ell : int
        Block scale, ``ell1 <= ell < n/2``.
    eta, u : ndarray, shape (N,)
    torus : Torus
    """
    _check_scale(torus, ell)
    if ell < A.ell1:
        raise ValueError(f"need ell >= ell1 = {A.ell1}")
    n, d = torus.n, torus.d
    G = np.asarray(G, dtype=float)
    u = np.asarray(u, dtype=float)
    om = omega(eta, u)
    omA = omega_A_field(om, A, torus)
    om_ell = block_average(om, ell, torus)
    V = float(np.sum(omA * om[torus.plus[b]] * G))
    V_ell = float(np.sum(omA * om_ell[torus.plus[b]] * G))
    phi = flow_values(ell, d)
    g = omA * G
    h = np.array([_flow_convolve(phi[bp], g, torus) for bp in range(d)])
    W = (h ** 2).sum(axis=1)
    Z = 0.0
    telescoped = 0.0
    for bp in range(d):
        h_shift = h[bp][torus.minus[b]]  # h_{x-b}
        grad = om[torus.plus[bp]] - om
        telescoped += float(np.sum(h_shift * grad))
        Z += float(np.sum(n * (u[torus.plus[bp]] - u) * h_shift * om * om[torus.plus[bp]]))
    residual = (V - V_ell) + telescoped
    ctx = {"om": om, "om_ell": om_ell, "u": u, "b": b, "ell": ell, "torus": torus, "G": G}
    return FirstStage(V, V_ell, W, Z, h, residual, ctx)


def second_stage(fs: FirstStage) -> SecondStage:
    """Second replacement applied to ``Z^ell`` of a :class:`FirstStage`."""
    c = fs.ctx
    om, om_ell, u, b, ell, torus = c["om"], c["om_ell"], c["u"], c["b"], c["ell"], c["torus"]
    n, d = torus.n, torus.d
    phi = flow_values(ell, d)
    V_t = 0.0
    Z_t = 0.0
    W_t = 0.0
    telescoped = 0.0
    hh = np.zeros((d, d, torus.size))
    for bp in range(d):
        du = n * (u[torus.plus[bp]] - u)
        h_shift = fs.h[bp][torus.minus[b]]
        V_t += float(np.sum(du * h_shift * om * om_ell[torus.plus[bp]]))
        k = du * h_shift * om
        for bpp in range(d):
            hv = _flow_convolve(phi[bpp], k, torus)
            hh[bp, bpp] = hv
            W_t += float(np.sum(hv ** 2))
            hv_shift = hv[torus.minus[bp]]  # h_{x-b'}
            telescoped += float(np.sum(hv_shift * (om[torus.plus[bpp]] - om)))
            Z_t += float(np.sum(hv_shift * n * (u[torus.plus[bpp]] - u) * om * om[torus.plus[bpp]]))
    residual = (fs.Z - V_t) + telescoped
    return SecondStage(V_t, W_t, Z_t, hh, residual)


def ell_of_n(d: int, n: int) -> int:
    """Mesoscopic block scale balancing ``ell^d g_d(ell)`` against ``n^2``.

    ``floor(n/8)`` in d=1, ``round(n / sqrt(log n))`` in d=2 and
    ``round(n^(2/3))`` in d=3.  The result is capped below ``n/2`` so that it
    is always an admissible block scale (the d=2 rule exceeds it for n < 64).
    """
    if n < 16:
        raise ValueError("ell_of_n needs n >= 16")
    if d == 1:
        ell = n // 8
    elif d == 2:
        ell = round(n / math.sqrt(math.log(n)))
    elif d == 3:
        ell = round(n ** (2.0 / 3.0))
    else:
        raise ValueError(f"unsupported dimension {d}")
    return max(1, min(int(ell), (n - 1) // 2))
