"""Exact master-equation oracle for tiny lattices.

Configurations are indexed by the integer whose bit ``x`` is ``eta_x``.  The
generator is assembled as a sparse matrix ``Q`` with ``Q[eta, eta']`` the rate
of ``eta -> eta'`` and diagonal ``-sum`` of the row; laws evolve by
``dp/dt = Q^T p``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .hydro import HydroTrajectory, discrete_generator_L
from .lattice import Torus
from .wasep import RateTable, rates_from_dual

__all__ = [
    "MAX_SITES",
    "StateDistribution",
    "EntropyReport",
    "state_bits",
    "generator",
    "product_measure_vector",
    "forward_solve",
    "relative_entropy",
    "dirichlet_and_carre",
    "adjoint_apply",
    "adjoint_one",
    "entropy_report",
    "yau_check",
    "ibp_check",
    "shell_masses",
]

MAX_SITES = 20


def _check_size(torus: Torus) -> None:
    if torus.size > MAX_SITES:
        raise ValueError(f"state space too large: {torus.size} sites (max {MAX_SITES})")


def state_bits(torus: Torus) -> np.ndarray:
    """Matrix ``B[s, x] = eta_x`` for every configuration ``s``; shape ``(2^N, N)``."""
    _check_size(torus)
    s = np.arange(2 ** torus.size, dtype=np.int64)
    return ((s[:, None] >> np.arange(torus.size)) & 1).astype(np.uint8)


@dataclass
class StateDistribution:
    """Probability vector over all ``2^N`` configurations."""

    torus: Torus
    p: np.ndarray

    def __post_init__(self):
        _check_size(self.torus)
        p = np.asarray(self.p, dtype=float)
        if p.shape != (2 ** self.torus.size,):
            raise ValueError("wrong vector length")
        if p.min() < -1e-12:
            raise ValueError(f"negative probability {p.min():.3e}")
        p = np.where(p < 0, 0.0, p)
        if abs(p.sum() - 1.0) > 1e-10:
            raise ValueError(f"probabilities sum to {p.sum()!r}")
        self.p = p


def generator(rates: RateTable) -> sp.csr_matrix:
    """Sparse generator ``Q`` on the full configuration space."""
    tor = rates.torus
    _check_size(tor)
    S = 2 ** tor.size
    s = np.arange(S, dtype=np.int64)
    rows, cols, vals = [], [], []
    for b in range(tor.d):
        for x in range(tor.size):
            y = int(tor.plus[b, x])
            bx, by = (s >> x) & 1, (s >> y) & 1
            flip = (1 << x) | (1 << y)
            fwd = np.flatnonzero((bx == 1) & (by == 0))
            rows.append(fwd)
            cols.append(fwd ^ flip)
            vals.append(np.full(fwd.size, rates.forward[x, b]))
            bwd = np.flatnonzero((bx == 0) & (by == 1))
            rows.append(bwd)
            cols.append(bwd ^ flip)
            vals.append(np.full(bwd.size, rates.backward[x, b]))
    r = np.concatenate(rows)
    c = np.concatenate(cols)
    v = np.concatenate(vals)
    off = sp.coo_matrix((v, (r, c)), shape=(S, S)).tocsr()
    diag = -np.asarray(off.sum(axis=1)).ravel()
    return (off + sp.diags(diag)).tocsr()


def product_measure_vector(u, torus: Torus) -> StateDistribution:
    """Product Bernoulli law with marginals ``u``."""
    u = np.asarray(u, dtype=float).reshape(torus.size)
    B = state_bits(torus).astype(bool)
    p = np.prod(np.where(B, u[None, :], 1.0 - u[None, :]), axis=1)
    return StateDistribution(torus, p)


def shell_masses(dist: StateDistribution) -> np.ndarray:
    """Probability of each particle number ``0..N``."""
    counts = state_bits(dist.torus).sum(axis=1)
    return np.bincount(counts, weights=dist.p, minlength=dist.torus.size + 1)


def _rk4(Qt, p, h):
    k1 = Qt @ p
    k2 = Qt @ (p + 0.5 * h * k1)
    k3 = Qt @ (p + 0.5 * h * k2)
    k4 = Qt @ (p + h * k3)
    return p + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def default_master_dt(Q: sp.csr_matrix) -> float:
    """``0.1 / max row sum of |Q^T|``."""
    colsum = np.asarray(abs(Q).sum(axis=0)).ravel()
    return 0.1 / colsum.max() if colsum.max() > 0 else 1.0


def forward_solve(p0: StateDistribution, rates: RateTable, T: float, dt: float | None = None,
                  save_every: int = 1):
    """Integrate ``dp/dt = Q^T p`` with RK4.

    Returns
    -------
    times : ndarray
    P : ndarray, shape (len(times), 2^N)
    """
    Q = generator(rates)
    Qt = Q.T.tocsr()
    h0 = default_master_dt(Q) if dt is None else dt
    steps = max(1, int(np.ceil(T / h0 - 1e-9))) if T > 0 else 0
    h = T / steps if steps else 0.0
    p = p0.p.copy()
    times, out = [0.0], [p.copy()]
    for k in range(steps):
        p = _rk4(Qt, p, h)
        if (k + 1) % save_every == 0 or k + 1 == steps:
            times.append((k + 1) * h)
            out.append(p.copy())
    P = np.array(out)
    if P.min() < -1e-12:
        raise FloatingPointError(f"negative probability {P.min():.3e}")
    return np.array(times), np.clip(P, 0.0, None)


def relative_entropy(p, mu) -> float:
    """``sum p log(p / mu)`` with ``0 log 0 = 0``."""
    p = getattr(p, "p", p)
    mu = getattr(mu, "p", mu)
    p = np.asarray(p, dtype=float)
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("reference measure must be strictly positive")
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / mu[mask])))


def _edge_list(torus: Torus):
    for b in range(torus.d):
        for x in range(torus.size):
            yield x, int(torus.plus[b, x]), b


def dirichlet_and_carre(f, mu, rates: RateTable, check: bool = True) -> tuple[float, float]:
    """Dirichlet form of ``sqrt f`` and integrated carré du champ.

    Returns
    -------
    D : float
        ``sum_{x,b} sum_eta mu(eta) (sqrt f(eta^{x,x+b}) - sqrt f(eta))^2``.
    G : float
        ``sum_eta mu(eta) sum_{x,b} [r(x,x+b) eta_x (1 - eta_{x+b})
        + r(x+b,x) eta_{x+b} (1 - eta_x)] (grad sqrt f)^2``.
    """
    mu = np.asarray(getattr(mu, "p", mu), dtype=float)
    f = np.asarray(f, dtype=float)
    tor = rates.torus
    if np.any(f < -1e-12) or abs(np.dot(f, mu) - 1.0) > 1e-10:
        raise ValueError("f is not a probability density with respect to mu")
    g = np.sqrt(np.clip(f, 0.0, None))
    s = np.arange(f.size, dtype=np.int64)
    D = 0.0
    G = 0.0
    for x, y, b in _edge_list(tor):
        bx, by = (s >> x) & 1, (s >> y) & 1
        sw = s ^ (((bx ^ by) << x) | ((bx ^ by) << y))
        grad2 = (g[sw] - g) ** 2
        D += float(np.dot(mu, grad2))
        w = rates.forward[x, b] * (bx * (1 - by)) + rates.backward[x, b] * (by * (1 - bx))
        G += float(np.dot(mu, w * grad2))
    if check:
        n = tor.n
        assert G >= 0.5 * n * n * D - 1e-12 * max(1.0, G), "carre du champ below (n^2/2) D"
    return D, G


def adjoint_apply(g, mu, Q: sp.csr_matrix) -> np.ndarray:
    """Adjoint of the generator in ``L^2(mu)``: ``(Q^T (g mu)) / mu``."""
    mu = np.asarray(getattr(mu, "p", mu), dtype=float)
    return (Q.T @ (np.asarray(g, dtype=float) * mu)) / mu


def adjoint_one(u, Fdual, torus: Torus, mode: str = "closed", du_dt=None) -> np.ndarray:
    """``L^* 1 - d/dt log psi`` for the product measure with profile ``u``.

    Parameters
    ----------
    u : ndarray, shape (N,)
    Fdual : ndarray, shape (N, d)
    torus : Torus
    mode : {"brute", "closed"}
        ``brute`` sums the adjoint over neighbouring configurations;
        ``closed`` evaluates ``sum_x omega_x (L^n u - du/dt)_x +
        sum_{x,b} omega_x omega_{x+b} G_{x,b}`` with
        ``G_{x,b} = n (u_{x+b}-u_x) F_b(x) (u_x+u_{x+b}-2u_x u_{x+b}) - n^2 (u_{x+b}-u_x)^2``.
        The closed form assumes the rate cap is inactive.
    du_dt : ndarray, optional
        Time derivative of ``u`` (zero when omitted).

    Returns
    -------
    ndarray, shape (2^N,)
    """
    _check_size(torus)
    u = np.asarray(u, dtype=float).reshape(torus.size)
    Fdual = np.asarray(Fdual, dtype=float).reshape(torus.size, torus.d)
    du = np.zeros_like(u) if du_dt is None else np.asarray(du_dt, dtype=float)
    B = state_bits(torus).astype(float)
    omega = (B - u) / (u * (1 - u))
    dlogpsi = omega @ du
    if mode == "brute":
        rates = rates_from_dual(torus, Fdual)
        mu = product_measure_vector(u, torus).p
        return adjoint_apply(np.ones_like(mu), mu, generator(rates)) - dlogpsi
    if mode != "closed":
        raise ValueError("mode must be 'brute' or 'closed'")
    if np.any(np.abs(Fdual) > torus.n / 2):
        raise ValueError("closed form requires an inactive rate cap (n >= 2|F|)")
    n = torus.n
    out = omega @ discrete_generator_L(u, Fdual, torus) - dlogpsi
    for b in range(torus.d):
        up = u[torus.plus[b]]
        du_b = up - u
        G = n * du_b * Fdual[:, b] * (u + up - 2 * u * up) - n * n * du_b ** 2
        out += (omega * omega[:, torus.plus[b]]) @ G
    return out


@dataclass
class EntropyReport:
    """Entropy production along an exact master-equation solve.

    ``dirichlet`` holds ``-int Gamma sqrt(f) dmu`` and ``correction``
    ``int J f dmu``; ``slack = H' - (dirichlet + correction)``.
    """

    times: np.ndarray
    H: np.ndarray
    dirichlet: np.ndarray
    correction: np.ndarray
    slack: np.ndarray
    dirichlet_form: np.ndarray
    H_prime_exact: np.ndarray

    def to_csv(self, path) -> None:
        np.savetxt(
            path,
            np.column_stack([self.times, self.H, self.dirichlet, self.correction, self.slack]),
            delimiter=",",
            header="t,H,dirichlet,correction,slack",
            comments="",
            fmt="%.17g",
        )


def _centered_derivative(t: np.ndarray, y: np.ndarray, edge: np.ndarray) -> np.ndarray:
    """Centered differences at interior grid times; ``edge`` supplies the two endpoints.

    At ``t = 0`` the law equals the reference measure and both sides of the
    entropy inequality vanish, so a one-sided stencil there would turn its
    truncation error into spurious slack.
    """
    out = np.empty_like(y)
    out[1:-1] = (y[2:] - y[:-2]) / (t[2:] - t[:-2])
    out[0], out[-1] = edge[0], edge[-1]
    return out


def entropy_report(u0, spec_or_dual, torus: Torus, T: float, p0: StateDistribution | None = None,
                   dt: float | None = None, stride: int = 1) -> EntropyReport:
    """Solve the master and hydrodynamic equations together and evaluate the
    entropy inequality terms on a shared time grid.

    Parameters
    ----------
    u0 : ndarray
        Initial profile; ``p0`` defaults to the matching product measure.
    spec_or_dual : VectorFieldSpec or ndarray
        Drift specification or its dual-lattice samples.
    torus : Torus
    T : float
    stride : int
        Keep every ``stride``-th RK4 step.
    """
    from .hydro import VectorFieldSpec, _rk4_step, sample_dual_field

    _check_size(torus)
    if isinstance(spec_or_dual, VectorFieldSpec):
        Fdual = sample_dual_field(spec_or_dual, torus)
    else:
        Fdual = np.asarray(spec_or_dual, dtype=float).reshape(torus.size, torus.d)
    rates = rates_from_dual(torus, Fdual)
    Q = generator(rates)
    Qt = Q.T.tocsr()
    u = np.asarray(u0, dtype=float).reshape(torus.size)
    p = (p0 if p0 is not None else product_measure_vector(u, torus)).p.copy()
    h0 = default_master_dt(Q) if dt is None else dt
    steps = max(1, int(np.ceil(T / h0 - 1e-9)))
    h = T / steps
    B = state_bits(torus).astype(float)

    def rhs_u(_t, y):
        return discrete_generator_L(y, Fdual, torus)

    rows = []
    for k in range(steps + 1):
        if k % stride == 0 or k == steps:
            mu = product_measure_vector(u, torus).p
            du = rhs_u(None, u)
            f = p / mu
            H = relative_entropy(p, mu)
            D, Gam = dirichlet_and_carre(f / np.dot(f, mu), mu, rates)
            J = adjoint_one(u, Fdual, torus, "brute", du_dt=du)
            corr = float(np.dot(J * f, mu))
            # exact derivative of H for the cross-check
            omega = (B - u) / (u * (1 - u))
            pdot = Qt @ p
            mask = p > 0
            Hp = float(np.dot(pdot[mask], np.log(p[mask] / mu[mask]))) - float(np.dot(p, omega @ du))
            rows.append((k * h, H, -Gam, corr, D, Hp))
        if k < steps:
            p = _rk4(Qt, p, h)
            u = _rk4_step(rhs_u, u, k * h, h)
    arr = np.array(rows)
    t, H, dir_, corr, D, Hp = arr.T
    Hfd = _centered_derivative(t, H, Hp)
    slack = Hfd - (dir_ + corr)
    return EntropyReport(t, H, dir_, corr, slack, D, Hp)


def yau_check(report: EntropyReport) -> np.ndarray:
    """Per-time slack ``H'(t) - (-int Gamma sqrt f dmu + int J f dmu)``."""
    return np.asarray(report.slack)


def ibp_check(h, f, x: int, y: int, u, torus: Torus, check_h: bool = True) -> float:
    """Residual of the exchange integration-by-parts identity.

    ``int h (omega_y - omega_x) f dmu - int h s_{xy} grad_{xy} f dmu
      + (u_y - u_x) int h omega_x omega_y f dmu``
    with ``s_{xy} = eta_x (1 - eta_y) / (u_x (1 - u_y))`` and ``mu`` the
    product measure with profile ``u``.  Requires ``h`` invariant under the
    exchange of ``x`` and ``y``.
    """
    u = np.asarray(u, dtype=float).reshape(torus.size)
    h = np.asarray(h, dtype=float)
    f = np.asarray(f, dtype=float)
    s = np.arange(2 ** torus.size, dtype=np.int64)
    bx, by = (s >> x) & 1, (s >> y) & 1
    sw = s ^ (((bx ^ by) << x) | ((bx ^ by) << y))
    if check_h and np.max(np.abs(h[sw] - h), initial=0.0) > 1e-12 * max(1.0, np.abs(h).max(initial=0.0)):
        raise ValueError("h is not invariant under the exchange of x and y")
    mu = product_measure_vector(u, torus).p
    wx = (bx - u[x]) / (u[x] * (1 - u[x]))
    wy = (by - u[y]) / (u[y] * (1 - u[y]))
    sxy = bx * (1 - by) / (u[x] * (1 - u[y]))
    lhs = np.dot(mu, h * (wy - wx) * f)
    t1 = np.dot(mu, h * sxy * (f[sw] - f))
    t2 = (u[y] - u[x]) * np.dot(mu, h * wx * wy * f)
    return float(lhs - t1 + t2)
