"""Hydrodynamic equation, its lattice discretisation and the backward semigroup.

The drift field ``F`` of the particle system enters through its values on the
dual lattice, ``F_b^n(x) = F(x/n + e_b/(2n)) . e_b``, stored as an array of
shape ``(N, d)``.  The semi-discrete hydrodynamic equation

    du_x/dt = (L^n u)_x
            = sum_b n^2 (u_{x+b} + u_{x-b} - 2 u_x)
              - n sum_b [J_b(x) - J_b(x - e_b)],
    J_b(x) = F_b^n(x) (u_x + u_{x+b} - 2 u_x u_{x+b}),

is a conservative, second-order accurate approximation of
``du/dt = Lap u - 2 div(u (1 - u) F)``; it is integrated with classical RK4.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .lattice import Torus

__all__ = [
    "VectorFieldSpec",
    "HydroTrajectory",
    "sample_dual_field",
    "discrete_generator_L",
    "lambda_n",
    "solve_hydro",
    "backward_semigroup",
    "eps1",
    "default_dt",
    "max_stable_dt",
    "profile",
]

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class VectorFieldSpec:
    """Smooth periodic vector field ``F`` given by a trigonometric table.

    Component ``i`` is ``sum_m cos_coef[k, i] cos(2 pi m_k . x) +
    sin_coef[k, i] sin(2 pi m_k . x)`` where ``m_k`` are the rows of
    ``modes``.  Use the class-method constructors rather than filling the
    table by hand.

    Attributes
    ----------
    d : int
    modes : ndarray, shape (K, d), integer wave vectors
    cos_coef, sin_coef : ndarray, shape (K, d)
    kind : str
        Label of the constructor used, kept for provenance.
    """

    d: int
    modes: np.ndarray
    cos_coef: np.ndarray
    sin_coef: np.ndarray
    kind: str = "fourier"

    # -- constructors -------------------------------------------------------
    @classmethod
    def zero(cls, d: int) -> "VectorFieldSpec":
        e = np.zeros((0, d))
        return cls(d, e.astype(np.int64), e, e, "zero")

    @classmethod
    def constant(cls, v: Sequence[float]) -> "VectorFieldSpec":
        v = np.asarray(v, dtype=float).reshape(1, -1)
        d = v.shape[1]
        return cls(d, np.zeros((1, d), dtype=np.int64), v, np.zeros_like(v), "constant")

    @classmethod
    def fourier(cls, d: int, terms) -> "VectorFieldSpec":
        """Field from ``terms = [(m, cos_vec, sin_vec), ...]``."""
        modes = np.array([t[0] for t in terms], dtype=np.int64).reshape(-1, d)
        c = np.array([t[1] for t in terms], dtype=float).reshape(-1, d)
        s = np.array([t[2] for t in terms], dtype=float).reshape(-1, d)
        return cls(d, modes, c, s, "fourier")

    @classmethod
    def gradient(cls, d: int, potential) -> "VectorFieldSpec":
        """``F = grad V`` for ``V = sum alpha cos(2 pi m.x) + beta sin(2 pi m.x)``.

        ``potential`` is a list of ``(m, alpha, beta)``.
        """
        terms = []
        for m, alpha, beta in potential:
            m = np.asarray(m, dtype=float).reshape(d)
            terms.append((m.astype(np.int64), TWO_PI * beta * m, -TWO_PI * alpha * m))
        spec = cls.fourier(d, terms)
        return cls(d, spec.modes, spec.cos_coef, spec.sin_coef, "gradient")

    @classmethod
    def rotational(cls, amplitude: float = 1.0) -> "VectorFieldSpec":
        """Divergence-free cellular flow in d=2.

        ``F = a (sin 2pi x cos 2pi y, -cos 2pi x sin 2pi y)``; its dual-lattice
        samples have exactly vanishing lattice divergence.
        """
        h = 0.5 * amplitude
        terms = [
            ((1, 1), (0.0, 0.0), (h, -h)),
            ((1, -1), (0.0, 0.0), (h, h)),
        ]
        spec = cls.fourier(2, terms)
        return cls(2, spec.modes, spec.cos_coef, spec.sin_coef, "rotational")

    @classmethod
    def sine(cls, d: int, amplitude: float = 1.0, axis: int = 0) -> "VectorFieldSpec":
        """``F = a sin(2 pi x_axis) e_axis`` (the default non-equilibrium drift)."""
        m = np.zeros(d, dtype=np.int64)
        m[axis] = 1
        s = np.zeros(d)
        s[axis] = amplitude
        spec = cls.fourier(d, [(m, np.zeros(d), s)])
        return cls(d, spec.modes, spec.cos_coef, spec.sin_coef, "sine")

    @classmethod
    def from_dict(cls, cfg: dict, d: int) -> "VectorFieldSpec":
        """Build from a config mapping such as ``{"kind": "sine", "amplitude": 1}``."""
        kind = cfg.get("kind", "zero")
        if kind == "zero":
            return cls.zero(d)
        if kind == "constant":
            return cls.constant(cfg["value"])
        if kind == "sine":
            return cls.sine(d, cfg.get("amplitude", 1.0), cfg.get("axis", 0))
        if kind == "rotational":
            if d != 2:
                raise ValueError("rotational preset exists only in d=2")
            return cls.rotational(cfg.get("amplitude", 1.0))
        if kind == "gradient":
            return cls.gradient(d, cfg["potential"])
        if kind == "fourier":
            return cls.fourier(d, cfg["terms"])
        raise ValueError(f"unknown field kind {kind!r}")

    # -- evaluation ---------------------------------------------------------
    def __call__(self, points) -> np.ndarray:
        """Evaluate ``F`` at points of shape ``(M, d)``; returns ``(M, d)``."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        phase = TWO_PI * x @ self.modes.T.astype(float)  # (M, K)
        return np.cos(phase) @ self.cos_coef + np.sin(phase) @ self.sin_coef

    def divergence(self, points) -> np.ndarray:
        x = np.atleast_2d(np.asarray(points, dtype=float))
        phase = TWO_PI * x @ self.modes.T.astype(float)
        m = TWO_PI * self.modes.astype(float)
        # d/dx_i of component i, summed over i
        cos_part = (m * self.sin_coef).sum(axis=1)
        sin_part = -(m * self.cos_coef).sum(axis=1)
        return np.cos(phase) @ cos_part + np.sin(phase) @ sin_part

    def jacobian(self, points) -> np.ndarray:
        """``J[:, i, j] = dF_i / dx_j``."""
        x = np.atleast_2d(np.asarray(points, dtype=float))
        phase = TWO_PI * x @ self.modes.T.astype(float)
        m = TWO_PI * self.modes.astype(float)
        a = np.einsum("pk,ki,kj->pij", np.cos(phase), self.sin_coef, m)
        b = np.einsum("pk,ki,kj->pij", np.sin(phase), -self.cos_coef, m)
        return a + b

    def _dense_grid(self, n: int) -> np.ndarray:
        g = Torus(self.d, 4 * n)
        return g.points()

    def sup_norm(self, n: int = 32) -> float:
        """``max |F|_inf`` over a grid of side ``4 n``."""
        if self.modes.shape[0] == 0:
            return 0.0
        return float(np.abs(self(self._dense_grid(n))).max())

    def div_sup_norm(self, n: int = 32) -> float:
        if self.modes.shape[0] == 0:
            return 0.0
        return float(np.abs(self.divergence(self._dense_grid(n))).max())

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "terms": [
                (m.tolist(), c.tolist(), s.tolist())
                for m, c, s in zip(self.modes, self.cos_coef, self.sin_coef)
            ],
        }


def sample_dual_field(spec: VectorFieldSpec, torus: Torus) -> np.ndarray:
    """Dual-lattice samples ``F_b^n(x) = F(x/n + e_b/(2n)) . e_b``, shape ``(N, d)``."""
    if spec.d != torus.d:
        raise ValueError("field and torus dimensions differ")
    pts = torus.points()
    out = np.empty((torus.size, torus.d))
    for b in range(torus.d):
        shifted = pts + 0.5 * np.eye(torus.d)[b] / torus.n
        out[:, b] = spec(shifted)[:, b]
    return out


def profile(torus: Torus, fn: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Sample a macroscopic profile ``fn`` at the points ``x / n``."""
    return np.asarray(fn(torus.points()), dtype=float).reshape(torus.size)


def discrete_generator_L(u: np.ndarray, Fdual: np.ndarray, torus: Torus) -> np.ndarray:
    """The lattice operator ``L^n u`` (diffusion plus conservative drift)."""
    n = torus.n
    out = np.zeros_like(u, dtype=float)
    for b in range(torus.d):
        up = u[torus.plus[b]]
        um = u[torus.minus[b]]
        flux = Fdual[:, b] * (u + up - 2.0 * u * up)
        out += n * n * (up + um - 2.0 * u) - n * (flux - flux[torus.minus[b]])
    return out


def lambda_n(f: np.ndarray, u: np.ndarray, Fdual: np.ndarray, torus: Torus) -> np.ndarray:
    """Linearised operator ``Lambda^n f`` around the profile ``u``.

    ``sum_b n^2 (f_{x+b} + f_{x-b} - 2 f_x)
      + (1 - 2u_{x+b}) F_b(x) n (f_{x+b} - f_x)
      + (1 - 2u_{x-b}) F_b(x-b) n (f_x - f_{x-b})``.
    """
    n = torus.n
    out = np.zeros_like(f, dtype=float)
    for b in range(torus.d):
        ip, im = torus.plus[b], torus.minus[b]
        fp, fm = f[ip], f[im]
        out += n * n * (fp + fm - 2.0 * f)
        out += (1.0 - 2.0 * u[ip]) * Fdual[:, b] * n * (fp - f)
        out += (1.0 - 2.0 * u[im]) * Fdual[im, b] * n * (f - fm)
    return out


def eps1(eps0: float, div_norm: float, T: float) -> float:
    """Lower bound kept by the hydrodynamic solution started in ``[eps0, 1 - eps0]``.

    Returns ``eps0 / (eps0 + (1 - eps0) exp(2 div_norm T))``.
    """
    if not 0.0 < eps0 <= 0.5:
        raise ValueError("eps0 must lie in (0, 1/2]")
    return eps0 / (eps0 + (1.0 - eps0) * math.exp(2.0 * div_norm * T))


def default_dt(torus: Torus, F_norm: float) -> float:
    """RK4 step ``0.2 / (2 d n^2 + 2 n |F|)``."""
    n, d = torus.n, torus.d
    return 0.2 / (2 * d * n * n + 2 * n * F_norm)


def max_stable_dt(torus: Torus, F_norm: float) -> float:
    """Largest accepted step.

    The Laplacian part has spectral radius ``4 d n^2`` and RK4 is stable for
    ``dt * rho <= 2.78``; the drift adds at most ``4 n |F|`` to the Gershgorin
    radius.  Half of that RK4 limit is accepted.
    """
    n, d = torus.n, torus.d
    return 1.39 / (4 * d * n * n + 4 * n * F_norm)


def _rk4_step(rhs, y, t, dt):
    k1 = rhs(t, y)
    k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1)
    k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2)
    k4 = rhs(t + dt, y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def _plan_steps(T: float, dt: float, save_dt: float | None) -> tuple[int, int, float]:
    """Return ``(n_saves, steps_per_save, dt_eff)`` with ``dt_eff <= dt``."""
    if T == 0:
        return 0, 1, dt
    if save_dt is None or save_dt <= 0:
        steps = max(1, math.ceil(T / dt - 1e-9))
        return steps, 1, T / steps
    n_saves = max(1, round(T / save_dt))
    if abs(n_saves * save_dt - T) > 1e-9 * max(1.0, T):
        raise ValueError("T must be an integer multiple of save_dt")
    per = max(1, math.ceil(save_dt / dt - 1e-9))
    return n_saves, per, T / (n_saves * per)


@dataclass
class HydroTrajectory:
    """Stored solution of the semi-discrete hydrodynamic equation.

    Attributes
    ----------
    torus : Torus
    Fdual : ndarray, shape (N, d)
    times : ndarray, shape (K,)
    values : ndarray, shape (K, N)
    rates : ndarray, shape (K, N)
        ``du/dt = L^n u`` at the stored times.
    dt : float
        Integration step actually used.
    """

    torus: Torus
    Fdual: np.ndarray
    times: np.ndarray
    values: np.ndarray
    rates: np.ndarray
    dt: float
    meta: dict = field(default_factory=dict)

    @property
    def T(self) -> float:
        return float(self.times[-1])

    def _locate(self, t: float) -> tuple[int, float]:
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise ValueError(f"time {t} outside the stored range")
        k = int(np.clip(np.searchsorted(self.times, t, side="right") - 1, 0, len(self.times) - 2))
        h = self.times[k + 1] - self.times[k]
        return k, (t - self.times[k]) / h

    def at(self, t: float) -> np.ndarray:
        """Profile at time ``t`` (cubic Hermite interpolation between stored steps)."""
        if len(self.times) == 1:
            return self.values[0].copy()
        k, s = self._locate(t)
        h = self.times[k + 1] - self.times[k]
        h00 = 2 * s**3 - 3 * s**2 + 1
        h10 = s**3 - 2 * s**2 + s
        h01 = -2 * s**3 + 3 * s**2
        h11 = s**3 - s**2
        return (
            h00 * self.values[k] + h10 * h * self.rates[k]
            + h01 * self.values[k + 1] + h11 * h * self.rates[k + 1]
        )

    def rate_at(self, t: float) -> np.ndarray:
        """``du/dt`` at time ``t`` (derivative of the Hermite interpolant)."""
        if len(self.times) == 1:
            return self.rates[0].copy()
        k, s = self._locate(t)
        h = self.times[k + 1] - self.times[k]
        d00 = (6 * s**2 - 6 * s) / h
        d10 = 3 * s**2 - 4 * s + 1
        d01 = (-6 * s**2 + 6 * s) / h
        d11 = 3 * s**2 - 2 * s
        return (
            d00 * self.values[k] + d10 * self.rates[k]
            + d01 * self.values[k + 1] + d11 * self.rates[k + 1]
        )

    def residual_at(self, t: float) -> np.ndarray:
        """``(L^n - d/dt) u`` at ``t``; vanishes at stored times up to solver error."""
        return discrete_generator_L(self.at(t), self.Fdual, self.torus) - self.rate_at(t)

    def to_csv(self, path) -> None:
        """Write rows ``t, site, u``."""
        K, N = self.values.shape
        t = np.repeat(self.times, N)
        site = np.tile(np.arange(N), K)
        np.savetxt(
            path,
            np.column_stack([t, site, self.values.ravel()]),
            delimiter=",",
            header="t,site,u",
            comments="",
            fmt=["%.12g", "%d", "%.17g"],
        )


def solve_hydro(
    u0: np.ndarray,
    spec: VectorFieldSpec,
    torus: Torus,
    T: float,
    dt: float | None = None,
    save_dt: float | None = None,
) -> HydroTrajectory:
    """Integrate ``du/dt = L^n u`` on ``[0, T]`` with RK4.

    Parameters
    ----------
    u0 : ndarray, shape (N,)
        Initial profile, strictly inside ``(0, 1)``.
    spec : VectorFieldSpec
    torus : Torus
    T : float
    dt : float, optional
        Requested step; defaults to :func:`default_dt`.  The step is shrunk so
        that saves fall exactly on the grid.
    save_dt : float, optional
        Spacing of stored times; every step is stored when omitted.

    Returns
    -------
    HydroTrajectory
    """
    u0 = np.asarray(u0, dtype=float).reshape(torus.size)
    if u0.min() <= 0.0 or u0.max() >= 1.0:
        raise ValueError("initial profile must take values strictly inside (0, 1)")
    if T < 0:
        raise ValueError("T must be nonnegative")
    F_norm = spec.sup_norm(torus.n)
    if dt is None:
        dt = default_dt(torus, F_norm)
    if dt <= 0 or dt > max_stable_dt(torus, F_norm) * (1 + 1e-12):
        raise ValueError(f"dt={dt} violates the stability bound {max_stable_dt(torus, F_norm):.3e}")
    Fdual = sample_dual_field(spec, torus)
    n_saves, per, h = _plan_steps(T, dt, save_dt)

    def rhs(_t, y):
        return discrete_generator_L(y, Fdual, torus)

    times = [0.0]
    vals = [u0.copy()]
    y = u0.copy()
    t = 0.0
    for k in range(n_saves):
        for _ in range(per):
            y = _rk4_step(rhs, y, t, h)
            t += h
        t = (k + 1) * per * h
        times.append(t)
        vals.append(y.copy())
    values = np.array(vals)
    rates = np.array([rhs(None, v) for v in values])
    eps0 = float(min(u0.min(), 1.0 - u0.max()))
    return HydroTrajectory(
        torus, Fdual, np.array(times), values, rates, h,
        meta={"eps0": eps0, "F_norm": F_norm, "div_norm": spec.div_sup_norm(torus.n)},
    )


def backward_semigroup(
    f: np.ndarray,
    s: float,
    t: float,
    traj: HydroTrajectory,
    dt: float | None = None,
    return_path: bool = False,
):
    """Solve ``dv/dr = -Lambda_r v`` backwards from ``v(t) = f`` down to ``r = s``.

    Parameters
    ----------
    f : ndarray, shape (N,)
    s, t : float
        ``s <= t``, both inside the stored range of ``traj``.
    traj : HydroTrajectory
        Supplies ``u(r)`` (interpolated) and the dual field.
    dt : float, optional
        Step; defaults to the trajectory's step.
    return_path : bool
        If true, also return the times and values of ``v`` on the step grid
        (ordered from ``s`` to ``t``).

    Returns
    -------
    v : ndarray
        ``P_{s,t} f``.
    """
    if s > t:
        raise ValueError("need s <= t")
    torus, Fdual = traj.torus, traj.Fdual
    v = np.asarray(f, dtype=float).copy()
    if t == s:
        return (v, np.array([t]), v[None, :].copy()) if return_path else v
    h0 = traj.dt if dt is None else dt
    steps = max(1, math.ceil((t - s) / h0 - 1e-9))
    h = (t - s) / steps

    def rhs(r, y):
        return lambda_n(y, traj.at(r), Fdual, torus)

    path = [v.copy()]
    r = t
    for k in range(steps):
        # integrate in reversed time tau = t - r: dv/dtau = Lambda_{t - tau} v
        k1 = rhs(r, v)
        k2 = rhs(r - 0.5 * h, v + 0.5 * h * k1)
        k3 = rhs(r - 0.5 * h, v + 0.5 * h * k2)
        k4 = rhs(r - h, v + h * k3)
        v = v + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        r = t - (k + 1) * h
        if return_path:
            path.append(v.copy())
    if return_path:
        times = t - h * np.arange(steps + 1)
        return v, times[::-1], np.array(path[::-1])
    return v
