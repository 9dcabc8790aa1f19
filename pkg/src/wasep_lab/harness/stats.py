"""Replica statistics: means, batch standard errors, slope fits, normality."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _st


@dataclass
class SummaryRow:
    """One line of ``summary.csv``.

    A statistic estimated from more than one replica must carry a positive
    standard error.
    """

    experiment: str
    parameter: str
    statistic: str
    value: float
    se: float = float("nan")
    replicas: int = 1

    def __post_init__(self):
        self.value = float(self.value)
        self.se = float(self.se)
        self.replicas = int(self.replicas)
        if self.replicas > 1 and not (self.se > 0):
            raise ValueError(f"{self.statistic} at {self.parameter}: SE must be positive")

    HEADER = ("experiment", "parameter", "statistic", "value", "se", "replicas")

    def as_tuple(self) -> tuple:
        return (self.experiment, self.parameter, self.statistic, self.value, self.se, self.replicas)


def mean_se(x) -> tuple[float, float]:
    """Sample mean and its standard error (``nan`` for a single sample)."""
    x = np.asarray(x, dtype=float)
    if x.size == 0:
        raise ValueError("no samples")
    if x.size == 1:
        return float(x[0]), float("nan")
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(x.size))


def variance_se(x) -> tuple[float, float]:
    """Unbiased sample variance and its large-sample standard error.

    Uses ``Var(s^2) ~ (m4 - s^4 (R-3)/(R-1)) / R`` with the sample fourth
    central moment ``m4``.
    """
    x = np.asarray(x, dtype=float)
    R = x.size
    if R < 4:
        raise ValueError("need at least four samples for a variance error")
    s2 = float(x.var(ddof=1))
    m4 = float(np.mean((x - x.mean()) ** 4))
    v = (m4 - s2 * s2 * (R - 3) / (R - 1)) / R
    return s2, math.sqrt(max(v, 0.0))


def batch_se(stat, *samples, batches: int = 20) -> tuple[float, float]:
    """Statistic on all replicas plus a standard error from replica batches.

    ``stat(*arrays)`` is evaluated on the full sample and on ``batches``
    contiguous blocks of replicas; the spread of the block values divided by
    ``sqrt(batches)`` estimates the error of the full-sample value.
    """
    arrays = [np.asarray(s) for s in samples]
    R = arrays[0].shape[0]
    if any(a.shape[0] != R for a in arrays):
        raise ValueError("samples must share the replica axis")
    batches = min(batches, R // 2)
    if batches < 2:
        raise ValueError("insufficient replicas for batching")
    value = float(stat(*arrays))
    edges = np.linspace(0, R, batches + 1).astype(int)
    vals = np.array([stat(*(a[lo:hi] for a in arrays)) for lo, hi in zip(edges[:-1], edges[1:])])
    return value, float(vals.std(ddof=1) / math.sqrt(batches))


@dataclass
class SlopeFit:
    slope: float
    intercept: float
    slope_se: float
    residuals: np.ndarray


def loglog_slope(x, y, y_se=None) -> SlopeFit:
    """Ordinary least squares of ``log y`` on ``log x``.

    ``slope_se`` combines the regression residual error with the propagated
    point errors ``y_se / y`` when these are given (the larger is reported).
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2 or np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("need at least two positive points")
    lx, ly = np.log(x), np.log(y)
    X = np.column_stack([np.ones_like(lx), lx])
    coef, *_ = np.linalg.lstsq(X, ly, rcond=None)
    resid = ly - X @ coef
    xc = lx - lx.mean()
    sxx = float(np.sum(xc ** 2))
    dof = x.size - 2
    se_fit = math.sqrt(float(np.sum(resid ** 2)) / dof / sxx) if dof > 0 else 0.0
    se_prop = 0.0
    if y_se is not None:
        rel = np.asarray(y_se, dtype=float) / y
        se_prop = math.sqrt(float(np.sum((xc / sxx) ** 2 * rel ** 2)))
    return SlopeFit(float(coef[1]), float(coef[0]), max(se_fit, se_prop), resid)


def ks_normal(samples, sigma: float | None = None, mean: float = 0.0) -> tuple[float, float]:
    """Kolmogorov-Smirnov test against ``N(mean, sigma^2)``.

    ``sigma`` defaults to the sample standard deviation (fitted variance).
    Returns ``(statistic, p_value)``.
    """
    x = np.asarray(samples, dtype=float)
    if sigma is None:
        sigma = float(x.std(ddof=1))
    res = _st.kstest(x, "norm", args=(mean, sigma))
    return float(res.statistic), float(res.pvalue)
