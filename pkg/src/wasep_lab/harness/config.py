"""Experiment configuration: defaults, validation, hashing."""
from __future__ import annotations

import copy
import hashlib
import json
import math
import dataclasses as dc
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any

import numpy as np

from ..hydro import VectorFieldSpec
from ..lattice import Torus

SQRT2 = math.sqrt(2.0)

EXPERIMENTS = (
    "hydro-rate", "clt", "martingale", "bg", "entropy", "flows", "simulate", "solve-pde", "master-oracle",
)

# Defaults per experiment; any key may be overridden from a config file or
# with ``--set key=value`` on the command line.
DEFAULTS: dict[str, dict[str, Any]] = {
    "hydro-rate": dict(
        d=1, n=[32, 64, 128, 256], T=0.05, replicas=200, seed=20240601,
        field={"kind": "sine", "amplitude": 1.0},
        u0={"kind": "cosine", "rho": 0.5, "amplitude": 0.2},
        test_function={"kind": "cosine", "amplitude": SQRT2},
        extra={"slope_window": [-0.65, -0.35]},
    ),
    "clt": dict(
        d=1, n=[256], T=0.1, replicas=2000, seed=20240602,
        field={"kind": "zero"},
        u0={"kind": "constant", "rho": 0.5},
        test_function={"kind": "cosine", "amplitude": SQRT2},
        extra={"variance_tolerance": 0.10, "ks_alpha": 0.01},
    ),
    "martingale": dict(
        d=1, n=[256], T=0.005, replicas=10000, seed=20240604,
        field={"kind": "zero"},
        u0={"kind": "constant", "rho": 0.5},
        test_function={"kind": "cosine", "amplitude": SQRT2},
        extra={"qv_tolerance": 0.05, "variance_ratio_window": [0.95, 1.05], "substeps": 8},
    ),
    "bg": dict(
        d=1, n=[64, 128, 256], T=0.05, replicas=400, seed=20240603,
        field={"kind": "sine", "amplitude": 1.0},
        u0={"kind": "cosine", "rho": 0.5, "amplitude": 0.2},
        test_function={"kind": "cosine", "amplitude": 1.0},
        extra={"direction": 0, "substeps": 16, "snapshots": 10},
    ),
    "entropy": dict(
        d=1, n=[6, 8, 10, 12], T=0.05, replicas=1, seed=0,
        field={"kind": "zero"},
        u0={"kind": "cosine", "rho": 0.5, "amplitude": 0.2},
        extra={"trend_slack": 0.20, "yau_tolerance": 1e-6, "stride": 1},
    ),
    "flows": dict(
        d=1, n=[], T=0.0, replicas=1, seed=0,
        extra={"dims": [1, 2, 3], "ell_max": {"1": 64, "2": 64, "3": 32}, "spread": 4.0},
    ),
    "simulate": dict(
        d=1, n=[64], T=0.01, replicas=1, seed=1,
        field={"kind": "sine", "amplitude": 1.0},
        u0={"kind": "cosine", "rho": 0.5, "amplitude": 0.2},
        extra={"snapshots": 11, "keep_events": True},
    ),
    "solve-pde": dict(
        d=1, n=[128], T=0.05, replicas=1, seed=0,
        field={"kind": "sine", "amplitude": 1.0},
        u0={"kind": "cosine", "rho": 0.5, "amplitude": 0.2},
        extra={"save_dt": 0.005},
    ),
    "master-oracle": dict(
        d=1, n=[8], T=0.05, replicas=1, seed=0,
        field={"kind": "sine", "amplitude": 1.0},
        u0={"kind": "cosine", "rho": 0.5, "amplitude": 0.2},
        extra={"adjoint_tolerance": 1e-10, "yau_tolerance": 1e-6},
    ),
}


@dataclass
class ExperimentConfig:
    """Validated parameters of one experiment run."""

    experiment: str
    d: int = 1
    n: list = dc.field(default_factory=list)
    T: float = 0.0
    dt: Any = "auto"
    field: dict = dc.field(default_factory=lambda: {"kind": "zero"})
    u0: dict = dc.field(default_factory=lambda: {"kind": "constant", "rho": 0.5})
    test_function: dict = dc.field(default_factory=lambda: {"kind": "cosine", "amplitude": SQRT2})
    replicas: int = 1
    seed: int = 0
    mode_cutoff: Any = None
    ell: Any = "auto"
    out: str = "out"
    workers: int = 1
    extra: dict = dc.field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def hash(self) -> str:
        """SHA-256 of the canonical JSON form, excluding run-location keys."""
        payload = self.to_dict()
        payload.pop("out", None)
        payload.pop("workers", None)
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"), default=_jsonable)
        return hashlib.sha256(blob.encode()).hexdigest()

    def validate(self) -> "ExperimentConfig":
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if self.d not in (1, 2, 3):
            raise ValueError("d must be 1, 2 or 3")
        if any(int(k) < 1 for k in self.n):
            raise ValueError("lattice sizes must be positive")
        if self.T < 0:
            raise ValueError("T must be nonnegative")
        if self.replicas < 1:
            raise ValueError("need at least one replica")
        if self.workers < 1:
            raise ValueError("need at least one worker")
        if not (self.dt == "auto" or (isinstance(self.dt, (int, float)) and self.dt > 0)):
            raise ValueError("dt must be 'auto' or a positive number")
        if not (self.ell == "auto" or (isinstance(self.ell, int) and self.ell >= 1)):
            raise ValueError("ell must be 'auto' or a positive integer")
        if self.experiment not in ("flows",):
            VectorFieldSpec.from_dict(self.field, self.d)
            u0_function(self.u0)
        if self.experiment == "hydro-rate" and len(self.n) < 4:
            raise ValueError("hydro-rate needs at least four lattice sizes")
        if self.experiment == "hydro-rate" and self.replicas < 2:
            raise ValueError("insufficient replicas for a standard error")
        return self

    # convenience ----------------------------------------------------------
    def field_spec(self) -> VectorFieldSpec:
        return VectorFieldSpec.from_dict(self.field, self.d)

    def torus(self, n: int) -> Torus:
        return Torus(self.d, int(n))

    def dt_value(self):
        return None if self.dt == "auto" else float(self.dt)


def _jsonable(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not serialisable: {type(obj)}")


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k == "extra":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def make_config(experiment: str, overrides: dict | None = None) -> ExperimentConfig:
    """Defaults for ``experiment`` updated with ``overrides``, validated."""
    if experiment not in DEFAULTS:
        raise ValueError(f"unknown experiment {experiment!r}")
    merged = _merge(DEFAULTS[experiment], overrides or {})
    merged.pop("experiment", None)
    known = set(ExperimentConfig.__dataclass_fields__)
    unknown = set(merged) - known
    if unknown:
        raise ValueError(f"unknown configuration keys: {sorted(unknown)}")
    return ExperimentConfig(experiment=experiment, **merged).validate()


def load_config(path, experiment: str | None = None) -> ExperimentConfig:
    """Read a JSON config file; ``experiment`` overrides the file's value."""
    data = json.loads(Path(path).read_text())
    name = experiment or data.get("experiment")
    if name is None:
        raise ValueError("config does not name an experiment")
    if experiment and data.get("experiment") not in (None, experiment):
        raise ValueError(f"config is for {data['experiment']!r}, not {experiment!r}")
    data.pop("experiment", None)
    return make_config(name, data)


# ---------------------------------------------------------------------------
# profile and test-function specifications
# ---------------------------------------------------------------------------

def _cos_profile(cfg: dict, base: float):
    amp = float(cfg.get("amplitude", 0.0))
    mode = int(cfg.get("mode", 1))
    axis = int(cfg.get("axis", 0))

    def fn(points):
        return base + amp * np.cos(2 * np.pi * mode * points[:, axis])

    return fn


def u0_function(cfg: dict):
    """Initial density profile from ``{"kind": "constant"|"cosine", ...}``."""
    kind = cfg.get("kind", "constant")
    rho = float(cfg.get("rho", 0.5))
    if kind == "constant":
        fn = lambda points: np.full(points.shape[0], rho)  # noqa: E731
        lo = hi = rho
    elif kind == "cosine":
        fn = _cos_profile(cfg, rho)
        a = abs(float(cfg.get("amplitude", 0.0)))
        lo, hi = rho - a, rho + a
    else:
        raise ValueError(f"unknown profile kind {kind!r}")
    if not (0.0 < lo and hi < 1.0):
        raise ValueError("initial profile must stay strictly inside (0, 1)")
    return fn


def test_function(cfg: dict):
    """Time-independent test function from ``{"kind": "cosine"|"sine"|"constant", ...}``."""
    kind = cfg.get("kind", "cosine")
    amp = float(cfg.get("amplitude", 1.0))
    mode = int(cfg.get("mode", 1))
    axis = int(cfg.get("axis", 0))
    if kind == "constant":
        return lambda points: np.full(points.shape[0], float(cfg.get("value", amp)))
    if kind == "cosine":
        return lambda points: amp * np.cos(2 * np.pi * mode * points[:, axis])
    if kind == "sine":
        return lambda points: amp * np.sin(2 * np.pi * mode * points[:, axis])
    if kind == "zero":
        return lambda points: np.zeros(points.shape[0])
    raise ValueError(f"unknown test function kind {kind!r}")


test_function.__test__ = False  # a factory, not a pytest test


def is_equilibrium(cfg: ExperimentConfig) -> bool:
    """True when the drift vanishes and the initial profile is constant."""
    return cfg.field.get("kind", "zero") == "zero" and cfg.u0.get("kind") == "constant"
