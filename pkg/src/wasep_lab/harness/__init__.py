"""Experiment orchestration: configuration, replica farm, statistics and CLI."""
from .config import DEFAULTS, EXPERIMENTS, ExperimentConfig, load_config, make_config
from .experiments import (
    ExperimentResult,
    run,
    run_bg_decay,
    run_entropy_growth,
    run_equilibrium_clt,
    run_flow_sweep,
    run_hydro_rate,
    run_martingale,
    run_master_oracle,
    run_simulate,
    run_solve_pde,
)
from .stats import SummaryRow

__all__ = [
    "DEFAULTS",
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentResult",
    "SummaryRow",
    "load_config",
    "make_config",
    "run",
    "run_bg_decay",
    "run_entropy_growth",
    "run_equilibrium_clt",
    "run_flow_sweep",
    "run_hydro_rate",
    "run_martingale",
    "run_master_oracle",
    "run_simulate",
    "run_solve_pde",
]
