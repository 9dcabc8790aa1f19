"""Command-line entry point: ``wasep-lab <experiment> [options]``."""
from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

from .config import DEFAULTS, load_config, make_config
from .experiments import ExperimentResult, run
from .io import stamp_csv, write_manifest, write_table
from .stats import SummaryRow

_HELP = {
    "hydro-rate": "decay rate of the density error in n (Monte Carlo)",
    "clt": "variance and Gaussianity of the equilibrium fluctuation field",
    "martingale": "martingale mean/variance against the predictable quadratic variation",
    "bg": "decay of time-integrated quadratic fluctuations in n",
    "entropy": "exact relative entropy curves on small tori",
    "flows": "exact flow constructions and their energy bounds",
    "simulate": "sample and store one particle path",
    "solve-pde": "solve the lattice hydrodynamic equation",
    "master-oracle": "adjoint identity and entropy inequality by exact enumeration",
}


def write_result(result: ExperimentResult, outdir) -> list[Path]:
    """Write summary, detail tables, extra files and the manifest into ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    h = result.config.hash()
    files = [write_table(outdir / "summary.csv", SummaryRow.HEADER,
                         [r.as_tuple() for r in result.rows], h)]
    for name, (header, rows) in result.tables.items():
        files.append(write_table(outdir / f"{name}.csv", header, rows, h))
    for name, writer in result.writers.items():
        path = outdir / name
        writer(path)
        if path.suffix == ".csv":
            stamp_csv(path, h)
        files.append(path)
    files.append(write_manifest(outdir, result.config, files, result.checks))
    return files


def _parse_set(items) -> dict:
    out = {}
    for item in items or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise SystemExit(f"--set expects KEY=VALUE, got {item!r}")
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        if key.startswith("extra."):
            out.setdefault("extra", {})[key[6:]] = val
        else:
            out[key] = val
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wasep-lab",
        description="Simulation and verification experiments for the weakly asymmetric exclusion process.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)
    for name, defaults in DEFAULTS.items():
        sp = sub.add_parser(
            name, help=_HELP.get(name, ""),
            description=_HELP.get(name, ""),
            epilog="defaults: " + json.dumps(defaults, sort_keys=True),
        )
        sp.add_argument("--config", type=Path, help="JSON config file (keys as in the defaults)")
        sp.add_argument("--seed", type=int, help="master seed (unsigned 64-bit)")
        sp.add_argument("--out", type=Path, default=None, help="output directory (default out/<experiment>)")
        sp.add_argument("--workers", type=int, default=None, help="worker processes for replicas")
        sp.add_argument("--deterministic", action="store_true",
                        help="single worker, fixed reduction order")
        sp.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key (JSON value); extra.KEY for experiment options")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = _parse_set(args.set)
    if args.config is not None:
        cfg = load_config(args.config, args.experiment)
        if overrides:
            base = cfg.to_dict()
            base.pop("experiment")
            extra = {**base["extra"], **overrides.pop("extra", {})}
            base.update(overrides, extra=extra)
            cfg = make_config(args.experiment, base)
    else:
        cfg = make_config(args.experiment, overrides)
    if args.seed is not None:
        if not 0 <= args.seed < 2 ** 64:
            raise SystemExit("--seed must be an unsigned 64-bit integer")
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.deterministic:
        cfg.workers = 1
    cfg.out = str(args.out if args.out is not None else Path("out") / args.experiment)
    cfg.validate()
    t0 = time.perf_counter()
    result = run(cfg)
    files = write_result(result, cfg.out)
    for r in result.rows:
        se = "" if r.se != r.se else f" ± {r.se:.3g}"
        print(f"{r.parameter:>14}  {r.statistic:<28} {r.value:.6g}{se}")
    for name, ok in result.checks.items():
        print(f"[{'PASS' if ok else 'FAIL'}] {name}")
    print(f"config hash {cfg.hash()[:16]}; {len(files)} files in {cfg.out}; "
          f"{time.perf_counter() - t0:.1f} s")
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
