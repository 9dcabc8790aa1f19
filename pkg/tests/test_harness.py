"""Experiment configuration, statistics, output files and the command line."""
import json
import math

import numpy as np
import pytest

from wasep_lab.harness import DEFAULTS, EXPERIMENTS, SummaryRow, load_config, make_config, run
from wasep_lab.harness.cli import build_parser, main
from wasep_lab.harness.config import is_equilibrium, test_function, u0_function
from wasep_lab.harness.farm import run_replicas
from wasep_lab.harness.io import ConfigHashMismatch, read_table, verify_manifest, write_table
from wasep_lab.harness.stats import batch_se, ks_normal, loglog_slope, mean_se, variance_se


# -- configuration -----------------------------------------------------------

def test_every_experiment_has_defaults():
    assert set(DEFAULTS) == set(EXPERIMENTS)
    for name in EXPERIMENTS:
        assert make_config(name).experiment == name


@pytest.mark.parametrize("override", [
    {"d": 4},
    {"T": -1.0},
    {"replicas": 0},
    {"dt": -0.1},
    {"ell": 0},
    {"n": [32, 64]},
    {"u0": {"kind": "cosine", "rho": 0.9, "amplitude": 0.2}},
    {"field": {"kind": "vortex"}},
    {"bogus": 1},
])
def test_invalid_configs_rejected(override):
    name = "hydro-rate"
    with pytest.raises(ValueError):
        make_config(name, override)


def test_hydro_rate_needs_replicas_for_se():
    with pytest.raises(ValueError):
        make_config("hydro-rate", {"replicas": 1})


def test_hash_ignores_location_but_not_physics():
    a = make_config("bg")
    b = make_config("bg", {"out": "elsewhere", "workers": 4})
    c = make_config("bg", {"seed": 1})
    assert a.hash() == b.hash() != c.hash()
    assert len(a.hash()) == 64


def test_extra_overrides_merge():
    cfg = make_config("bg", {"extra": {"substeps": 4}})
    assert cfg.extra["substeps"] == 4 and cfg.extra["snapshots"] == 10


def test_load_config_roundtrip(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps({"experiment": "entropy", "n": [6, 8]}))
    cfg = load_config(path)
    assert cfg.n == [6, 8] and cfg.T == DEFAULTS["entropy"]["T"]
    with pytest.raises(ValueError):
        load_config(path, "flows")


def test_profile_and_test_function_factories():
    pts = np.linspace(0, 1, 8, endpoint=False)[:, None]
    assert np.allclose(u0_function({"kind": "constant", "rho": 0.3})(pts), 0.3)
    assert np.allclose(test_function({"kind": "sine", "amplitude": 2.0})(pts), 2 * np.sin(2 * np.pi * pts[:, 0]))
    assert not test_function({"kind": "zero"})(pts).any()
    with pytest.raises(ValueError):
        test_function({"kind": "bump"})
    assert is_equilibrium(make_config("clt")) and not is_equilibrium(make_config("bg"))


# -- statistics --------------------------------------------------------------

def test_summary_row_requires_se_for_replicated_statistics():
    with pytest.raises(ValueError):
        SummaryRow("x", "n=8", "mean", 1.0, float("nan"), 10)
    with pytest.raises(ValueError):
        SummaryRow("x", "n=8", "mean", 1.0, 0.0, 10)
    row = SummaryRow("x", "n=8", "mean", 1.0, 0.1, 10)
    assert row.as_tuple() == ("x", "n=8", "mean", 1.0, 0.1, 10)
    assert math.isnan(SummaryRow("x", "p", "s", 2).se)


def test_mean_and_variance_errors(rng):
    x = rng.normal(2.0, 3.0, 20000)
    m, se = mean_se(x)
    assert se == pytest.approx(3 / math.sqrt(x.size), rel=0.02)
    v, vse = variance_se(x)
    assert vse == pytest.approx(9 * math.sqrt(2 / x.size), rel=0.05)
    assert abs(v - 9) < 4 * vse


def test_batch_se_of_a_mean(rng):
    x = rng.normal(size=4000)
    val, se = batch_se(np.mean, x, batches=40)
    assert val == pytest.approx(x.mean())
    assert se == pytest.approx(1 / math.sqrt(4000), rel=0.3)
    with pytest.raises(ValueError):
        batch_se(np.mean, x[:3])


def test_loglog_slope_exact_power():
    fit = loglog_slope([1, 2, 4, 8], [3.0, 1.5, 0.75, 0.375])
    assert fit.slope == pytest.approx(-1.0) and fit.slope_se < 1e-12
    fit2 = loglog_slope([1, 2, 4, 8], [3.0, 1.5, 0.75, 0.375], y_se=[0.3, 0.15, 0.075, 0.0375])
    assert fit2.slope_se > 0


def test_ks_normal(rng):
    _, p = ks_normal(rng.normal(scale=2.0, size=2000))
    assert p > 0.01
    _, p = ks_normal(rng.exponential(size=2000))
    assert p < 1e-6


# -- replica farm ------------------------------------------------------------

def _draw(payload, indices):
    return [float(np.random.default_rng([payload, r]).normal()) for r in indices]


def test_farm_order_independent_of_workers():
    a = run_replicas(_draw, 7, 50, workers=1)
    b = run_replicas(_draw, 7, 50, workers=2)
    assert a == b


def test_farm_rejects_empty():
    with pytest.raises(ValueError):
        run_replicas(_draw, 0, 0)


# -- output files ------------------------------------------------------------

def test_table_hash_checked(tmp_path):
    path = write_table(tmp_path / "t.csv", ("a", "b"), [(1, 0.5)], "abc")
    header, rows = read_table(path, "abc")
    assert header == ["a", "b"] and rows == [["1", "0.5"]]
    with pytest.raises(ConfigHashMismatch):
        read_table(path, "def")
    (tmp_path / "u.csv").write_text("a,b\n1,2\n")
    with pytest.raises(ConfigHashMismatch):
        read_table(tmp_path / "u.csv")


def _small_hydro(tmp_path, *extra):
    return ["hydro-rate", "--out", str(tmp_path), "--set", "n=[16,20,24,32]", "--set", "T=0.01",
            "--set", "replicas=40", *extra]


def test_cli_writes_stamped_outputs(tmp_path, capsys):
    main(_small_hydro(tmp_path))
    out = capsys.readouterr().out
    assert "config hash" in out
    man = verify_manifest(tmp_path)
    assert {"summary.csv", "hydro_rate.csv"} <= set(man["files"])
    assert man["versions"]["numpy"] == np.__version__
    header, rows = read_table(tmp_path / "summary.csv", man["config_hash"])
    assert header == list(SummaryRow.HEADER) and rows


def test_tampered_output_fails_verification(tmp_path):
    main(_small_hydro(tmp_path))
    summary = tmp_path / "summary.csv"
    text = summary.read_text().splitlines()
    text[0] = "# config_hash=" + "0" * 64
    summary.write_text("\n".join(text) + "\n")
    with pytest.raises(ConfigHashMismatch):
        verify_manifest(tmp_path)


def test_cli_exit_code_reflects_checks(tmp_path):
    ok = main(["entropy", "--out", str(tmp_path / "a"), "--set", "n=[6,8]"])
    bad = main(["entropy", "--out", str(tmp_path / "b"), "--set", "n=[6,8]",
                "--set", "extra.yau_tolerance=-1"])
    assert ok == 0 and bad == 1


def test_cli_flows_subset(tmp_path, capsys):
    code = main(["flows", "--out", str(tmp_path), "--set", 'extra.ell_max={"1": 16, "2": 8, "3": 6}'])
    assert code == 0
    assert "[PASS] d=3: divergences exact" in capsys.readouterr().out


def test_cli_config_file_and_seed(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"n": [16], "T": 0.002}))
    assert main(["simulate", "--config", str(cfg), "--seed", "5", "--out", str(tmp_path / "o")]) == 0
    man = json.loads((tmp_path / "o" / "manifest.json").read_text())
    assert man["config"]["seed"] == 5 and man["config"]["n"] == [16]
    with pytest.raises(SystemExit):
        main(["simulate", "--seed", str(2 ** 64), "--out", str(tmp_path / "p")])


def test_help_lists_defaults():
    sub = build_parser()._subparsers._group_actions[0].choices
    assert set(sub) == set(EXPERIMENTS)
    assert '"replicas": 400' in sub["bg"].epilog


def test_deterministic_reproduction(tmp_path):
    main(_small_hydro(tmp_path / "a", "--deterministic"))
    main(_small_hydro(tmp_path / "b", "--workers", "2"))
    assert (tmp_path / "a" / "summary.csv").read_text() == (tmp_path / "b" / "summary.csv").read_text()


# -- experiments at reduced size ---------------------------------------------

def _small(name, **kw):
    return make_config(name, kw)


def test_equilibrium_hydro_error_is_centred():
    cfg = _small("hydro-rate", n=[16, 20, 24, 32], T=0.01, replicas=400,
                 field={"kind": "zero"}, u0={"kind": "constant", "rho": 0.5},
                 extra={"check_slope_at_equilibrium": False})
    res = run(cfg)
    assert res.passed and len(res.checks) == 4


def test_doubling_replicas_halves_squared_error():
    base = dict(n=[16, 20, 24, 32], T=0.01)
    r1 = run(_small("hydro-rate", replicas=1000, **base))
    r2 = run(_small("hydro-rate", replicas=2000, **base))
    for n in base["n"]:
        se1 = r1.stat(f"n={n}", "mean_abs_error").se
        se2 = r2.stat(f"n={n}", "mean_abs_error").se
        assert se1 ** 2 / se2 ** 2 == pytest.approx(2.0, rel=0.2)


def test_bg_zero_test_function():
    res = run(_small("bg", n=[16, 32], replicas=4, T=0.005, test_function={"kind": "zero"},
                     extra={"snapshots": 2, "substeps": 2}))
    assert res.passed
    assert all(r.value == 0.0 for r in res.rows if r.statistic == "mean_abs_integral")


def test_bg_equilibrium_centred():
    res = run(_small("bg", n=[16, 32], replicas=200, T=0.005, field={"kind": "zero"},
                     u0={"kind": "constant", "rho": 0.5}, test_function={"kind": "sine", "amplitude": 1.0},
                     extra={"snapshots": 2, "substeps": 4}))
    assert res.checks["n=16: mean within 3 SE of 0"] and res.checks["n=32: mean within 3 SE of 0"]


def test_entropy_at_equilibrium_vanishes():
    res = run(_small("entropy", n=[6, 8], u0={"kind": "constant", "rho": 0.5}))
    assert res.passed
    assert res.checks["n=6: H identically 0"]


def test_small_clt_rows():
    res = run(_small("clt", n=[32], T=0.01, replicas=300))
    assert res.stat("n=32", "target_variance").value == pytest.approx(0.25)
    assert res.checks["n=32: stationarity of the limit variance"]
    assert res.checks["n=32: t=0 variance within 3 SE"]


@pytest.mark.parametrize("name", ["simulate", "solve-pde", "master-oracle"])
def test_single_run_experiments_pass(name, tmp_path):
    assert main([name, "--out", str(tmp_path)]) == 0
