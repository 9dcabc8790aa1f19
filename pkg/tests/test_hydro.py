"""Drift fields, lattice operators, the hydrodynamic solver and the backward semigroup."""
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from _oracles import consistency_errors, loglog_slope
from wasep_lab.hydro import (
    VectorFieldSpec,
    backward_semigroup,
    default_dt,
    discrete_generator_L,
    eps1,
    lambda_n,
    max_stable_dt,
    profile,
    sample_dual_field,
    solve_hydro,
)
from wasep_lab.lattice import Torus


# -- fields ------------------------------------------------------------------

def test_zero_field_samples():
    tor = Torus(2, 6)
    assert np.all(sample_dual_field(VectorFieldSpec.zero(2), tor) == 0)


def test_constant_field_samples():
    tor = Torus(2, 5)
    Fd = sample_dual_field(VectorFieldSpec.constant([0.7, 0.0]), tor)
    assert np.allclose(Fd[:, 0], 0.7) and np.allclose(Fd[:, 1], 0.0)


def test_sine_field_at_dual_point():
    Fd = sample_dual_field(VectorFieldSpec.sine(1, 1.0), Torus(1, 4))
    assert Fd[0, 0] == pytest.approx(math.sqrt(2) / 2, abs=1e-15)


def test_rotational_field_is_lattice_divergence_free():
    tor = Torus(2, 16)
    spec = VectorFieldSpec.rotational(1.5)
    Fd = sample_dual_field(spec, tor)
    div = sum(Fd[:, b] - Fd[tor.minus[b], b] for b in range(2))
    assert np.abs(div).max() < 1e-13
    assert spec.div_sup_norm(16) < 1e-12


@given(st.floats(-2, 2), st.floats(-2, 2), st.integers(-2, 2), st.integers(-2, 2))
def test_gradient_field_is_curl_free(alpha, beta, m1, m2):
    spec = VectorFieldSpec.gradient(2, [((m1, m2), alpha, beta)])
    pts = np.random.default_rng(0).random((20, 2))
    J = spec.jacobian(pts)
    assert np.allclose(J[:, 0, 1], J[:, 1, 0], atol=1e-9)


def test_spec_roundtrip_through_dict():
    spec = VectorFieldSpec.sine(2, 0.5, axis=1)
    again = VectorFieldSpec.from_dict({"kind": "fourier", "terms": spec.to_dict()["terms"]}, 2)
    pts = np.random.default_rng(1).random((10, 2))
    assert np.allclose(spec(pts), again(pts))


# -- operators ---------------------------------------------------------------

@pytest.mark.parametrize("d", [1, 2, 3])
def test_L_annihilates_constants_under_constant_drift(d):
    tor = Torus(d, 6)
    Fd = sample_dual_field(VectorFieldSpec.constant([0.4] * d), tor)
    assert np.abs(discrete_generator_L(np.full(tor.size, 0.3), Fd, tor)).max() < 1e-10


def test_L_without_drift_is_laplacian(ring32, rng):
    u = rng.uniform(0.1, 0.9, ring32.size)
    lap = 32 ** 2 * (np.roll(u, -1) + np.roll(u, 1) - 2 * u)
    assert np.allclose(discrete_generator_L(u, np.zeros((32, 1)), ring32), lap)


def test_lambda_kills_constants(ring32, rng, sine_field):
    Fd = sample_dual_field(sine_field, ring32)
    u = rng.uniform(0.1, 0.9, 32)
    assert np.abs(lambda_n(np.full(32, 2.5), u, Fd, ring32)).max() < 1e-9


def test_lambda_at_half_density_is_laplacian(ring32, rng, sine_field):
    Fd = sample_dual_field(sine_field, ring32)
    f = rng.normal(size=32)
    lap = 32 ** 2 * (np.roll(f, -1) + np.roll(f, 1) - 2 * f)
    assert np.allclose(lambda_n(f, np.full(32, 0.5), Fd, ring32), lap)


def test_consistency_orders():
    ns = [32, 64, 128, 256]
    eL, eLam = consistency_errors(ns)
    assert -2.2 <= loglog_slope(ns, eL) <= -1.8
    assert -2.2 <= loglog_slope(ns, eLam) <= -1.8


@given(st.integers(0, 2 ** 31))
def test_mass_is_conserved_by_L(seed):
    rng = np.random.default_rng(seed)
    tor = Torus(2, 5)
    Fd = rng.normal(size=(tor.size, 2))
    u = rng.uniform(0.05, 0.95, tor.size)
    assert abs(discrete_generator_L(u, Fd, tor).sum()) < 1e-9 * 25 * 25


# -- solver ------------------------------------------------------------------

@pytest.mark.parametrize(
    "eps0, div, T, expected",
    [(0.1, 0.0, 1.0, 0.1), (0.2, 1.0, 0.5, 0.2 / (0.2 + 0.8 * math.e)), (0.3, 5.0, 0.0, 0.3)],
)
def test_eps1_values(eps0, div, T, expected):
    assert eps1(eps0, div, T) == pytest.approx(expected, rel=1e-12)


def test_eps1_example_value():
    assert eps1(0.2, 1.0, 0.5) == pytest.approx(0.084224, abs=1e-6)


def test_eps1_rejects_bad_eps0():
    with pytest.raises(ValueError):
        eps1(0.7, 0.0, 1.0)


def test_constant_solution_under_divergence_free_drift():
    tor = Torus(2, 8)
    tr = solve_hydro(np.full(tor.size, 0.5), VectorFieldSpec.rotational(1.0), tor, 0.01)
    assert np.abs(tr.values - 0.5).max() < 1e-12


def test_heat_decay():
    tor = Torus(1, 128)
    u0 = profile(tor, lambda p: 0.5 + 0.25 * np.cos(2 * np.pi * p[:, 0]))
    tr = solve_hydro(u0, VectorFieldSpec.zero(1), tor, 0.05, save_dt=0.05)
    amp = 2 * np.mean((tr.values[-1] - 0.5) * np.cos(2 * np.pi * tor.points()[:, 0]))
    assert amp / 0.25 == pytest.approx(math.exp(-4 * np.pi ** 2 * 0.05), rel=0.01)


def test_mass_conservation_and_barrier(cos_profile, sine_field):
    tor = Torus(1, 64)
    u0 = cos_profile(tor, amp=0.35)
    T = 0.05
    tr = solve_hydro(u0, sine_field, tor, T, save_dt=0.005)
    mass = tr.values.sum(axis=1)
    assert np.abs(mass / mass[0] - 1).max() < 1e-9
    lo = eps1(tr.meta["eps0"], tr.meta["div_norm"], T)
    assert tr.values.min() >= lo - 1e-6 and tr.values.max() <= 1 - lo + 1e-6


def test_rejects_unstable_step(cos_profile):
    tor = Torus(1, 32)
    with pytest.raises(ValueError):
        solve_hydro(cos_profile(tor), VectorFieldSpec.zero(1), tor, 0.01, dt=2 * max_stable_dt(tor, 0.0))


@pytest.mark.parametrize("bad", [0.0, 1.0])
def test_rejects_degenerate_profile(bad):
    tor = Torus(1, 8)
    u0 = np.full(8, 0.5)
    u0[3] = bad
    with pytest.raises(ValueError):
        solve_hydro(u0, VectorFieldSpec.zero(1), tor, 0.01)


def test_default_step_is_stable():
    tor = Torus(3, 10)
    assert default_dt(tor, 2.0) < max_stable_dt(tor, 2.0)


def test_interpolation_hits_stored_values(cos_profile, sine_field):
    tor = Torus(1, 32)
    tr = solve_hydro(cos_profile(tor), sine_field, tor, 0.02, save_dt=0.005)
    for k, t in enumerate(tr.times):
        assert np.allclose(tr.at(t), tr.values[k])
    ref = solve_hydro(cos_profile(tor), sine_field, tor, 0.0075, dt=tr.dt / 4).values[-1]
    linear = 0.5 * (tr.values[1] + tr.values[2])
    err = np.abs(tr.at(0.0075) - ref).max()
    assert err < 1e-5
    assert err < 0.01 * np.abs(linear - ref).max()


# -- backward semigroup ------------------------------------------------------

@pytest.fixture
def heat_traj():
    tor = Torus(1, 128)
    u0 = profile(tor, lambda p: 0.5 + 0.2 * np.cos(2 * np.pi * p[:, 0]))
    return solve_hydro(u0, VectorFieldSpec.zero(1), tor, 0.02, save_dt=0.001)


def test_semigroup_preserves_constants(heat_traj):
    v = backward_semigroup(np.ones(128), 0.0, 0.02, heat_traj)
    assert np.abs(v - 1).max() < 1e-12


def test_semigroup_heat_closed_form(heat_traj):
    x = heat_traj.torus.points()[:, 0]
    v = backward_semigroup(np.cos(2 * np.pi * x), 0.005, 0.02, heat_traj)
    expected = math.exp(-4 * np.pi ** 2 * 0.015) * np.cos(2 * np.pi * x)
    assert np.abs(v - expected).max() <= 0.01 * np.abs(expected).max()


def test_semigroup_contraction(cos_profile, sine_field):
    tor = Torus(1, 32)
    tr = solve_hydro(cos_profile(tor), sine_field, tor, 0.02, save_dt=0.002)
    rng = np.random.default_rng(7)
    x = tor.points()[:, 0]
    for _ in range(50):
        a = rng.normal(size=3)
        f = a[0] * np.cos(2 * np.pi * x + a[1]) + a[2] * np.sin(4 * np.pi * x)
        v = backward_semigroup(f, 0.0, 0.02, tr)
        assert np.abs(v).max() <= np.abs(f).max() + 1e-8


def test_semigroup_property(cos_profile, sine_field):
    tor = Torus(1, 32)
    tr = solve_hydro(cos_profile(tor), sine_field, tor, 0.02, save_dt=0.002)
    f = np.sin(2 * np.pi * tor.points()[:, 0])
    direct = backward_semigroup(f, 0.004, 0.02, tr)
    split = backward_semigroup(backward_semigroup(f, 0.012, 0.02, tr), 0.004, 0.012, tr)
    assert np.abs(direct - split).max() < 1e-9


def test_semigroup_rejects_reversed_times(heat_traj):
    with pytest.raises(ValueError):
        backward_semigroup(np.ones(128), 0.02, 0.01, heat_traj)


def test_csv_columns(tmp_path, cos_profile):
    tor = Torus(1, 4)
    tr = solve_hydro(cos_profile(tor), VectorFieldSpec.zero(1), tor, 0.01, save_dt=0.005)
    tr.to_csv(tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "t,site,u"
    assert len(lines) == 1 + 3 * 4
