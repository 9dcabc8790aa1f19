"""Rates, product measures and the exclusion-process sampler."""
import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from wasep_lab.hydro import VectorFieldSpec
from wasep_lab.lattice import Torus
from wasep_lab.master import StateDistribution, forward_solve
from wasep_lab.wasep import (
    Configuration,
    Trajectory,
    build_rates,
    pack_bits,
    rates_from_dual,
    replica_seed,
    sample_profile_measure,
    simulate,
    unpack_bits,
)


# -- rates -------------------------------------------------------------------

@pytest.mark.parametrize(
    "n, F, fwd, bwd, capped",
    [(100, 0.5, 10050.0, 9950.0, False), (2, 10.0, 24.0, 2.0, True), (7, 0.0, 49.0, 49.0, False)],
)
def test_rate_formula(n, F, fwd, bwd, capped):
    rates = rates_from_dual(Torus(1, n), np.full((n, 1), F))
    assert np.allclose(rates.forward, fwd) and np.allclose(rates.backward, bwd)
    assert rates.cap_active is capped


@given(st.integers(2, 40), st.floats(-50, 50))
def test_rates_bounded_below(n, F):
    rates = rates_from_dual(Torus(1, n), np.full((n, 1), F))
    assert rates.forward.min() >= n * n / 2 and rates.backward.min() >= n * n / 2


@pytest.mark.parametrize("n", [4, 16, 64])
def test_build_rates_cap_inactive_for_large_n(n):
    rates = build_rates(VectorFieldSpec.sine(1, 2.0), Torus(1, n))
    assert not rates.cap_active


# -- product measures --------------------------------------------------------

@pytest.mark.parametrize("value, expected", [(1.0, 1), (0.0, 0)])
def test_degenerate_profiles(value, expected):
    tor = Torus(2, 5)
    cfg = sample_profile_measure(np.full(tor.size, value), tor, seed=3)
    assert np.all(cfg.occupancy == expected)


def test_half_density_concentration():
    tor = Torus(2, 64)
    dens = np.array([sample_profile_measure(np.full(tor.size, 0.5), tor, seed=s).occupancy.mean()
                     for s in range(100)])
    se = np.sqrt(0.25 / tor.size)
    assert abs(dens.mean() - 0.5) <= 3 * se / np.sqrt(100)
    assert np.all(np.abs(dens - 0.5) <= 4.5 * se)


def test_profile_sampling_is_seeded():
    tor = Torus(1, 50)
    u = np.linspace(0.1, 0.9, 50)
    a = sample_profile_measure(u, tor, 11, replica=2).occupancy
    b = sample_profile_measure(u, tor, 11, replica=2).occupancy
    c = sample_profile_measure(u, tor, 11, replica=3).occupancy
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_replica_seeds_distinct():
    seeds = {replica_seed(5, r) for r in range(1000)}
    assert len(seeds) == 1000


def test_configuration_rejects_bad_values():
    with pytest.raises(ValueError):
        Configuration(Torus(1, 3), np.array([0, 2, 1]))


# -- sampler -----------------------------------------------------------------

@pytest.mark.parametrize("fill", [0, 1])
def test_full_or_empty_never_moves(fill):
    tor = Torus(1, 10)
    eta = Configuration(tor, np.full(10, fill, dtype=np.uint8))
    tr = simulate(eta, build_rates(VectorFieldSpec.sine(1), tor), 0.5, 1, snapshot_times=[0, 0.2, 0.5])
    assert tr.n_events == 0
    assert np.all(tr.snapshots == fill)


def test_reproducible_given_seed():
    tor = Torus(1, 32)
    rates = build_rates(VectorFieldSpec.sine(1), tor)
    eta = sample_profile_measure(np.full(32, 0.4), tor, 1)
    a = simulate(eta, rates, 0.01, seed=9, replica=4)
    b = simulate(eta, rates, 0.01, seed=9, replica=4)
    c = simulate(eta, rates, 0.01, seed=9, replica=5)
    assert np.array_equal(a.event_times, b.event_times) and np.array_equal(a.event_to, b.event_to)
    assert not np.array_equal(a.final(), c.final()) or a.n_events != c.n_events


@pytest.mark.parametrize("d, n", [(1, 24), (2, 6), (3, 4)])
def test_events_are_legal_exclusion_moves(d, n):
    tor = Torus(d, n)
    rates = build_rates(VectorFieldSpec.constant([0.5] * d), tor)
    eta = sample_profile_measure(np.full(tor.size, 0.5), tor, 2)
    tr = simulate(eta, rates, 0.05, seed=4)
    assert np.all(np.diff(tr.event_times) > 0)
    occ = eta.occupancy.copy()
    neighbours = {(x, int(y)) for x in range(tor.size) for y in np.concatenate([tor.plus[:, x], tor.minus[:, x]])}
    for x, y in zip(tr.event_from, tr.event_to):
        assert occ[x] == 1 and occ[y] == 0 and (int(x), int(y)) in neighbours
        occ[x], occ[y] = 0, 1
    assert np.array_equal(occ, tr.final())
    assert occ.sum() == eta.count


def test_snapshots_match_replayed_events():
    tor = Torus(1, 40)
    rates = build_rates(VectorFieldSpec.sine(1), tor)
    eta = sample_profile_measure(np.full(40, 0.3), tor, 5)
    times = np.linspace(0, 0.02, 7)
    tr = simulate(eta, rates, 0.02, seed=6, snapshot_times=times)
    assert np.array_equal(tr.config_at(times), tr.snapshots)


def test_rejects_unsorted_snapshots():
    tor = Torus(1, 8)
    eta = sample_profile_measure(np.full(8, 0.5), tor, 1)
    with pytest.raises(ValueError):
        simulate(eta, build_rates(VectorFieldSpec.zero(1), tor), 1.0, 1, snapshot_times=[0.5, 0.2])


def test_bernoulli_invariance():
    """F=0 started from Bernoulli(rho): site marginals stay rho."""
    tor = Torus(1, 32)
    rho, R = 0.3, 500
    rates = build_rates(VectorFieldSpec.zero(1), tor)
    occ = np.array([
        simulate(sample_profile_measure(np.full(32, rho), tor, 8, r), rates, 0.05, 8,
                 snapshot_times=[0.05], keep_events=False, replica=r).final()
        for r in range(R)
    ], dtype=float)
    site_means = occ.mean(axis=0)
    se = np.sqrt(rho * (1 - rho) / R)
    # every site marginal within 3 SE (32 sites; Bonferroni-safe at 3.5)
    assert np.all(np.abs(site_means - rho) <= 3.5 * se)
    assert abs(occ.mean() - rho) <= 3 * se / np.sqrt(32) * 2


def test_seed_families_agree():
    """Two disjoint seed families give statistically indistinguishable densities."""
    tor = Torus(1, 16)
    rates = build_rates(VectorFieldSpec.sine(1), tor)
    u = np.full(16, 0.5)

    def fam(seed):
        return np.array([simulate(sample_profile_measure(u, tor, seed, r), rates, 0.02, seed,
                                  snapshot_times=[0.02], keep_events=False, replica=r).final()[0]
                         for r in range(500)], dtype=float)

    a, b = fam(100), fam(200)
    se = np.sqrt(a.var(ddof=1) / 500 + b.var(ddof=1) / 500)
    assert abs(a.mean() - b.mean()) <= 3 * se


def _single_particle_generator(rates):
    tor = rates.torus
    N = tor.size
    Q = np.zeros((N, N))
    for x in range(N):
        y = tor.plus[0, x]
        Q[x, y] += rates.forward[x, 0]
        Q[y, x] += rates.backward[x, 0]
    np.fill_diagonal(Q, -Q.sum(axis=1))
    return Q


@pytest.fixture(scope="module")
def single_particle():
    tor = Torus(1, 6)
    rates = build_rates(VectorFieldSpec.sine(1, 2.0), tor)
    eta = np.zeros(6, dtype=np.uint8)
    eta[0] = 1
    return tor, rates, Configuration(tor, eta)


def test_single_particle_exit_time(single_particle):
    tor, rates, eta = single_particle
    Q = _single_particle_generator(rates)
    # mean exit time from the transient state {0}: solve -Q_00 tau = 1
    tau = 1.0 / -Q[0, 0]
    R = 40000
    T = 20 * tau
    exits = np.array([simulate(eta, rates, T, 77, replica=r).event_times[0] for r in range(R)])
    assert exits.mean() == pytest.approx(tau, rel=0.02)


def test_single_particle_law_matches_master_solver(single_particle):
    tor, rates, eta = single_particle
    T = 0.02
    Q = _single_particle_generator(rates)
    p_exact = scipy.linalg.expm(Q.T * T) @ np.eye(6)[0]
    # the same law from the full state-space master equation
    p0 = np.zeros(2 ** 6)
    p0[1] = 1.0
    _, P = forward_solve(StateDistribution(tor, p0), rates, T)
    p_master = P[-1][[1 << x for x in range(6)]]
    assert np.allclose(p_master, p_exact, atol=1e-8)
    R = 20000
    pos = np.array([simulate(eta, rates, T, 78, snapshot_times=[T], keep_events=False,
                             replica=r).final().argmax() for r in range(R)])
    emp = np.bincount(pos, minlength=6) / R
    se = np.sqrt(p_exact * (1 - p_exact) / R)
    assert np.all(np.abs(emp - p_exact) <= 4 * se + 1e-12)


# -- serialisation -----------------------------------------------------------

@given(st.lists(st.integers(0, 1), min_size=1, max_size=200))
def test_pack_unpack_roundtrip(bits):
    occ = np.array(bits, dtype=np.uint8)
    assert np.array_equal(unpack_bits(pack_bits(occ), occ.size), occ)


def test_pack_bit_layout():
    occ = np.zeros(130, dtype=np.uint8)
    occ[[0, 3, 64, 129]] = 1
    w = pack_bits(occ)
    assert w.dtype == np.dtype("<u8") and w.size == 3
    assert int(w[0]) == (1 << 0) | (1 << 3)
    assert int(w[1]) == 1 and int(w[2]) == 1 << 1


def test_binary_and_csv(tmp_path):
    tor = Torus(2, 9)
    rates = build_rates(VectorFieldSpec.constant([1.0, -0.5]), tor)
    eta = sample_profile_measure(np.full(tor.size, 0.5), tor, 3)
    tr = simulate(eta, rates, 0.01, 3, snapshot_times=[0, 0.005, 0.01])
    back = Trajectory.from_binary(tr.to_binary())
    assert back.torus == tor and back.T == tr.T and back.seed == 3
    assert np.array_equal(back.snapshots, tr.snapshots)
    assert np.array_equal(back.snapshot_times, tr.snapshot_times)
    tr.to_csv(tmp_path / "t.csv")
    rows = np.loadtxt(tmp_path / "t.csv", delimiter=",", skiprows=1)
    assert rows.shape == (3 * 81, 3)
    assert np.array_equal(rows[:, 2].reshape(3, 81), tr.snapshots)


def test_binary_rejects_garbage():
    with pytest.raises(ValueError):
        Trajectory.from_binary(b"NOPE" + bytes(40))
