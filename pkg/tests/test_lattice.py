"""Torus geometry, box measures and sparse partitions."""
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from wasep_lab.lattice import (
    SiteSet,
    Torus,
    box_measures,
    is_sparse,
    sparse_partition,
    wrap,
)


@pytest.mark.parametrize(
    "d, n, site, offset, expected",
    [
        (1, 5, 4, [1], 0),
        (2, 3, (2, 2), [1, 0], (0, 2)),
        (2, 7, (3, 5), [0, 0], (3, 5)),
        (3, 4, (0, 0, 0), [-1, 0, 3], (3, 0, 3)),
    ],
)
def test_wrap_examples(d, n, site, offset, expected):
    tor = Torus(d, n)
    s = int(tor.encode(np.atleast_1d(site))) if d > 1 else site
    e = int(tor.encode(np.atleast_1d(expected))) if d > 1 else expected
    assert wrap(tor, s, offset) == e


def test_wrap_rejects_long_offsets():
    with pytest.raises(ValueError):
        wrap(Torus(1, 5), 0, [5])


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("n", [1, 2, 5, 8])
def test_encode_decode_roundtrip(d, n):
    tor = Torus(d, n)
    sites = np.arange(tor.size)
    assert np.array_equal(tor.encode(tor.decode(sites)), sites)
    assert tor.size == n ** d


def test_encode_decode_roundtrip_large():
    for d in (1, 2, 3):
        tor = Torus(d, 32)
        sites = np.arange(tor.size)
        assert np.array_equal(tor.encode(tor.decode(sites)), sites)


def test_row_major_order():
    tor = Torus(2, 4)
    assert tor.decode(1).tolist() == [0, 1]
    assert tor.decode(4).tolist() == [1, 0]


@given(st.integers(1, 3), st.integers(2, 9), st.data())
def test_shift_is_a_permutation(d, n, data):
    tor = Torus(d, n)
    off = data.draw(st.lists(st.integers(-n + 1, n - 1), min_size=d, max_size=d))
    perm = tor.shift(off)
    assert sorted(perm.tolist()) == list(range(tor.size))
    back = tor.shift([-o for o in off])
    assert np.array_equal(perm[back], np.arange(tor.size))


def test_siteset_rejects_duplicates():
    with pytest.raises(ValueError):
        SiteSet(Torus(1, 4), [0, 1, 1])


# -- box measures -----------------------------------------------------------

def test_q2_in_d1():
    _, q = box_measures(2, 1)
    assert [q.fraction((z,)) for z in range(3)] == [Fraction(1, 4), Fraction(1, 2), Fraction(1, 4)]


@pytest.mark.parametrize("d", [1, 2, 3])
def test_ell_one_is_point_mass(d):
    p, q = box_measures(1, d)
    assert p.total() == 1 and q.total() == 1
    assert p.fraction((0,) * d) == 1 and q.fraction((0,) * d) == 1


def test_q3_in_d2():
    _, q = box_measures(3, 2)
    w = q.weights
    assert q.total() == 1
    assert w.max() == pytest.approx(1 / 9)
    assert np.unravel_index(w.argmax(), w.shape) == (2, 2)


@pytest.mark.parametrize("d", [1, 2, 3])
def test_q_bounded_by_cube_volume(d):
    top = 64 if d < 3 else 24
    for ell in range(1, top + 1):
        p, q = box_measures(ell, d)
        assert q.total() == 1 and p.total() == 1
        # q(z) <= ell^-d  <=>  counts <= ell^d
        assert int(q.counts.max()) <= ell ** d
        assert q.side == 2 * ell - 1


@given(st.integers(1, 12), st.integers(1, 3))
def test_q_is_self_convolution(ell, d):
    p, q = box_measures(ell, d)
    if d == 1:
        conv = np.convolve(p.weights, p.weights)
    else:
        from scipy.signal import fftconvolve
        conv = fftconvolve(p.weights, p.weights)
    assert np.allclose(conv, q.weights, atol=1e-13)
    assert abs(q.weights.sum() - 1.0) < 1e-12


# -- sparse partitions -------------------------------------------------------

def _check_partition(tor, ell):
    classes = sparse_partition(tor, ell)
    allsites = np.concatenate([c.sites for c in classes])
    assert sorted(allsites.tolist()) == list(range(tor.size))
    assert all(is_sparse(tor, c.sites, ell) for c in classes)
    assert len(classes) <= (tor.d + 1) * ell ** tor.d
    return classes


@pytest.mark.parametrize("n, ell, bound", [(10, 3, 6), (8, 2, 4)])
def test_partition_examples(n, ell, bound):
    classes = _check_partition(Torus(1, n), ell)
    assert len(classes) <= bound


@pytest.mark.parametrize("d, n", [(1, 7), (2, 5), (3, 4)])
def test_ell_one_single_class(d, n):
    classes = sparse_partition(Torus(d, n), 1)
    assert len(classes) == 1 and len(classes[0]) == n ** d


def test_partition_handles_non_divisible_sides():
    # two far corners that a naive quotient recipe would put in one class
    tor = Torus(2, 5)
    _check_partition(tor, 2)


@pytest.mark.parametrize("n", [3, 4, 8])
def test_partition_rejects_large_scale(n):
    with pytest.raises(ValueError):
        sparse_partition(Torus(1, n), (n + 1) // 2)


@given(st.integers(1, 3), st.integers(3, 12), st.data())
def test_partition_property(d, n, data):
    if d == 3:
        n = min(n, 8)
    ell = data.draw(st.integers(1, (n - 1) // 2))
    _check_partition(Torus(d, n), ell)


def test_is_sparse_periodic_distance():
    tor = Torus(1, 10)
    assert not is_sparse(tor, [0, 9], 2)   # neighbours across the seam
    assert is_sparse(tor, [0, 5], 5)
