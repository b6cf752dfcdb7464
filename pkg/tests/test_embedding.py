import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szegolab.embedding import (
    BasePointError,
    base_point_free,
    coherent_state,
    embedding_sweep,
    fs_distance,
    immersion_check,
    injectivity_scan,
    kodaira_map,
    product_separation,
    sample_pairs,
)
from szegolab.geometry import make_sphere, normalize
from szegolab.hardy import build_basis
from szegolab.kernels import diagonal_value, orbit_distance

from conftest import random_sphere_point


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), phase=st.floats(-4, 4))
def test_fs_distance_properties(seed, phase):
    rng = np.random.default_rng(seed)
    p, q = random_sphere_point(rng, 3), random_sphere_point(rng, 3)
    d = fs_distance(p, q)
    assert 0 <= d <= math.pi / 2 + 1e-15
    assert d == pytest.approx(math.acos(min(1.0, abs(np.vdot(p, q)))), abs=1e-7)
    assert fs_distance(p, np.exp(1j * phase) * p) < 1e-7
    assert fs_distance(q, p) == pytest.approx(d, abs=1e-14)


def test_fs_distance_small_angles_are_accurate():
    p = np.array([1, 0], dtype=complex)
    q = np.array([math.cos(1e-9), math.sin(1e-9)], dtype=complex)
    assert fs_distance(p, q) == pytest.approx(1e-9, rel=1e-6)


def test_round_degree_one_map_is_the_hopf_quotient(rng):
    X = make_sphere((1, 1))
    b = build_basis((1, 1), 1)
    for _ in range(20):
        x, y = random_sphere_point(rng, 2), random_sphere_point(rng, 2)
        assert fs_distance(kodaira_map(b, x), kodaira_map(b, y)) == pytest.approx(
            orbit_distance(X, x, y), abs=1e-6)


def test_base_points():
    assert base_point_free((1, 2), 2)
    assert not base_point_free((1, 2), 3)
    assert base_point_free((2, 3), 6)
    with pytest.raises(BasePointError):
        kodaira_map(build_basis((1, 2), 3), [0, 1])
    with pytest.raises(BasePointError):
        kodaira_map(build_basis((2, 4), 3), [1, 0])


def test_pairs_cover_the_bins():
    X = make_sphere((1, 2))
    xs, ys, ds = sample_pairs(X, 200, seed=1)
    assert xs.shape == ys.shape == (200, 2)
    assert np.all(ds > 0.05)
    counts = np.histogram(ds, bins=[0.05, 0.2, 0.5, 1.0, math.pi / 2 + 1e-9])[0]
    assert np.all(counts > 0)


def test_injectivity_scan():
    X = make_sphere((1, 2))
    rep = injectivity_scan(X, 2, n_pairs=200, seed=3)
    assert rep.passed
    assert rep.base_point_failures == 0
    assert sum(rep.bin_counts) == 200
    with pytest.raises(ValueError):
        injectivity_scan(X, 3, n_pairs=200)
    with pytest.raises(ValueError):
        injectivity_scan(X, 2, n_pairs=50)


def test_immersion(rng):
    X = make_sphere((1, 2))
    for _ in range(5):
        x = random_sphere_point(rng, 2)
        rep = immersion_check(X, 4, x)
        assert rep.passed
        assert len(rep.singular_values) == 2
        assert rep.reeb_defect < 1e-6
    with pytest.raises(ValueError):
        immersion_check(X, 4, [0, 1])


def test_coherent_state_is_bounded_by_the_diagonal(rng):
    X = make_sphere((1, 2))
    x0 = random_sphere_point(rng, 2)
    b = build_basis((1, 2), 12)
    cs = coherent_state(b, x0)
    assert abs(cs(x0)[0]) == pytest.approx(cs.peak_value, rel=1e-12)
    # |u(y)| <= sqrt(Pi(y, y)) with equality only on the orbit of x0
    assert cs.peak_value * (1 - 1e-12) <= cs.sup_value
    assert cs.sup_value <= math.sqrt(diagonal_value(b, cs.sup_point)) * (1 + 1e-12)
    assert orbit_distance(X, cs.sup_point, x0) < 0.5


def test_coherent_state_on_round_sphere_peaks_at_center(rng):
    X = make_sphere((1, 1))
    x0 = random_sphere_point(rng, 2)
    cs = coherent_state(build_basis((1, 1), 12), x0)
    assert cs.sup_value == pytest.approx(cs.peak_value, rel=1e-8)
    assert orbit_distance(X, cs.sup_point, x0) < 1e-3
    with pytest.raises(BasePointError):
        coherent_state(build_basis((1, 2), 3), [0, 1])


def test_products_separate_whatever_the_lower_degree_separates():
    X = make_sphere((1, 2))
    xs, ys, _ = sample_pairs(X, 100, seed=5)
    for x, y in zip(xs, ys):
        s = product_separation(X, 2, 2, x, y)
        if s.sep_j > 1e-8:
            assert s.sep_products > 1e-10
            assert s.sep_sum > 1e-10


def test_embedding_sweep_small():
    sweep = embedding_sweep(make_sphere((1, 2)), K_max=4, n_pairs=100, n_points=10, seed=2)
    assert sweep.multiples == (1, 2, 3, 4)
    assert sweep.k_star == 1
    assert sweep.monotone
    assert all(m > 1e-6 for m in sweep.immersion_min)
