import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szegolab.geometry import make_sphere, normalize
from szegolab.quadrature import QuadratureSpec
from szegolab.reduction import (
    SingularLevel,
    UnsupportedReduction,
    dimension_table,
    group_isotropy,
    invariant_dim,
    lift_to_level_set,
    moment_gradient,
    moment_map,
    reduction_compare,
    reduction_pair,
    sigma_map,
    v_eff,
)

from conftest import random_sphere_point

S5 = ((1, 1, 1), (1, -1, 0))


@pytest.fixture(scope="module")
def pair():
    return reduction_pair(*S5)


def test_reduced_model(pair):
    assert sorted(pair.generators) == sorted([(0, 0, 1), (1, 1, 0)])
    assert sorted(pair.reduced.a) == [1, 2]
    assert pair.fixed_point_supports == ((2,),)


def test_moment_map_values():
    X = make_sphere((1, 1, 1))
    b = (1, -1, 0)
    assert moment_map(X, b, [1, 0, 0]) == pytest.approx(-1)
    assert moment_map(X, b, [0, 1, 0]) == pytest.approx(1)
    # the fixed point of the auxiliary circle sits on the zero level
    assert moment_map(X, b, [0, 0, 1]) == 0
    assert np.allclose(moment_gradient(X, b, np.array([0, 0, 1], dtype=complex)), 0, atol=1e-9)
    assert group_isotropy(b, [0, 0, 1]) == 0
    assert v_eff(X, b, [0, 0, 1]) == 0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 10_000))
def test_moment_map_is_invariant(seed):
    X = make_sphere((1, 2, 3))
    b = np.array([2, -1, 0])
    x = random_sphere_point(np.random.default_rng(seed), 3)
    mu = moment_map(X, b, x)
    assert moment_map(X, b, x * np.exp(0.7j * b)) == pytest.approx(mu, abs=1e-14)
    assert moment_map(X, b, X.act(x, 1.1)) == pytest.approx(mu, abs=1e-14)


def test_orbit_length():
    X = make_sphere((1, 1, 1))
    x = normalize(np.array([1, 1, 0], dtype=complex))
    assert v_eff(X, (1, -1, 0), x) == pytest.approx(2 * math.pi)
    assert v_eff(X, (2, -2, 0), x) == pytest.approx(2 * math.pi)
    assert group_isotropy((2, -2, 0), x) == 2


def test_invariant_dimensions(pair):
    assert invariant_dim((1, 1, 1), (1, -1, 0), 4) == 3
    assert invariant_dim((1, 1, 1), (1, -1, 0), 1) == 1
    for k, u, v in dimension_table(pair, 40):
        assert u == v == k // 2 + 1


def test_comparison_report(pair):
    rep = reduction_compare(pair, 100)
    assert rep.passed and rep.all_equal and rep.threshold == 0
    assert len(rep.table) == 101


def test_unsupported_inputs():
    with pytest.raises(SingularLevel):
        reduction_pair((1, 1, 1), (1, 1, 2))
    with pytest.raises(SingularLevel):
        reduction_pair((1, 1, 1), (1, 0, 2))
    with pytest.raises(UnsupportedReduction):
        reduction_pair((1, 1), (1, -1))
    with pytest.raises(ValueError):
        reduction_pair((1, 1, 1), (1, -1))


def test_other_weights_reduce():
    p = reduction_pair((1, 2, 1), (1, -1, 0))
    assert sorted(p.reduced.a) == [1, 3]
    assert reduction_compare(p, 60).all_equal


def test_lift_lands_on_the_level_set(pair, rng):
    X = make_sphere(pair.ambient)
    E = np.asarray(pair.generators)
    ared = np.asarray(pair.reduced.a, dtype=float)
    ys = np.stack([random_sphere_point(rng, 2) for _ in range(20)])
    xs = lift_to_level_set(pair, ys)
    assert np.allclose(np.linalg.norm(xs, axis=1), 1, atol=1e-12)
    assert np.max(np.abs(moment_map(X, pair.b, xs))) < 1e-12
    for x, y in zip(xs, ys):
        w = np.prod(x[None, :] ** E, axis=1)
        # y is a weighted dilation of the generator values
        log_t = (np.log(np.abs(y)) - np.log(np.abs(w))) / ared
        assert np.ptp(log_t) < 1e-10
        assert np.allclose(np.exp(1j * np.angle(w)), np.exp(1j * np.angle(y)), atol=1e-10)
    with pytest.raises(ValueError):
        lift_to_level_set(pair, [[1, 0]])


def test_sigma_is_injective_and_stable(pair):
    for k in (2, 6, 10):
        rep = sigma_map(pair, k)
        assert rep.dims == (k // 2 + 1, k // 2 + 1)
        assert rep.injective
        assert rep.stability < 1e-2
        assert 0 <= rep.projection_residual < 1
    with pytest.raises(ValueError):
        sigma_map(pair, 0)


def test_sigma_with_monte_carlo_rule(pair):
    rep = sigma_map(pair, 2, QuadratureSpec(samples=4000, seed=3))
    assert rep.injective
    assert rep.stability < 0.05
