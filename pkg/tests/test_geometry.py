import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szegolab.geometry import (
    InvalidPointError,
    WeightVector,
    check_contact,
    exact_geometric_integral,
    geometric_integral,
    isotropy_order,
    levi_data,
    make_sphere,
    normalize,
    stratification,
)
from szegolab.quadrature import QuadratureSpec, uniform_sphere_samples

from conftest import random_sphere_point

weights_st = st.lists(st.integers(1, 6), min_size=2, max_size=4).map(tuple)


def point_st(dim):
    comp = st.floats(-1, 1, allow_nan=False)
    return st.lists(st.tuples(comp, comp), min_size=dim, max_size=dim).filter(
        lambda v: sum(a * a + b * b for a, b in v) > 1e-2
    ).map(lambda v: normalize(np.array([complex(a, b) for a, b in v])))


# ---------------------------------------------------------------- construction


def test_weight_vector_validation():
    assert WeightVector.parse("1, 2,3").a == (1, 2, 3)
    assert WeightVector((2, 4)).n == 1
    for bad in [(1,), (0, 1), (-1, 2)]:
        with pytest.raises(ValueError):
            WeightVector(bad)
    with pytest.raises(ValueError):
        WeightVector.parse("1,a")
    with pytest.raises(ValueError):
        make_sphere(())


def test_round_sphere_is_free():
    X = make_sphere((1, 1))
    assert stratification(X).ell_values == (1,)
    x = np.array([0.6, 0.8j])
    assert np.allclose(X.act(x, 2 * math.pi), x)
    assert isotropy_order(X, x) == 1


def test_scaled_weights_share_stratification_up_to_gcd():
    s12, s24 = stratification(make_sphere((1, 2))), stratification(make_sphere((2, 4)))
    assert s24.ell_values == tuple(2 * v for v in s12.ell_values)
    assert s24.ell0 == 2


@pytest.mark.parametrize("a,x,ell", [((1, 2), (0, 1), 2), ((1, 2), (1, 0), 1), ((1, 1), (0.6, 0.8), 1)])
def test_isotropy_examples(a, x, ell):
    X = make_sphere(a)
    assert isotropy_order(X, np.array(x, dtype=complex)) == ell
    # e^{2 pi i / ell} fixes the point
    assert np.allclose(X.act(np.array(x, dtype=complex), 2 * math.pi / ell), x)


def test_isotropy_rejects_bad_points():
    X = make_sphere((1, 2))
    with pytest.raises(InvalidPointError):
        isotropy_order(X, np.array([1.0, 1.0]))


@pytest.mark.parametrize(
    "a,ells,ell0,p",
    [((1, 2), (1, 2), 1, 2), ((1, 1), (1,), 1, 1), ((1, 2, 3), (1, 2, 3), 1, 6), ((4, 6), (2, 4, 6), 2, 12)],
)
def test_stratification_examples(a, ells, ell0, p):
    s = stratification(make_sphere(a))
    assert (s.ell_values, s.ell0, s.p) == (ells, ell0, p)
    assert s.ell0 == min(s.ell_values)
    assert all(v % s.ell0 == 0 and s.p % v == 0 for v in s.ell_values)


def test_random_points_are_generic():
    X = make_sphere((2, 4, 6))
    z = uniform_sphere_samples(3, 10_000, seed=2)
    assert {isotropy_order(X, x) for x in z} == {2}


@settings(max_examples=60, deadline=None)
@given(a=weights_st, data=st.data())
def test_isotropy_divides_p(a, data):
    X = make_sphere(a)
    x = data.draw(point_st(len(a)))
    ell = isotropy_order(X, x)
    s = stratification(X)
    assert s.p % ell == 0 and ell % s.ell0 == 0


@settings(max_examples=60, deadline=None)
@given(a=weights_st, theta=st.floats(-10, 10), data=st.data())
def test_contact_scaling_is_action_invariant(a, theta, data):
    X = make_sphere(a)
    x = data.draw(point_st(len(a)))
    assert X.s_a(X.act(x, theta)) == pytest.approx(X.s_a(x), rel=1e-14)


# ---------------------------------------------------------------- Levi data


def test_levi_round():
    X = make_sphere((1, 1))
    d = levi_data(X, np.array([0.6, 0.8j]))
    assert d.levi_eigenvalues == (0.5,)
    assert d.det_levi == 0.5 and d.vol_density == 1.0


def test_levi_weighted_singular_point():
    d = levi_data(make_sphere((1, 2)), np.array([0, 1], dtype=complex))
    assert (d.f, d.det_levi, d.vol_density) == (0.5, 0.25, 0.5)


def test_closed_and_frame_paths_agree(rng):
    for a in [(1, 1), (1, 2), (2, 3, 5)]:
        X = make_sphere(a)
        for _ in range(100 // 3 + 1):
            x = random_sphere_point(rng, X.dim)
            c, f = levi_data(X, x), levi_data(X, x, method="frame")
            assert np.allclose(c.levi_eigenvalues, f.levi_eigenvalues, atol=1e-6)
            assert c.det_levi == pytest.approx(f.det_levi, abs=1e-6)
            assert c.vol_density == pytest.approx(f.vol_density, abs=1e-6)
            assert f.det_levi > 0
            assert f.det_levi == pytest.approx(np.prod(f.levi_eigenvalues), abs=1e-12)


def test_levi_unknown_method():
    with pytest.raises(ValueError):
        levi_data(make_sphere((1, 1)), np.array([1, 0], dtype=complex), method="guess")


@pytest.mark.parametrize("a,x", [((1, 1), None), ((1, 2), None), ((3, 5), (0, 1))])
def test_contact_identities(a, x, rng):
    X = make_sphere(a)
    x = random_sphere_point(rng, 2) if x is None else np.array(x, dtype=complex)
    assert check_contact(X, x).max < 1e-6


# ---------------------------------------------------------------- integrals


def test_geometric_integral_examples():
    exact = QuadratureSpec("product1d", samples=64)
    assert geometric_integral(make_sphere((1, 1)), exact).value == pytest.approx(math.pi**2, rel=1e-13)
    assert geometric_integral(make_sphere((1, 2)), exact).value == pytest.approx(math.pi**2 / 2, rel=1e-13)
    mc = geometric_integral(make_sphere((1, 1, 1)), QuadratureSpec(samples=20_000, seed=4))
    assert mc.value == pytest.approx(math.pi**3 / 4, rel=1e-12)  # constant integrand
    assert exact_geometric_integral(make_sphere((1, 1, 1))) == pytest.approx(math.pi**3 / 4)


def test_monte_carlo_integral_matches_closed_form_and_is_seed_stable():
    X = make_sphere((1, 2, 3))
    exact = exact_geometric_integral(X)
    for seed in (0, 1):
        est = geometric_integral(X, QuadratureSpec(samples=100_000, seed=seed))
        assert abs(est.value - exact) < 3.5 * est.stderr
    with pytest.raises(ValueError):
        geometric_integral(X, QuadratureSpec("product1d", samples=16))
