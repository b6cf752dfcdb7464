import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from szegolab.orbifold import (
    INTEGRANDS,
    AtlasError,
    Chart,
    OrbifoldAtlas,
    _smooth_step,
    band_atlas,
    compare_atlases,
    orbifold_integrate,
    sector_atlas,
    single_chart_atlas,
)
from szegolab.quadrature import uniform_sphere_samples


@settings(max_examples=30, deadline=None)
@given(x=st.floats(-2, 3))
def test_smooth_step_range(x):
    v = float(_smooth_step(np.array([x]))[0])
    assert 0.0 <= v <= 1.0
    if x <= 0:
        assert v == 0
    if x >= 1:
        assert v == 1


@pytest.mark.parametrize("m,w", [(2, (1, 1)), (3, (1, 2)), (5, (2, 1))])
def test_atlases_are_partitions_of_unity(m, w):
    z = uniform_sphere_samples(2, 20_000, seed=m)
    for atlas in (band_atlas(m, w), sector_atlas(m, w)):
        atlas.validate(z)
        assert atlas.partition_defect(z) < 1e-12


def test_partition_functions_are_invariant():
    atlas = sector_atlas(3, (1, 2))
    z = uniform_sphere_samples(2, 5000, seed=2)
    for c in atlas.charts:
        for g in range(1, 3):
            assert np.allclose(c.weight(atlas.act(z, g)), c.weight(z))


def test_single_chart_gives_sphere_volume():
    res = orbifold_integrate(single_chart_atlas(), INTEGRANDS["one"][0], samples=10_000)
    assert res.value == pytest.approx(2 * math.pi**2)
    assert res.stderr == pytest.approx(0, abs=1e-9)


@pytest.mark.parametrize("name", sorted(INTEGRANDS))
def test_quotient_integrals_match_closed_forms(name):
    f, full = INTEGRANDS[name]
    cmp = compare_atlases(2, (1, 1), f, name, samples=200_000, seed=7, exact=full / 2)
    assert cmp.z_score <= 3
    for r in (cmp.first, cmp.second):
        assert abs(r.value - full / 2) <= 4 * max(r.stderr, 1e-12)


def test_integral_closed_forms_on_the_sphere():
    z = uniform_sphere_samples(2, 400_000, seed=9)
    for f, full in INTEGRANDS.values():
        vals = 2 * math.pi**2 * f(z)
        assert abs(vals.mean() - full) < 4 * vals.std() / math.sqrt(len(vals)) + 1e-12


def test_non_invariant_integrand_is_rejected():
    with pytest.raises(ValueError, match="invariant"):
        orbifold_integrate(band_atlas(3, (1, 2)), INTEGRANDS["oscillating"][0], samples=5000)


def test_broken_partition_is_rejected():
    half = lambda z: 0.5 * np.ones(len(z))
    everywhere = lambda z: np.ones(len(z), dtype=bool)
    atlas = OrbifoldAtlas(2, (1, 1), (Chart("only", 2, (1, 1), everywhere, half),))
    with pytest.raises(AtlasError):
        orbifold_integrate(atlas, INTEGRANDS["one"][0], samples=1000)
    outside = OrbifoldAtlas(2, (1, 1), (Chart("only", 2, (1, 1), lambda z: np.zeros(len(z), bool),
                                              lambda z: np.ones(len(z))),))
    with pytest.raises(AtlasError):
        outside.validate(uniform_sphere_samples(2, 100, 0))


def test_atlas_argument_checks():
    with pytest.raises(ValueError):
        band_atlas(0, (1, 1))
    with pytest.raises(ValueError):
        band_atlas(2, (1, 1, 1))
    with pytest.raises(ValueError):
        sector_atlas(4, (2, 1))
    with pytest.raises(ValueError):
        sector_atlas(2, (1, 1), sectors=1)
