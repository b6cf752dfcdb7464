"""Integration on finite cyclic quotients S^3 / Z_m.

Z_m acts by ``z_j -> e^{2 pi i w_j / m} z_j``. A chart is described by its
lifted domain in S^3, the order of its local group and the pull-back of its
partition function (a Z_m-invariant function on S^3). The orbifold integral
is ``sum_i (1/|G_i|) int_{U~_i} rho~_i g dsigma``; charts whose local group is
the full Z_m lift to the whole preimage, charts with trivial group lift to a
single sheet of the covering.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .quadrature import sphere_volume, uniform_sphere_samples

PARTITION_TOL = 1e-10

Field = Callable[[np.ndarray], np.ndarray]


class AtlasError(ValueError):
    """The charts do not form a partition of unity."""


def _smooth_step(x: np.ndarray) -> np.ndarray:
    """C-infinity step: 0 for x <= 0, 1 for x >= 1."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        u = np.where(x > 0, np.exp(-1.0 / x), 0.0)
        v = np.where(x < 1, np.exp(-1.0 / (1.0 - x)), 0.0)
    return u / (u + v)


def _bump(u: np.ndarray, half_width: float) -> np.ndarray:
    """Smooth bump, positive exactly on ``|u| < half_width``."""
    s = np.asarray(u) / half_width
    with np.errstate(divide="ignore", over="ignore"):
        return np.where(np.abs(s) < 1, np.exp(-1.0 / np.maximum(1.0 - s * s, 1e-300)), 0.0)


@dataclass(frozen=True)
class Chart:
    name: str
    group_order: int
    generator: tuple[int, ...]
    domain: Field  # indicator of the lifted chart domain in S^3
    weight: Field  # Z_m-invariant pull-back of the partition function


@dataclass(frozen=True)
class OrbifoldAtlas:
    m: int
    w: tuple[int, ...]
    charts: tuple[Chart, ...]

    def act(self, z: np.ndarray, g: int) -> np.ndarray:
        return z * np.exp(2j * math.pi * g * np.asarray(self.w) / self.m)

    def partition_defect(self, z: np.ndarray) -> float:
        total = sum(c.weight(z) for c in self.charts)
        return float(np.max(np.abs(total - 1.0)))

    def validate(self, z: np.ndarray, tol: float = PARTITION_TOL) -> None:
        for c in self.charts:
            rho = c.weight(z)
            if np.any(rho < 0):
                raise AtlasError(f"partition function of {c.name} is negative")
            outside = (rho > 0) & ~c.domain(z).astype(bool)
            # trivial-group charts live on one sheet; their weight is the
            # quotient function, so only the preimage of the domain matters
            if c.group_order == self.m and np.any(outside):
                raise AtlasError(f"partition function of {c.name} leaves its chart")
        defect = self.partition_defect(z)
        if defect > tol:
            raise AtlasError(f"partition of unity is off by {defect:.3g} (tolerance {tol:g})")


@dataclass(frozen=True)
class OrbifoldIntegral:
    value: float
    stderr: float
    samples: int


def _check_action(m: int, w) -> tuple[int, ...]:
    if m < 1:
        raise ValueError("cyclic order must be positive")
    w = tuple(int(v) % m for v in w)
    if len(w) != 2:
        raise ValueError("quotient atlases are implemented on S^3 only")
    return w


def single_chart_atlas() -> OrbifoldAtlas:
    """One chart with trivial group: the plain integral over S^3."""
    one = lambda z: np.ones(len(z))
    return OrbifoldAtlas(1, (0, 0), (Chart("global", 1, (0, 0), one, one),))


def band_atlas(m: int, w) -> OrbifoldAtlas:
    """Two charts split by ``|z_1|^2``, both carrying the full group Z_m."""
    w = _check_action(m, w)
    chi = lambda z: 1.0 - _smooth_step((np.abs(z[:, 0]) ** 2 - 0.25) / 0.45)
    return OrbifoldAtlas(
        m,
        w,
        (
            Chart("inner", m, w, lambda z: np.abs(z[:, 0]) ** 2 < 0.7, chi),
            Chart("outer", m, w, lambda z: np.abs(z[:, 0]) ** 2 > 0.25, lambda z: 1.0 - chi(z)),
        ),
    )


def sector_atlas(m: int, w, sectors: int = 3) -> OrbifoldAtlas:
    """A core chart with group Z_m and ``sectors`` single-sheet charts with trivial group.

    Away from ``z_1 = 0`` the action moves ``arg z_1`` by multiples of
    ``2 pi w_1 / m``; with ``gcd(w_1, m) = 1`` the angle ``phi = m arg z_1`` is a
    quotient coordinate and a ``phi``-interval of length < 2 pi lifts to m
    disjoint sheets, of which the chart keeps one.
    """
    w = _check_action(m, w)
    if math.gcd(w[0], m) != 1:
        raise ValueError("sector charts need gcd(w_1, m) = 1")
    half = 0.6 * math.pi
    centers = 2 * math.pi * np.arange(sectors) / sectors
    if half <= math.pi / sectors:
        raise ValueError("too few sectors to cover the circle")

    def core(z):
        return 1.0 - _smooth_step((np.abs(z[:, 0]) ** 2 - 0.4) / 0.2)

    def phi_offset(z, c):
        phi = m * np.angle(z[:, 0])
        return np.angle(np.exp(1j * (phi - c)))

    def bumps(z):
        return np.stack([_bump(phi_offset(z, c), half) for c in centers])

    def sector_weight(j):
        def rho(z):
            b = bumps(z)
            return (1.0 - core(z)) * b[j] / b.sum(axis=0)

        return rho

    def sheet(c):
        # the lift whose arg z_1 lies within half/m of c/m
        def dom(z):
            off = np.angle(np.exp(1j * (np.angle(z[:, 0]) - c / m)))
            return (np.abs(off) < half / m) & (np.abs(z[:, 0]) ** 2 > 0.35)

        return dom

    charts = [Chart("core", m, w, lambda z: np.abs(z[:, 0]) ** 2 < 0.65, core)]
    charts += [Chart(f"sector{j}", 1, w, sheet(c), sector_weight(j)) for j, c in enumerate(centers)]
    return OrbifoldAtlas(m, w, tuple(charts))


def check_invariant(atlas: OrbifoldAtlas, integrand: Field, z: np.ndarray, tol: float = 1e-10) -> None:
    base = integrand(z)
    scale = max(1.0, float(np.max(np.abs(base))))
    for g in range(1, atlas.m):
        if np.max(np.abs(integrand(atlas.act(z, g)) - base)) > tol * scale:
            raise ValueError("integrand is not invariant under the local group")


def orbifold_integrate(atlas: OrbifoldAtlas, integrand: Field, samples: int = 200_000,
                       seed: int = 0) -> OrbifoldIntegral:
    """Monte-Carlo estimate of the orbifold integral of ``integrand`` with its standard error."""
    z = uniform_sphere_samples(2, samples, seed)
    atlas.validate(z)
    check_invariant(atlas, integrand, z[:2000])
    g = integrand(z)
    contrib = np.zeros(len(z))
    for c in atlas.charts:
        contrib += c.domain(z) * c.weight(z) * g / c.group_order
    per_sample = sphere_volume(1) * contrib
    return OrbifoldIntegral(
        value=float(per_sample.mean()),
        stderr=float(per_sample.std(ddof=1) / math.sqrt(samples)),
        samples=samples,
    )


@dataclass(frozen=True)
class AtlasComparison:
    name: str
    first: OrbifoldIntegral
    second: OrbifoldIntegral
    exact: float | None
    z_score: float


def compare_atlases(m: int, w, integrand: Field, name: str = "", samples: int = 200_000,
                    seed: int = 0, exact: float | None = None) -> AtlasComparison:
    """Integrate with the band and the sector atlas on independent sample streams."""
    s1, s2 = np.random.SeedSequence(seed).generate_state(2)
    a = orbifold_integrate(band_atlas(m, w), integrand, samples, int(s1))
    b = orbifold_integrate(sector_atlas(m, w), integrand, samples, int(s2))
    z = abs(a.value - b.value) / math.hypot(a.stderr, b.stderr)
    return AtlasComparison(name, a, b, exact, float(z))


# test integrands with closed-form integrals over S^3 (divide by m for the quotient)
INTEGRANDS: dict[str, tuple[Field, float]] = {
    "one": (lambda z: np.ones(len(z)), 2 * math.pi**2),
    "quartic": (lambda z: np.abs(z[:, 0]) ** 4 + np.abs(z[:, 1]) ** 2, 2 * math.pi**2 / 3 + math.pi**2),
    "oscillating": (lambda z: 1.0 + np.real(z[:, 0] ** 2 * np.conj(z[:, 1]) ** 2), 2 * math.pi**2),
}
