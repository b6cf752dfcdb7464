"""Kodaira-Bailey maps of weighted spheres into projective space.

``Phi_k(x) = [f_1(x) : ... : f_d(x)]`` for an orthonormal basis of the degree-k
Hardy component. The map is constant on circle orbits up to a phase, so all
comparisons use the Fubini-Study distance. Injectivity and immersion are
certified by sampling, not proven.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from .geometry import (
    ModelSpace,
    isotropy_order,
    make_sphere,
    normalize,
    real_horizontal_frame,
    sphere_point,
    stratification,
)
from .hardy import MonomialBasis, build_basis
from .kernels import kernel_matrix, orbit_distance

BASE_POINT_TOL = 1e-14
IMMERSION_TOL = 1e-6
SEPARATION_TOL = 1e-10
DEFAULT_BINS = (0.05, 0.2, 0.5, 1.0, math.pi / 2 + 1e-9)


class BasePointError(ValueError):
    """Every section of the requested degree vanishes at the point."""


def kodaira_map(basis: MonomialBasis, x) -> np.ndarray:
    """Unit representative of ``Phi_k(x)`` in C^{d_k}."""
    x = sphere_point(x, tol=1e-9)
    if len(basis) == 0:
        raise BasePointError(f"degree {basis.k} has no sections")
    v = basis.evaluate(x)
    nrm = float(np.linalg.norm(v))
    if nrm <= BASE_POINT_TOL:
        raise BasePointError(f"degree {basis.k} is not base-point free at x")
    return v / nrm


def fs_distance(p, q) -> float:
    """Fubini-Study distance ``arccos |<p, q>|`` of unit vectors, evaluated stably."""
    p = np.asarray(p, dtype=complex)
    q = np.asarray(q, dtype=complex)
    c = np.vdot(p, q)
    s = float(np.linalg.norm(q - c * p))
    return float(math.atan2(s, abs(c)))


def base_point_free(a, k: int) -> bool:
    """Degree k has no base points iff every weight divides k (coordinate points)."""
    return all(k % w == 0 for w in make_sphere(a).weights.a)


# ---------------------------------------------------------------- injectivity


def _tangent_direction(X: ModelSpace, x: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Random unit vector in HX at x (orthogonal to x and to the Reeb field)."""
    frame = real_horizontal_frame(x)
    c = rng.standard_normal(len(frame))
    v = c @ frame
    return v / np.linalg.norm(v)


def sample_pairs(X: ModelSpace, n_pairs: int, seed: int, bins=DEFAULT_BINS):
    """Pairs of points on distinct orbits, stratified over orbit-distance bins.

    Each pair starts at a uniform random point and moves a target distance,
    drawn uniformly inside its bin, along a horizontal geodesic. The bin is
    then assigned from the measured orbit distance.
    """
    rng = np.random.default_rng(seed)
    nb = len(bins) - 1
    xs, ys, ds = [], [], []
    for i in range(n_pairs):
        lo, hi = bins[i % nb], min(bins[i % nb + 1], math.pi / 2)
        while True:
            x = normalize(rng.standard_normal(X.dim) + 1j * rng.standard_normal(X.dim))
            v = _tangent_direction(X, x, rng)
            t = rng.uniform(lo, hi)
            y = math.cos(t) * x + math.sin(t) * v
            y = normalize(y)
            d = orbit_distance(X, x, y)
            if d > bins[0]:
                break
        xs.append(x)
        ys.append(y)
        ds.append(d)
    return np.array(xs), np.array(ys), np.array(ds)


@dataclass(frozen=True)
class ScanReport:
    weights: tuple[int, ...]
    k: int
    n_pairs: int
    bins: tuple[float, ...]
    bin_counts: tuple[int, ...]
    min_separation: tuple[float, ...]
    base_point_failures: int
    passed: bool


def injectivity_scan(X: ModelSpace, k: int, n_pairs: int = 500, seed: int = 0,
                     bins=DEFAULT_BINS, pairs=None) -> ScanReport:
    """Smallest Fubini-Study separation of ``Phi_k`` per orbit-distance bin."""
    if n_pairs < 100 and pairs is None:
        raise ValueError("need at least 100 pairs")
    st = stratification(X)
    if k % st.p:
        raise ValueError(f"k = {k} is not a multiple of p = {st.p}")
    xs, ys, ds = pairs if pairs is not None else sample_pairs(X, n_pairs, seed, bins)
    basis = build_basis(X.weights, k)
    F = [basis.evaluate(xs), basis.evaluate(ys)]
    norms = [np.linalg.norm(f, axis=1) for f in F]
    failures = int(np.sum((norms[0] <= BASE_POINT_TOL) | (norms[1] <= BASE_POINT_TOL)))
    seps = np.full(len(ds), np.nan)
    ok = (norms[0] > BASE_POINT_TOL) & (norms[1] > BASE_POINT_TOL)
    for i in np.flatnonzero(ok):
        seps[i] = fs_distance(F[0][i] / norms[0][i], F[1][i] / norms[1][i])
    idx = np.digitize(ds, bins) - 1
    counts, mins = [], []
    for b in range(len(bins) - 1):
        sel = (idx == b) & ok
        counts.append(int(np.sum(idx == b)))
        mins.append(float(np.min(seps[sel])) if sel.any() else float("nan"))
    populated = [m for m, c in zip(mins, counts) if c > 0]
    passed = failures == 0 and all(np.isfinite(m) and m > SEPARATION_TOL for m in populated)
    return ScanReport(
        weights=X.weights.a,
        k=k,
        n_pairs=len(ds),
        bins=tuple(float(b) for b in bins),
        bin_counts=tuple(counts),
        min_separation=tuple(mins),
        base_point_failures=failures,
        passed=bool(passed),
    )


# ---------------------------------------------------------------- immersion


@dataclass(frozen=True)
class ImmersionReport:
    k: int
    singular_values: tuple[float, ...]
    smallest: float
    reeb_defect: float
    passed: bool


def _projective_derivative(basis: MonomialBasis, x: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    """Central difference of Phi along the sphere curve ``normalize(x + t v)``, in FS units."""
    F = basis.evaluate(x)
    Fp = basis.evaluate(normalize(x + h * v))
    Fm = basis.evaluate(normalize(x - h * v))
    D = (Fp - Fm) / (2 * h)
    nrm = np.linalg.norm(F)
    u = F / nrm
    return (D - np.vdot(u, D) * u) / nrm


def immersion_check(X: ModelSpace, k: int, x, h: float = 1e-6, tol: float = IMMERSION_TOL) -> ImmersionReport:
    """Singular values of dPhi_k on HX at a regular point x.

    The Reeb direction is excluded since Phi_k only rotates the phase along
    orbits; its projected derivative is returned as ``reeb_defect``.
    """
    x = sphere_point(x, tol=1e-9)
    if isotropy_order(X, x) != stratification(X).ell0:
        raise ValueError("immersion is checked at regular points only")
    basis = build_basis(X.weights, k)
    if len(basis) == 0 or np.linalg.norm(basis.evaluate(x)) <= BASE_POINT_TOL:
        raise BasePointError(f"degree {k} is not base-point free at x")
    cols = [_projective_derivative(basis, x, v, h) for v in real_horizontal_frame(x)]
    J = np.stack([np.concatenate([c.real, c.imag]) for c in cols], axis=1)
    sv = np.linalg.svd(J, compute_uv=False)
    R = X.reeb(x)
    reeb = float(np.linalg.norm(_projective_derivative(basis, x, R / np.linalg.norm(R), h)))
    return ImmersionReport(k, tuple(float(s) for s in sv), float(sv.min()), reeb, bool(sv.min() > tol))


# ---------------------------------------------------------------- peak sections


@dataclass(frozen=True)
class CoherentState:
    """Normalized kernel column ``u(y) = Pi_k(y, x0) / sqrt(Pi_k(x0, x0))``."""

    basis: MonomialBasis
    x0: np.ndarray
    peak_value: float
    sup_point: np.ndarray
    sup_value: float

    def __call__(self, y) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=complex))
        return kernel_matrix(self.basis, y, self.x0)[:, 0] / self.peak_value


def coherent_state(basis: MonomialBasis, x0, search_samples: int = 4000, seed: int = 0) -> CoherentState:
    """Coherent state at x0 and the location of its maximum modulus on the sphere."""
    x0 = sphere_point(x0, tol=1e-9)
    F0 = basis.evaluate(x0) if len(basis) else np.zeros(0)
    diag = float(np.sum(np.abs(F0) ** 2))
    if diag <= BASE_POINT_TOL**2:
        raise BasePointError(f"degree {basis.k} vanishes at x0")
    peak = math.sqrt(diag)
    dim = len(x0)
    rng = np.random.default_rng(seed)
    cloud = normalize(rng.standard_normal((search_samples, dim)) + 1j * rng.standard_normal((search_samples, dim)))
    cloud = np.vstack([x0[None, :], cloud])
    vals = np.abs(basis.evaluate(cloud) @ F0.conj()) / peak
    start = cloud[int(np.argmax(vals))]

    def neg(r):
        y = normalize(r[:dim] + 1j * r[dim:])
        return -abs(complex(basis.evaluate(y) @ F0.conj())) / peak

    res = minimize(neg, np.concatenate([start.real, start.imag]), method="BFGS")
    best = normalize(res.x[:dim] + 1j * res.x[dim:])
    return CoherentState(basis, x0, peak, best, float(-res.fun))


# ---------------------------------------------------------------- semigroup


@dataclass(frozen=True)
class ProductSeparation:
    j: int
    k: int
    sep_j: float
    sep_products: float
    sep_sum: float


def product_separation(X: ModelSpace, j: int, k: int, x, y) -> ProductSeparation:
    """Separation of (x, y) by degree j, by products ``f_alpha * v`` and by degree j + k.

    ``v`` is the degree-k monomial that is largest at both points. The
    products are monomials of degree j + k, so they span a subspace of that
    component; if they separate the pair, so does ``Phi_{j+k}``.
    """
    x = sphere_point(x, tol=1e-9)
    y = sphere_point(y, tol=1e-9)
    bj, bk, bjk = (build_basis(X.weights, d) for d in (j, k, j + k))
    vx, vy = np.abs(bk.evaluate(x)), np.abs(bk.evaluate(y))
    pick = int(np.argmax(np.minimum(vx, vy)))
    if min(vx[pick], vy[pick]) <= BASE_POINT_TOL:
        raise BasePointError(f"no degree-{k} monomial is nonzero at both points")
    mono = lambda z, e: np.prod(z ** e)
    ex = bk.exponents[pick]
    prod_x = np.array([mono(x, e + ex) for e in bj.exponents])
    prod_y = np.array([mono(y, e + ex) for e in bj.exponents])
    assert all(int(np.dot(X.weights.a, e + ex)) == j + k for e in bj.exponents)
    return ProductSeparation(
        j,
        k,
        fs_distance(kodaira_map(bj, x), kodaira_map(bj, y)),
        fs_distance(normalize(prod_x), normalize(prod_y)),
        fs_distance(kodaira_map(bjk, x), kodaira_map(bjk, y)),
    )


# ---------------------------------------------------------------- sweep


@dataclass(frozen=True)
class EmbeddingSweep:
    weights: tuple[int, ...]
    multiples: tuple[int, ...]
    scans: tuple[ScanReport, ...]
    immersion_min: tuple[float, ...]
    monotone: bool
    k_star: int | None


def _regular_points(X: ModelSpace, count: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(seed)
    ell0 = stratification(X).ell0
    pts = []
    while len(pts) < count:
        x = normalize(rng.standard_normal(X.dim) + 1j * rng.standard_normal(X.dim))
        if isotropy_order(X, x) == ell0:
            pts.append(x)
    return np.array(pts)


def embedding_sweep(X: ModelSpace, K_max: int = 10, n_pairs: int = 500, n_points: int = 50,
                    seed: int = 0) -> EmbeddingSweep:
    """Scan ``Phi_{Kp}`` for K = 1..K_max on one fixed set of pairs and points.

    K* is the smallest K from which every later scan passes and every
    immersion singular value exceeds the tolerance; separation must be
    non-decreasing in K bin by bin from K* on.
    """
    p = stratification(X).p
    ss = np.random.SeedSequence(seed).generate_state(2)
    pairs = sample_pairs(X, n_pairs, int(ss[0]))
    points = _regular_points(X, n_points, int(ss[1]))
    scans, imm = [], []
    for K in range(1, K_max + 1):
        k = K * p
        scans.append(injectivity_scan(X, k, pairs=pairs))
        smallest = []
        for x in points:
            try:
                smallest.append(immersion_check(X, k, x).smallest)
            except BasePointError:
                smallest.append(0.0)
        imm.append(float(min(smallest)))
    good = [s.passed and m > IMMERSION_TOL for s, m in zip(scans, imm)]
    k_star = None
    for i in range(len(good)):
        if all(good[i:]):
            k_star = i + 1
            break
    monotone = False
    if k_star is not None:
        seps = np.array([s.min_separation for s in scans[k_star - 1 :]])
        filled = np.isfinite(seps).all(axis=0)
        monotone = bool(np.all(np.diff(seps[:, filled], axis=0) >= -1e-12))
    return EmbeddingSweep(
        weights=X.weights.a,
        multiples=tuple(range(1, K_max + 1)),
        scans=tuple(scans),
        immersion_min=tuple(imm),
        monotone=monotone,
        k_star=k_star,
    )
