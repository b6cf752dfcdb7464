"""Reduction by an auxiliary circle action and the comparison map sigma.

The auxiliary action is ``e^{i theta} : z_j -> e^{i b_j theta} z_j`` with integer
weights b (commuting with the weighted circle action). Its invariant
monomials are generated by a few minimal ones; when these are
algebraically independent, the invariant algebra is a polynomial ring and
the reduced space ``mu^{-1}(0) / G`` is again a weighted sphere, whose
weights are the degrees of the generators.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import reduce

import numpy as np
from scipy.optimize import brentq

from .geometry import ModelSpace, WeightVector, as_weights, make_sphere, sphere_point
from .hardy import LinearWeightConstraint, build_basis, enumerate_monomials, lattice_counts
from .quadrature import QuadratureSpec, sphere_rule

GENERATOR_DEGREE = 3


class UnsupportedReduction(ValueError):
    """The reduced space is not a weighted sphere of positive dimension."""


class SingularLevel(ValueError):
    """Zero is not a regular value of the moment map (the level set is empty)."""


def moment_map(X: ModelSpace, b, x) -> float | np.ndarray:
    """``mu_b(x) = omega_0(xi_X) = -sum b_j |z_j|^2 / S_a``."""
    x = np.asarray(x, dtype=complex)
    b = np.asarray(b, dtype=float)
    return -np.sum(b * np.abs(x) ** 2, axis=-1) / X.s_a(x)


def moment_gradient(X: ModelSpace, b, x, h: float = 1e-6) -> np.ndarray:
    """Central-difference gradient of mu_b on R^{2n+2}, projected to the sphere."""
    x = np.asarray(x, dtype=complex)
    d = len(x)
    grad = np.empty(2 * d)
    for j in range(2 * d):
        e = np.zeros(d, dtype=complex)
        e[j % d] = h if j < d else 1j * h
        grad[j] = (moment_map(X, b, x + e) - moment_map(X, b, x - e)) / (2 * h)
    xr = np.concatenate([x.real, x.imag])
    return grad - (grad @ xr) * xr


def group_isotropy(b, x, threshold: float = 1e-9) -> int:
    """Order of the stabilizer of x in the auxiliary circle (0 for a fixed point)."""
    nz = [abs(int(bj)) for bj, zj in zip(b, x) if abs(zj) > threshold and bj != 0]
    return reduce(math.gcd, nz) if nz else 0


def v_eff(X: ModelSpace, b, x, nodes: int = 64) -> float:
    """Length of the auxiliary orbit through x (trapezoid in theta); 0 at fixed points."""
    x = sphere_point(x, tol=1e-9)
    b = np.asarray(b, dtype=float)
    q = group_isotropy(b, x)
    if q == 0:
        return 0.0
    theta = 2 * math.pi * np.arange(nodes) / nodes
    orbit = x[None, :] * np.exp(1j * np.outer(theta, b))
    speed = np.linalg.norm(1j * b * orbit, axis=1)
    return float(2 * math.pi * speed.mean() / q)


def _orbit_length(b, xs: np.ndarray) -> np.ndarray:
    """``V_eff |G_x|``: the orbit speed times 2 pi, vectorized over level-set points."""
    b = np.asarray(b, dtype=float)
    return 2 * math.pi * np.linalg.norm(b * xs, axis=-1)


# ---------------------------------------------------------------- reduced model


@dataclass(frozen=True)
class ReductionPair:
    ambient: WeightVector
    b: tuple[int, ...]
    generators: tuple[tuple[int, ...], ...]
    reduced: WeightVector
    fixed_point_supports: tuple[tuple[int, ...], ...]


def _minimal_invariants(b: np.ndarray, max_degree: int) -> list[np.ndarray]:
    m = len(b)
    found: list[np.ndarray] = []
    for deg in range(1, max_degree + 1):
        for combo in itertools.combinations_with_replacement(range(m), deg):
            alpha = np.bincount(combo, minlength=m)
            if alpha @ b != 0:
                continue
            # minimal: not a sum of an earlier generator and an invariant remainder
            if any(np.all(alpha >= g) for g in found):
                continue
            found.append(alpha)
    return found


def reduction_pair(a, b, k_check: int = 30) -> ReductionPair:
    """Identify the reduced weighted sphere from the invariant monomial generators."""
    X = make_sphere(as_weights(a))
    b = tuple(int(v) for v in b)
    if len(b) != X.dim:
        raise ValueError("b must have one weight per coordinate")
    if all(v > 0 for v in b) or all(v < 0 for v in b):
        raise SingularLevel("auxiliary weights of one sign: mu never vanishes")
    if all(v >= 0 for v in b) or all(v <= 0 for v in b):
        raise SingularLevel("auxiliary weights do not change sign: mu^{-1}(0) is a fixed locus")
    barr = np.asarray(b)
    gens = _minimal_invariants(barr, GENERATOR_DEGREE)
    if len(gens) < 2:
        raise UnsupportedReduction(f"reduced space has dimension {len(gens) - 1} < 1")
    E = np.array(gens)
    if np.linalg.matrix_rank(E) < len(gens):
        raise UnsupportedReduction("invariant generators are not algebraically independent")
    reduced = WeightVector(tuple(int(g @ np.asarray(X.weights.a)) for g in gens))
    # points supported on b-null coordinates only are fixed by G and lie on mu^{-1}(0)
    null = tuple(j for j, v in enumerate(b) if v == 0)
    pair = ReductionPair(X.weights, b, tuple(tuple(int(v) for v in g) for g in gens), reduced,
                         (null,) if null else ())
    table = dimension_table(pair, k_check)
    if any(u != v for _, u, v in table):
        raise UnsupportedReduction("generators do not reproduce the invariant dimensions")
    return pair


def invariant_dim(a, b, k: int) -> int:
    exps = enumerate_monomials(a, k)
    return int(np.sum(LinearWeightConstraint(tuple(b)).mask(exps))) if len(exps) else 0


def dimension_table(pair: ReductionPair, k_max: int) -> list[tuple[int, int, int]]:
    """Rows ``(k, dim of invariants, dim on the reduced sphere)`` for k = 0..k_max."""
    red = lattice_counts(pair.reduced, k_max)
    return [(k, invariant_dim(pair.ambient, pair.b, k), int(red[k])) for k in range(k_max + 1)]


@dataclass(frozen=True)
class ComparisonReport:
    pair: ReductionPair
    table: tuple[tuple[int, int, int], ...]
    threshold: int | None
    all_equal: bool
    passed: bool


def reduction_compare(pair: ReductionPair, k_max: int = 100) -> ComparisonReport:
    """Exact invariant vs reduced dimension counts; PASS if equal from some k on."""
    table = dimension_table(pair, k_max)
    threshold = None
    for k, u, v in reversed(table):
        if u != v:
            break
        threshold = k
    return ComparisonReport(
        pair=pair,
        table=tuple(table),
        threshold=threshold,
        all_equal=threshold == 0,
        passed=threshold is not None,
    )


# ---------------------------------------------------------------- sigma


def _lift_moduli(pair: ReductionPair, abs_y: np.ndarray) -> np.ndarray:
    E = np.asarray(pair.generators, dtype=float)
    b = np.asarray(pair.b, dtype=float)
    ared = pair.reduced.array
    pinv = np.linalg.pinv(E)
    log_y = np.log(abs_y)

    def moduli(log_t: float) -> np.ndarray:
        ell0 = pinv @ (log_y - log_t * ared)
        g = lambda s: float(np.sum(b * np.exp(2 * (ell0 + s * b))))
        lo, hi = -1.0, 1.0
        while g(lo) > 0:
            lo *= 2
        while g(hi) < 0:
            hi *= 2
        s = brentq(g, lo, hi, xtol=1e-15)
        return np.exp(ell0 + s * b)

    def norm_defect(log_t: float) -> float:
        return float(np.log(np.sum(moduli(log_t) ** 2)))

    lo, hi = -1.0, 1.0
    while norm_defect(lo) < 0:
        lo *= 2
    while norm_defect(hi) > 0:
        hi *= 2
    r = moduli(brentq(norm_defect, lo, hi, xtol=1e-15))
    return r / np.linalg.norm(r)


def lift_to_level_set(pair: ReductionPair, y) -> np.ndarray:
    """Points of ``mu^{-1}(0)`` in the unit sphere whose classes correspond to the rows of y.

    With ``w = generators(x)`` the correspondence is ``y = delta_t w`` for the
    weighted dilation ``delta_t w = (t^{a'_i} w_i)`` that puts w on the unit
    sphere. Moduli are solved in log coordinates: ``E log|z| = log|w|`` has a
    one-parameter family of solutions along b, fixed by ``mu = 0``; the
    dilation t is then fixed by ``|x| = 1``. Phases solve ``E arg z = arg y``.
    """
    y = np.atleast_2d(np.asarray(y, dtype=complex))
    if np.any(np.abs(y) == 0):
        raise ValueError("lift needs all reduced coordinates nonzero")
    pinv = np.linalg.pinv(np.asarray(pair.generators, dtype=float))
    # moduli only depend on |y|; product rules repeat each modulus pattern many times
    uniq, inverse = np.unique(np.round(np.abs(y), 14), axis=0, return_inverse=True)
    mods = np.array([_lift_moduli(pair, u) for u in uniq])
    return mods[inverse.reshape(-1)] * np.exp(1j * (np.angle(y) @ pinv.T))


@dataclass(frozen=True)
class SigmaReport:
    k: int
    dims: tuple[int, int]
    singular_values: tuple[float, ...]
    smallest: float
    projection_residual: float
    refined_singular_values: tuple[float, ...]
    stability: float
    injective: bool


def _sigma_matrix(pair: ReductionPair, k: int, quad: QuadratureSpec) -> tuple[np.ndarray, float]:
    Xa = make_sphere(pair.ambient)
    Xr = make_sphere(pair.reduced)
    inv = build_basis(pair.ambient, k)
    inv = inv.subset(LinearWeightConstraint(pair.b).mask(inv.exponents))
    red = build_basis(pair.reduced, k)
    rule = sphere_rule(Xr.dim, quad, max_degree=max(k, 1))
    xs = lift_to_level_set(pair, rule.z)
    veff_g = _orbit_length(pair.b, xs)
    # sigma f = k^{-1/4} sqrt(V_eff |G_x|) f restricted to the level set
    S = k ** (-0.25) * np.sqrt(veff_g)[:, None] * inv.evaluate(xs)
    G = red.evaluate(rule.z)
    w = rule.weights * Xr.density(rule.z)
    M = (G.conj().T * w) @ S  # <sigma f_alpha, g_beta>
    total = np.sum(w[:, None] * np.abs(S) ** 2, axis=0)
    captured = np.sum(np.abs(M) ** 2, axis=0)
    residual = float(np.max(np.abs(total - captured) / total)) if len(total) else 0.0
    return M, residual


def sigma_map(pair: ReductionPair, k: int, quad: QuadratureSpec | None = None,
              tol: float = 1e-6) -> SigmaReport:
    """Finite matrix of sigma_k in orthonormal bases, and its stability under refinement.

    On S^3 the default rule is the product rule; its node counts are doubled
    for the refinement. Monte-Carlo rules double the sample count.
    """
    if k < 1:
        raise ValueError("sigma_k needs k >= 1")
    dim_red = pair.reduced.n + 1
    if quad is None:
        quad = QuadratureSpec("product1d", samples=64) if dim_red == 2 else QuadratureSpec(samples=100_000)
    fine = QuadratureSpec(quad.method, samples=2 * quad.samples, seed=quad.seed + 1,
                          phase_nodes=2 * quad.phase_nodes if quad.phase_nodes else None)
    M, residual = _sigma_matrix(pair, k, quad)
    M2, _ = _sigma_matrix(pair, k, fine)
    sv = np.linalg.svd(M, compute_uv=False)
    sv2 = np.linalg.svd(M2, compute_uv=False)
    stability = float(np.max(np.abs(sv - sv2) / sv2)) if len(sv) else 0.0
    return SigmaReport(
        k=k,
        dims=(M.shape[1], M.shape[0]),
        singular_values=tuple(float(s) for s in sv),
        smallest=float(sv.min()) if len(sv) else 0.0,
        projection_residual=residual,
        refined_singular_values=tuple(float(s) for s in sv2),
        stability=stability,
        injective=bool(len(sv) == M.shape[1] and len(sv) > 0 and sv.min() > tol),
    )
