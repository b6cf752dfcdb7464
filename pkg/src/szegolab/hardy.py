"""Fourier components of the Hardy space on a weighted sphere.

Ker box_b restricted to the k-th Fourier mode of the weighted circle action is
spanned by the holomorphic monomials ``z^alpha`` with ``<a, alpha> = k``.
Distinct monomials are orthogonal for any rotation-invariant density, so the
orthonormal basis is ``z^alpha / c_alpha`` with

    c_alpha^2 = int_{S^{2n+1}} |z^alpha|^2 f dsigma,   f = 1 / S_a,

which reduces to the closed sphere moment ``2 pi^{n+1} alpha! / (n+|alpha|)!``
on the round sphere. For general weights the Gaussian lift turns it into the
1-d integral

    c_alpha^2 = 2 pi^{n+1} alpha! / Gamma(n+|alpha|)
                * int_0^inf prod_j (1 + a_j s)^{-(alpha_j + 1)} ds,

evaluated here with a fixed exp-sinh rule (vectorized over all exponents).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import gammaln

from .geometry import ModelSpace, WeightVector, as_weights, make_sphere, stratification
from .geometry import exact_geometric_integral, geometric_integral
from .quadrature import QuadratureSpec, sphere_rule

# exp-sinh nodes on (0, inf): s = exp(pi/2 sinh u)
_DE_STEP = 1.0 / 32.0
_DE_U = np.arange(-5.0, 5.0 + _DE_STEP / 2, _DE_STEP)
_DE_S = np.exp(0.5 * np.pi * np.sinh(_DE_U))
_DE_W = _DE_STEP * 0.5 * np.pi * np.cosh(_DE_U) * _DE_S


def enumerate_monomials(a, k: int) -> np.ndarray:
    """All ``alpha >= 0`` with ``<a, alpha> = k``, in descending lexicographic order.

    Returns an integer array of shape ``(count, n+1)``; empty for ``k < 0``.
    """
    a = as_weights(a).a
    m = len(a)
    if k < 0:
        return np.zeros((0, m), dtype=np.int64)
    out: list[tuple[int, ...]] = []
    cur = [0] * m

    def rec(j: int, rem: int):
        if j == m - 1:
            if rem % a[j] == 0:
                cur[j] = rem // a[j]
                out.append(tuple(cur))
            return
        for e in range(rem // a[j], -1, -1):
            cur[j] = e
            rec(j + 1, rem - e * a[j])

    rec(0, k)
    return np.array(out, dtype=np.int64).reshape(-1, m)


def lattice_counts(a, k_max: int) -> np.ndarray:
    """``dim`` of every Fourier mode 0..k_max from the generating function prod 1/(1-x^{a_j})."""
    a = as_weights(a).a
    counts = np.zeros(k_max + 1, dtype=object)
    counts[0] = 1
    for w in a:
        for k in range(w, k_max + 1):
            counts[k] += counts[k - w]
    return np.array([int(c) for c in counts], dtype=np.int64)


def dim_fourier(a, k: int) -> int:
    """Dimension of the k-th Fourier component of the Hardy space."""
    return len(enumerate_monomials(a, k))


def log_monomial_norm_sq(n: int, alpha) -> float | np.ndarray:
    """``log c_alpha^2`` for the Euclidean measure on S^{2n+1} (log-Gamma, overflow safe)."""
    alpha = np.asarray(alpha)
    if np.any(alpha < 0):
        raise ValueError("exponents must be nonnegative")
    return (
        math.log(2.0)
        + (n + 1) * math.log(math.pi)
        + np.sum(gammaln(alpha + 1.0), axis=-1)
        - gammaln(n + np.sum(alpha, axis=-1) + 1.0)
    )


def monomial_norm(n: int, alpha) -> float:
    """``c_alpha = ||z^alpha||`` in L^2(S^{2n+1}, dsigma)."""
    return float(np.exp(0.5 * log_monomial_norm_sq(n, alpha)))


def _log_reciprocal_integral(a: np.ndarray, exps: np.ndarray) -> np.ndarray:
    """``log int_0^inf prod_j (1 + a_j s)^{-(alpha_j+1)} ds`` for each row of ``exps``."""
    m = exps + 1.0
    scale = m @ a
    out = np.empty(len(exps))
    chunk = 2048
    for lo in range(0, len(exps), chunk):
        mm = m[lo : lo + chunk]
        sc = scale[lo : lo + chunk]
        arg = a[None, :, None] * _DE_S[None, None, :] / sc[:, None, None]
        logs = -np.einsum("ij,ijk->ik", mm, np.log1p(arg))
        peak = logs.max(axis=1, keepdims=True)
        out[lo : lo + chunk] = (
            np.log(np.exp(logs - peak) @ _DE_W) + peak[:, 0] - np.log(sc)
        )
    return out


def log_weighted_norm_sq(a, exps) -> np.ndarray:
    """``log c_alpha^2`` for ``dV_X = dsigma / S_a`` (rows of ``exps``)."""
    wv = as_weights(a)
    exps = np.atleast_2d(np.asarray(exps, dtype=float))
    n = wv.n
    if len(exps) == 0:
        return np.zeros(0)
    a_arr = wv.array
    if np.all(a_arr == 1.0):
        # f = 1: closed sphere moment
        return np.asarray(log_monomial_norm_sq(n, exps), dtype=float)
    base = (
        math.log(2.0)
        + (n + 1) * math.log(math.pi)
        + np.sum(gammaln(exps + 1.0), axis=1)
        - gammaln(n + np.sum(exps, axis=1))
    )
    return base + _log_reciprocal_integral(a_arr, exps)


@dataclass(frozen=True)
class MonomialBasis:
    """Orthonormal basis ``z^alpha / c_alpha`` of the degree-k Hardy component."""

    weights: WeightVector
    k: int
    exponents: np.ndarray
    log_norm_sq: np.ndarray

    def __len__(self) -> int:
        return len(self.exponents)

    @property
    def norms(self) -> np.ndarray:
        return np.exp(0.5 * self.log_norm_sq)

    def evaluate(self, z) -> np.ndarray:
        """``f_alpha(z)`` for points ``z`` of shape ``(..., n+1)``; output ``(..., dim)``."""
        z = np.asarray(z, dtype=complex)
        arg = np.angle(z)
        e = self.exponents.astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            logmod = np.log(np.abs(z))
            # 0 * log 0 is taken as 0 so absent coordinates do not poison the sum
            lm = np.where(e > 0, e * logmod[..., None, :], 0.0).sum(axis=-1)
        ph = np.einsum("...j,aj->...a", arg, e)
        return np.exp(lm - 0.5 * self.log_norm_sq + 1j * ph)

    def subset(self, mask) -> "MonomialBasis":
        mask = np.asarray(mask, dtype=bool)
        return MonomialBasis(self.weights, self.k, self.exponents[mask], self.log_norm_sq[mask])


@lru_cache(maxsize=512)
def _cached_basis(a: tuple[int, ...], k: int) -> MonomialBasis:
    wv = WeightVector(a)
    exps = enumerate_monomials(wv, k)
    lns = log_weighted_norm_sq(wv, exps) if len(exps) else np.zeros(0)
    exps.setflags(write=False)
    lns.setflags(write=False)
    return MonomialBasis(weights=wv, k=k, exponents=exps, log_norm_sq=lns)


def build_basis(a, k: int) -> MonomialBasis:
    """Orthonormal monomial basis of the degree-k component (cached)."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    return _cached_basis(as_weights(a).a, int(k))


def gram_check(basis: MonomialBasis, quad: QuadratureSpec) -> float:
    """Largest entry of ``|G - I|`` where G is the quadrature Gram matrix in L^2(dV_X)."""
    X = make_sphere(basis.weights)
    rule = sphere_rule(X.dim, quad, max_degree=max(basis.k, 1) * 2)
    F = basis.evaluate(rule.z)
    w = rule.weights * X.density(rule.z)
    G = (F.conj().T * w) @ F
    return float(np.max(np.abs(G - np.eye(len(basis)))))


# ---------------------------------------------------------------- asymptotics


@dataclass(frozen=True)
class AsymptoticsReport:
    weights: tuple[int, ...]
    p: int
    ell0: int
    n: int
    degrees: tuple[int, ...]
    ratios: tuple[float, ...]
    limit: float
    limit_exact: float
    geometric_integral: float
    geometric_stderr: float
    rhs: float
    kappa_hat: float


def richardson_limit(k: np.ndarray, values: np.ndarray, terms: int = 3) -> tuple[float, np.ndarray]:
    """Least-squares fit ``values = L + c_1/k + ... + c_{terms-1}/k^{terms-1}``.

    Returns ``(L, coefficients)``.
    """
    k = np.asarray(k, dtype=float)
    A = np.stack([k ** (-j) for j in range(terms)], axis=1)
    coef, *_ = np.linalg.lstsq(A, np.asarray(values, dtype=float), rcond=None)
    return float(coef[0]), coef


def dim_asymptotics(a, k_max: int, quad: QuadratureSpec | None = None) -> AsymptoticsReport:
    """Extrapolated ``lim dim(kp)/(kp)^n`` against ``(ell_0/2) pi^{-n-1} int |det L| dV``.

    ``k_max`` bounds the degree ``kp``. The fit uses the top half of the
    available multiples of ``p``.
    """
    X = make_sphere(as_weights(a))
    st = stratification(X)
    n, p = X.n, st.p
    counts = lattice_counts(X.weights, k_max)
    degs = np.arange(p, k_max + 1, p)
    if len(degs) == 0 or not np.any(counts[degs] > 0):
        raise ValueError("degenerate: every dimension in range is zero")
    ratios = counts[degs] / degs.astype(float) ** n
    top = degs >= degs[len(degs) // 2]
    if top.sum() < 3:
        top = np.ones_like(top)
    limit, _ = richardson_limit(degs[top], ratios[top], terms=min(3, int(top.sum())))
    if quad is None or quad.method == "exact":
        gi, gse = exact_geometric_integral(X), 0.0
    else:
        est = geometric_integral(X, quad)
        gi, gse = est.value, est.stderr
    rhs = 0.5 * st.ell0 * math.pi ** (-n - 1) * gi
    return AsymptoticsReport(
        weights=X.weights.a,
        p=p,
        ell0=st.ell0,
        n=n,
        degrees=tuple(int(d) for d in degs),
        ratios=tuple(float(r) for r in ratios),
        limit=limit,
        limit_exact=st.ell0 / (math.factorial(n) * math.prod(X.weights.a)),
        geometric_integral=gi,
        geometric_stderr=gse,
        rhs=rhs,
        kappa_hat=limit / rhs,
    )


# ---------------------------------------------------------------- invariants


@dataclass(frozen=True)
class CyclicConstraint:
    """Z_m acting by ``z_j -> e^{2 pi i w_j / m} z_j``: keep ``<w, alpha> = 0 mod m``."""

    m: int
    w: tuple[int, ...]

    def mask(self, exps: np.ndarray) -> np.ndarray:
        if self.m < 1:
            raise ValueError("cyclic order must be positive")
        return (exps @ np.asarray(self.w, dtype=np.int64)) % self.m == 0


@dataclass(frozen=True)
class LinearWeightConstraint:
    """Auxiliary circle action with integer weights ``b``: keep ``<b, alpha> = 0``."""

    b: tuple[int, ...]

    def mask(self, exps: np.ndarray) -> np.ndarray:
        return exps @ np.asarray(self.b, dtype=np.int64) == 0


def invariant_subbasis(basis: MonomialBasis, constraint=None) -> MonomialBasis:
    """Sub-basis of monomials fixed by ``constraint``; ambient norms are kept."""
    if constraint is None:
        return basis
    if len(basis) == 0:
        return basis
    width = basis.exponents.shape[1]
    w = getattr(constraint, "w", None) or getattr(constraint, "b", None)
    if w is not None and len(w) != width:
        raise ValueError(f"constraint has {len(w)} weights, basis has {width} coordinates")
    return basis.subset(constraint.mask(basis.exponents))


def cyclic_character_count(exps: np.ndarray, m: int, w) -> int:
    """Number of Z_m-invariant exponents via the character average (1/m) sum_g chi(g)."""
    if len(exps) == 0:
        return 0
    phases = exps @ np.asarray(w, dtype=np.int64)
    total = sum(np.exp(2j * np.pi * g * phases / m).sum() for g in range(m))
    return int(round((total / m).real))
