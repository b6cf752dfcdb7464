"""Fourier components of the Szego kernel and their asymptotics.

``Pi_k(x, y) = sum_alpha f_alpha(x) conj(f_alpha(y))`` over the orthonormal
monomial basis of the degree-k component. Everything here is evaluated
exactly from that finite sum; fits and extrapolations only touch the
k-dependence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np
from scipy.optimize import minimize_scalar

from .geometry import (
    LeviData,
    ModelSpace,
    as_weights,
    isotropy_order,
    levi_data,
    make_sphere,
    normalize,
    sphere_point,
    stratification,
    support,
)
from .hardy import (
    CyclicConstraint,
    MonomialBasis,
    build_basis,
    invariant_subbasis,
    richardson_limit,
)
from .quadrature import QuadratureSpec, sphere_rule

ZERO_TOL = 1e-14


class FitRejected(RuntimeError):
    """The diagonal fit did not reach the required relative residual."""


class CalibrationError(RuntimeError):
    pass


@dataclass(frozen=True)
class KernelValue:
    value: complex
    k: int
    x: np.ndarray = field(repr=False)
    y: np.ndarray = field(repr=False)


def kernel_matrix(basis: MonomialBasis, xs, ys) -> np.ndarray:
    """``Pi_k(x_i, y_j)`` for point arrays ``xs`` (P, n+1) and ``ys`` (Q, n+1)."""
    Fx = basis.evaluate(np.atleast_2d(xs))
    Fy = basis.evaluate(np.atleast_2d(ys))
    return Fx @ Fy.conj().T


def szego_eval(basis: MonomialBasis, x, y) -> KernelValue:
    x = sphere_point(x, tol=1e-9)
    y = sphere_point(y, tol=1e-9)
    if len(basis) == 0:
        return KernelValue(0j, basis.k, x, y)
    val = complex(basis.evaluate(x) @ basis.evaluate(y).conj())
    return KernelValue(val, basis.k, x, y)


def diagonal_value(basis: MonomialBasis, x) -> float:
    if len(basis) == 0:
        return 0.0
    return float(np.sum(np.abs(basis.evaluate(x)) ** 2))


def reproducing_check(basis: MonomialBasis, x, quad: QuadratureSpec) -> float:
    """``max_f |int Pi_k(x, y) f(y) dV(y) - f(x)|`` over the basis elements ``f``."""
    x = sphere_point(x, tol=1e-9)
    X = make_sphere(basis.weights)
    rule = sphere_rule(X.dim, quad, max_degree=max(basis.k, 1) * 2)
    Fy = basis.evaluate(rule.z)
    w = rule.weights * X.density(rule.z)
    Fx = basis.evaluate(x)
    kx = Fy.conj() @ Fx  # Pi_k(x, y_i)
    integral = (kx * w) @ Fy
    return float(np.max(np.abs(integral - Fx)))


# ---------------------------------------------------------------- diagonal


@dataclass(frozen=True)
class DiagonalSeries:
    x: np.ndarray
    stratum: int
    weights: tuple[int, ...]
    ks: np.ndarray
    values: np.ndarray


@dataclass(frozen=True)
class FitResult:
    b0_hat: float
    correction: float
    order_hat: float
    residual: float
    b0_predicted: float
    kappa_hat: float
    ell: int = 1

    @property
    def kappa_per_sheet(self) -> float:
        """``kappa_hat / ell``: the phase sum over the stabilizer contributes a factor ell."""
        return self.kappa_hat / self.ell


def diagonal_series(X: ModelSpace, x, k_list) -> DiagonalSeries:
    x = sphere_point(x, tol=1e-9)
    ks = np.asarray(list(k_list), dtype=int)
    if np.any(np.diff(ks) <= 0):
        raise ValueError("k_list must be strictly increasing")
    vals = np.array([diagonal_value(build_basis(X.weights, int(k)), x) for k in ks])
    return DiagonalSeries(x=x, stratum=isotropy_order(X, x), weights=X.weights.a, ks=ks, values=vals)


def predicted_b0(levi: LeviData, n: int) -> float:
    """Leading diagonal coefficient ``(1/2) pi^{-n-1} |det L_x|``."""
    return 0.5 * math.pi ** (-n - 1) * abs(levi.det_levi)


def fit_leading(series: DiagonalSeries, levi: LeviData, max_residual: float = 1e-2) -> FitResult:
    """Least-squares fit ``Pi_k(x,x) = b0 k^n (1 + c/k)`` on the admissible k.

    Entries with ``ell(x)`` not dividing k vanish identically and are dropped.
    """
    n = len(series.weights) - 1
    keep = (series.ks % series.stratum == 0) & (series.values > 0)
    k = series.ks[keep].astype(float)
    v = series.values[keep]
    if len(k) < 6:
        raise ValueError(f"need >= 6 admissible entries, got {len(k)}")
    A = np.stack([k**n, k ** (n - 1)], axis=1)
    # relative least squares: every entry weighted by 1/value
    coef, *_ = np.linalg.lstsq(A / v[:, None], np.ones_like(v), rcond=None)
    fit = A @ coef
    residual = float(np.linalg.norm(fit - v) / np.linalg.norm(v))
    if not np.isfinite(residual) or residual > max_residual:
        raise FitRejected(f"relative residual {residual:.3g} exceeds {max_residual}")
    top = k >= k[len(k) // 2]
    order_hat = float(np.polyfit(np.log(k[top]), np.log(v[top]), 1)[0]) if top.sum() >= 2 else float("nan")
    b0 = float(coef[0])
    bp = predicted_b0(levi, n)
    return FitResult(
        b0_hat=b0,
        correction=float(coef[1] / coef[0]),
        order_hat=order_hat,
        residual=residual,
        b0_predicted=bp,
        kappa_hat=b0 / bp,
        ell=series.stratum,
    )


def calibrate(X_round: ModelSpace, k_list=None, points: int = 3, seed: int = 0) -> float:
    """Convention constant ``kappa = b0_hat / b0_predicted`` on the round sphere.

    Fitted at a few random points (the round diagonal is constant); the
    result must sit within 0.02 of a multiple of 1/4.
    """
    if any(w != 1 for w in X_round.weights.a):
        raise ValueError("calibration needs the round sphere (all weights 1)")
    k_list = list(k_list) if k_list is not None else list(range(100, 201, 10))
    rng = np.random.default_rng(seed)
    kappas = []
    for _ in range(points):
        g = rng.standard_normal(X_round.dim) + 1j * rng.standard_normal(X_round.dim)
        x = normalize(g)
        fit = fit_leading(diagonal_series(X_round, x, k_list), levi_data(X_round, x))
        kappas.append(fit.kappa_hat)
    kappa = float(np.mean(kappas))
    if abs(kappa - round(kappa * 4) / 4) > 0.02:
        raise CalibrationError(f"kappa = {kappa:.5f} is not a simple rational")
    return kappa


# ---------------------------------------------------------------- strata


def semigroup_contains(gens, k: int) -> bool:
    """Whether ``k`` is a nonnegative integer combination of ``gens``."""
    if k < 0:
        return False
    reach = np.zeros(k + 1, dtype=bool)
    reach[0] = True
    for g in gens:
        for j in range(g, k + 1):
            reach[j] |= reach[j - g]
    return bool(reach[k])


@dataclass(frozen=True)
class SelectionReport:
    weights: tuple[int, ...]
    ell: int
    k_max: int
    vanishing_ks: tuple[int, ...]
    max_abs_on_vanishing: float
    nonvanishing_ok: bool
    admissible_ks: tuple[int, ...]
    rescaled: tuple[float, ...]
    fluctuation: float
    fluctuation_window: tuple[int, int]
    stratum_limit: float
    generic_limit: float
    stratum_ratio: float


def _generic_limit_nearby(X: ModelSpace, x: np.ndarray, k_hi: int, eps=(0.65, 0.55, 0.45, 0.4)) -> float:
    """Extrapolate (quadratically in eps^2 -> 0) fitted diagonal limits at regular points near ``x``.

    The offsets stay large enough that the stratum terms, of size
    ``exp(-c k eps^2)``, are invisible at the degrees used.
    """
    n = X.n
    zero = np.abs(x) <= 1e-9
    limits = []
    ks = np.arange(max(k_hi // 2, 6), k_hi + 1)
    for e in eps:
        y = x.astype(complex).copy()
        y[zero] = e / math.sqrt(zero.sum())
        y[~zero] *= math.sqrt(1 - e * e) / np.linalg.norm(x[~zero])
        vals = np.array([diagonal_value(build_basis(X.weights, int(k)), y) for k in ks])
        ok = vals > 0
        L, _ = richardson_limit(ks[ok], vals[ok] / ks[ok] ** n, terms=3)
        limits.append(L)
    e2 = np.asarray(eps) ** 2
    return float(np.polyval(np.polyfit(e2, limits, 2), 0.0))


def stratum_selection(X: ModelSpace, x, k_max: int = 200, window_fraction: float = 0.1) -> SelectionReport:
    """Check exact Fourier selection at a singular point and the rescaled diagonal limit.

    ``Pi_k(x, x)`` must vanish exactly for every k outside the semigroup
    generated by the weights on the support of x (in particular whenever
    ``ell(x)`` does not divide k). Along the admissible k the fluctuation of
    ``Pi_k(x,x)/k^n`` is measured over the top ``window_fraction`` of the
    k-range as ``(max - min) / mean``.
    """
    x = sphere_point(x, tol=1e-9)
    ell = isotropy_order(X, x)
    if ell == stratification(X).ell0:
        raise ValueError("not a singular point")
    n = X.n
    gens = [X.weights.a[j] for j in support(x)]
    vanishing, admissible, rescaled = [], [], []
    max_zero = 0.0
    nonvanishing_ok = True
    for k in range(1, k_max + 1):
        v = diagonal_value(build_basis(X.weights, k), x)
        if semigroup_contains(gens, k):
            nonvanishing_ok &= v > 0
            admissible.append(k)
            rescaled.append(v / k**n)
        else:
            vanishing.append(k)
            max_zero = max(max_zero, abs(v))
    ks = np.asarray(admissible)
    r = np.asarray(rescaled)
    lo = int(math.ceil((1 - window_fraction) * k_max))
    win = ks >= lo
    fluct = float((r[win].max() - r[win].min()) / r[win].mean())
    top = ks >= ks[len(ks) // 2]
    stratum_limit, _ = richardson_limit(ks[top], r[top], terms=3)
    generic = _generic_limit_nearby(X, x, k_max)
    return SelectionReport(
        weights=X.weights.a,
        ell=ell,
        k_max=k_max,
        vanishing_ks=tuple(vanishing),
        max_abs_on_vanishing=max_zero,
        nonvanishing_ok=bool(nonvanishing_ok),
        admissible_ks=tuple(int(k) for k in ks),
        rescaled=tuple(float(v) for v in r),
        fluctuation=fluct,
        fluctuation_window=(lo, k_max),
        stratum_limit=stratum_limit,
        generic_limit=generic,
        stratum_ratio=stratum_limit / generic,
    )


# ---------------------------------------------------------------- off-diagonal


@dataclass(frozen=True)
class DecayFit:
    orbit_distance: float
    rate: float
    log_amplitude: float
    r_squared: float
    in_sandwich: bool
    ks: tuple[int, ...]
    log_values: tuple[float, ...]


OFFDIAG_C0 = 10.0


def orbit_distance(X: ModelSpace, x, y) -> float:
    """``inf_theta d(x, e^{i theta} y)`` with d the great-circle distance."""
    x = np.asarray(x, dtype=complex)
    y = np.asarray(y, dtype=complex)
    a = X.weights.array

    def neg_overlap(theta):
        return -float(np.real(np.vdot(y * np.exp(1j * a * theta), x)))

    grid = np.linspace(0.0, 2 * math.pi, 2048, endpoint=False)
    vals = -np.real(np.exp(1j * np.outer(grid, a)) @ (y * x.conj()))
    i = int(np.argmin(vals))
    h = grid[1] - grid[0]
    res = minimize_scalar(neg_overlap, bounds=(grid[i] - h, grid[i] + h), method="bounded",
                          options={"xatol": 1e-13})
    best = min(res.fun, vals[i])
    return float(math.acos(min(1.0, max(-1.0, -best))))


def offdiag_decay(X: ModelSpace, x, y, k_list, c0: float = OFFDIAG_C0) -> DecayFit:
    """Fit ``log(|Pi_k(x,y)| / k^n) = log C - c k`` and compare c with d_orb^2."""
    x = sphere_point(x, tol=1e-9)
    y = sphere_point(y, tol=1e-9)
    d = orbit_distance(X, x, y)
    if d <= 0.05:
        raise ValueError(f"orbit distance {d:.3g} is below 0.05: ill-conditioned decay fit")
    n = X.n
    ks, logs = [], []
    for k in k_list:
        v = abs(szego_eval(build_basis(X.weights, int(k)), x, y).value)
        if v > 0:
            ks.append(int(k))
            logs.append(math.log(v / k**n))
    if len(ks) < 2:
        return DecayFit(d, math.inf, -math.inf, 1.0, True, tuple(ks), tuple(logs))
    kk = np.asarray(ks, dtype=float)
    ll = np.asarray(logs)
    slope, icpt = np.polyfit(kk, ll, 1)
    pred = slope * kk + icpt
    ss_tot = float(np.sum((ll - ll.mean()) ** 2))
    r2 = 1.0 - float(np.sum((ll - pred) ** 2)) / ss_tot if ss_tot > 0 else 1.0
    rate = -float(slope)
    return DecayFit(
        orbit_distance=d,
        rate=rate,
        log_amplitude=float(icpt),
        r_squared=r2,
        in_sandwich=bool(d * d / c0 <= rate <= c0 * d * d),
        ks=tuple(ks),
        log_values=tuple(float(v) for v in ll),
    )


# ---------------------------------------------------------------- quotients


@dataclass(frozen=True)
class AveragedKernel:
    double_sum: complex
    single_sum: complex
    invariant: complex
    max_deviation: float


def cyclic_weights(generator, m: int, a) -> tuple[int, ...]:
    """Integer weights ``w`` of a Z_m generator commuting with the weighted circle action.

    ``generator`` is either the weights themselves or a unitary matrix ``g``
    with ``g^m = 1``. Matrices must commute with ``diag(e^{i a_j theta})``;
    only diagonal ones are supported.
    """
    a = as_weights(a).a
    g = np.asarray(generator)
    if g.ndim == 1:
        if len(g) != len(a):
            raise ValueError("generator weights do not match the dimension")
        return tuple(int(v) % m for v in g)
    if g.shape != (len(a), len(a)):
        raise ValueError("generator matrix has the wrong shape")
    aa = np.asarray(a)
    if np.any((np.abs(g) > 1e-12) & (aa[:, None] != aa[None, :])):
        raise ValueError("Z_m action does not commute with the circle action")
    if np.max(np.abs(g - np.diag(np.diag(g)))) > 1e-12:
        raise ValueError("only diagonal cyclic actions are supported")
    if np.max(np.abs(np.linalg.matrix_power(g, m) - np.eye(len(a)))) > 1e-10:
        raise ValueError("generator does not have order dividing m")
    w = np.angle(np.diag(g)) * m / (2 * math.pi)
    if np.max(np.abs(w - np.round(w))) > 1e-8:
        raise ValueError("generator eigenvalues are not m-th roots of unity")
    return tuple(int(v) % m for v in np.round(w))


def averaged_kernel(basis: MonomialBasis, m: int, w, x, y) -> AveragedKernel:
    """Three routes to the Z_m-averaged kernel and their largest disagreement.

    (i) ``(1/m) sum_{g,h} Pi_k(h x, g y)``; (ii) ``sum_g Pi_k(x, g y)``;
    (iii) ``m * Pi_k^inv(x, y)`` from the invariant monomial sub-basis.
    """
    w = cyclic_weights(w, m, basis.weights)
    x = sphere_point(x, tol=1e-9)
    y = sphere_point(y, tol=1e-9)
    ww = np.asarray(w, dtype=float)
    orbit = lambda z: np.stack([z * np.exp(2j * math.pi * g * ww / m) for g in range(m)])
    K = kernel_matrix(basis, orbit(x), orbit(y)) if len(basis) else np.zeros((m, m))
    double = complex(K.sum() / m)
    single = complex(K[0].sum())
    inv = invariant_subbasis(basis, CyclicConstraint(m, w))
    inv_val = m * (complex(inv.evaluate(x) @ inv.evaluate(y).conj()) if len(inv) else 0j)
    dev = max(abs(double - single), abs(single - inv_val), abs(double - inv_val))
    return AveragedKernel(double, single, inv_val, float(dev))
