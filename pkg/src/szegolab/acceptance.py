"""The acceptance battery shared by the ``suite`` command and the test-suite.

Each criterion returns a :class:`Verdict` carrying the measured value, the
threshold it was held to and a table of supporting numbers. Every random
choice is derived from the battery seed, so two runs with the same seed
produce identical verdicts.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, is_dataclass
from typing import Any, Callable

import numpy as np

from .embedding import embedding_sweep
from .geometry import levi_data, make_sphere, normalize
from .hardy import build_basis, dim_asymptotics, gram_check
from .kernels import (
    averaged_kernel,
    calibrate,
    diagonal_series,
    fit_leading,
    offdiag_decay,
    stratum_selection,
    szego_eval,
)
from .orbifold import INTEGRANDS, compare_atlases
from .quadrature import QuadratureSpec
from .reduction import reduction_compare, reduction_pair, sigma_map

GENERIC_MIN_MODULUS_SQ = 0.15


@dataclass
class Verdict:
    id: int
    name: str
    passed: bool
    measured: Any
    threshold: Any
    details: dict = field(default_factory=dict)

    @property
    def status(self) -> str:
        return "PASS" if self.passed else "FAIL"

    def line(self) -> str:
        return f"[{self.status}] criterion {self.id}: {self.name} (measured {fmt(self.measured)}, threshold {fmt(self.threshold)})"


def fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.4g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(fmt(u) for u in v) + "]"
    return str(v)


def to_jsonable(obj):
    """Plain JSON types; non-finite floats become strings so output stays strict JSON."""
    if is_dataclass(obj) and not isinstance(obj, type):
        return to_jsonable(asdict(obj))
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": to_jsonable(float(obj.real)), "im": to_jsonable(float(obj.imag))}
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else str(f)
    return obj


def _seeds(seed: int, count: int) -> list[int]:
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(count)]


def generic_points(dim: int, count: int, seed: int) -> np.ndarray:
    """Random points with every ``|z_j|^2 >= 0.15``, away from all singular strata."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < count:
        x = normalize(rng.standard_normal(dim) + 1j * rng.standard_normal(dim))
        if np.min(np.abs(x) ** 2) >= GENERIC_MIN_MODULUS_SQ:
            pts.append(x)
    return np.array(pts)


def random_points(dim: int, count: int, rng: np.random.Generator) -> np.ndarray:
    return normalize(rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim)))


_KAPPA_CACHE: dict[int, float] = {}


def calibrated_kappa(n: int) -> float:
    """kappa for complex dimension n, fixed once on the round sphere."""
    if n not in _KAPPA_CACHE:
        _KAPPA_CACHE[n] = calibrate(make_sphere((1,) * (n + 1)))
    return _KAPPA_CACHE[n]


# ---------------------------------------------------------------- criteria


def criterion_dimensions(seed: int) -> Verdict:
    rows, worst = [], 0.0
    for a, quad in [
        ((1, 1), QuadratureSpec("product1d", samples=64)),
        ((1, 2), QuadratureSpec("product1d", samples=64)),
        ((1, 2, 3), QuadratureSpec(samples=200_000, seed=seed)),
        ((2, 4), QuadratureSpec("product1d", samples=64)),
    ]:
        rep = dim_asymptotics(a, 400, quad)
        kappa = calibrated_kappa(rep.n)
        err = abs(rep.limit - kappa * rep.rhs) / (kappa * rep.rhs)
        worst = max(worst, err)
        rows.append({
            "weights": a, "p": rep.p, "ell0": rep.ell0, "limit": rep.limit,
            "limit_exact": rep.limit_exact, "integral": rep.geometric_integral,
            "integral_stderr": rep.geometric_stderr, "rhs": rep.rhs, "kappa": kappa,
            "kappa_hat": rep.kappa_hat, "relative_error": err,
        })
    return Verdict(1, "dimension asymptotics", worst <= 0.03, worst, 0.03, {"rows": rows})


def criterion_diagonal(seed: int) -> Verdict:
    k_list = list(range(100, 201, 10))
    rows, worst = [], 0.0
    for a, s in zip([(1, 2), (2, 3), (1, 2, 3)], _seeds(seed, 3)):
        X = make_sphere(a)
        kappa = calibrated_kappa(X.n)
        for x in generic_points(X.dim, 5, s):
            fit = fit_leading(diagonal_series(X, x, k_list), levi_data(X, x))
            err = abs(fit.kappa_hat - kappa) / kappa
            worst = max(worst, err)
            rows.append({"weights": a, "point": x, "b0_hat": fit.b0_hat, "b0_predicted": fit.b0_predicted,
                         "kappa_hat": fit.kappa_hat, "order_hat": fit.order_hat, "residual": fit.residual})
    X = make_sphere((1, 1))
    x = generic_points(2, 1, seed)[0]
    fit = fit_leading(diagonal_series(X, x, k_list), levi_data(X, x))
    round_err = abs(fit.b0_hat - 1 / (2 * math.pi**2)) * 2 * math.pi**2
    ok = worst <= 0.03 and round_err <= 0.01
    return Verdict(2, "diagonal leading coefficient", ok, [worst, round_err], [0.03, 0.01],
                   {"rows": rows, "round_b0_hat": fit.b0_hat})


def criterion_strata(seed: int) -> Verdict:
    cases = [((1, 2), (0, 1)), ((1, 2, 3), (0, 0, 1)), ((1, 2, 3), (0, 1, 0))]
    rows, max_zero, worst_fluct, nonvanishing = [], 0.0, 0.0, True
    for a, x in cases:
        rep = stratum_selection(make_sphere(a), np.asarray(x, dtype=complex), k_max=200)
        max_zero = max(max_zero, rep.max_abs_on_vanishing)
        worst_fluct = max(worst_fluct, rep.fluctuation)
        nonvanishing &= rep.nonvanishing_ok
        rows.append({"weights": a, "point": x, "ell": rep.ell, "vanishing_count": len(rep.vanishing_ks),
                     "max_abs_on_vanishing": rep.max_abs_on_vanishing, "fluctuation": rep.fluctuation,
                     "window": rep.fluctuation_window, "stratum_limit": rep.stratum_limit,
                     "generic_limit": rep.generic_limit, "stratum_ratio": rep.stratum_ratio})
    ok = max_zero <= 1e-14 and worst_fluct < 0.05 and nonvanishing
    return Verdict(3, "stratum Fourier selection", ok, [max_zero, worst_fluct], [1e-14, 0.05],
                   {"rows": rows, "admissible_nonzero": nonvanishing})


def criterion_averaging(seed: int) -> Verdict:
    rng = np.random.default_rng(seed)
    actions = {2: (1, 0), 3: (1, 2), 4: (1, 1)}
    worst, rows = 0.0, []
    for m, w in actions.items():
        for k in (3, 7, 12):
            basis = build_basis((1, 1), k)
            xs, ys = random_points(2, 100, rng), random_points(2, 100, rng)
            dev = max(averaged_kernel(basis, m, w, x, y).max_deviation for x, y in zip(xs, ys))
            worst = max(worst, dev)
            rows.append({"m": m, "w": w, "k": k, "max_deviation": dev})
    return Verdict(4, "group-averaging identity", worst <= 1e-10, worst, 1e-10, {"rows": rows})


def criterion_offdiag(seed: int) -> Verdict:
    rng = np.random.default_rng(seed)
    basis_k = {k: build_basis((1, 1), k) for k in (5, 20, 60)}
    closed = 0.0
    for x, y in zip(random_points(2, 20, rng), random_points(2, 20, rng)):
        for k, b in basis_k.items():
            got = abs(szego_eval(b, x, y).value)
            want = (k + 1) * abs(np.vdot(y, x)) ** k / (2 * math.pi**2)
            # absolute: the values span hundreds of decades and the phase sum cancels
            closed = max(closed, abs(got - want))
    X = make_sphere((1, 2))
    x = normalize(np.ones(2))
    direction = normalize(np.array([1.0, -1.0]) - np.vdot(x, [1.0, -1.0]) * x)
    fits = []
    for d in (0.2, 0.35, 0.5):
        y = math.cos(d) * x + math.sin(d) * direction
        fits.append(offdiag_decay(X, x, y, range(20, 201, 4)))
    rates = [f.rate for f in fits]
    r2 = min(f.r_squared for f in fits)
    monotone = all(u < v for u, v in zip(rates, rates[1:]))
    ok = closed <= 1e-10 and all(r > 0 for r in rates) and r2 >= 0.95 and monotone
    return Verdict(5, "off-diagonal decay", ok, [closed, r2, int(monotone)], [1e-10, 0.95, 1],
                   {"rates": rates, "orbit_distances": [f.orbit_distance for f in fits],
                    "in_sandwich": [f.in_sandwich for f in fits]})


def criterion_reproducing(seed: int) -> Verdict:
    from .kernels import reproducing_check

    rng = np.random.default_rng(seed)
    exact = QuadratureSpec("product1d", samples=40)
    prod = 0.0
    for a, k in [((1, 1), 3), ((1, 2), 4), ((2, 3), 6)]:
        basis = build_basis(a, k)
        prod = max(prod, gram_check(basis, exact))
        for x in random_points(2, 5, rng):
            prod = max(prod, reproducing_check(basis, x, exact))
    mc = QuadratureSpec(samples=200_000, seed=seed)
    basis = build_basis((1, 1, 1), 1)
    mc_err = max(gram_check(basis, mc), reproducing_check(basis, random_points(3, 1, rng)[0], mc))
    ok = prod <= 1e-8 and mc_err <= 5e-3
    return Verdict(6, "reproducing property and Gram orthonormality", ok, [prod, mc_err], [1e-8, 5e-3])


def criterion_embedding(seed: int) -> Verdict:
    sweep = embedding_sweep(make_sphere((1, 2)), K_max=10, n_pairs=500, n_points=50, seed=seed)
    k_star = sweep.k_star
    ok = k_star is not None and k_star <= 10 and sweep.monotone
    rows = [{"K": K, "min_separation": s.min_separation, "bin_counts": s.bin_counts,
             "base_point_failures": s.base_point_failures, "immersion_min": m}
            for K, s, m in zip(sweep.multiples, sweep.scans, sweep.immersion_min)]
    return Verdict(7, "Kodaira-Bailey embedding", ok, -1 if k_star is None else k_star, 10,
                   {"rows": rows, "monotone": sweep.monotone})


def criterion_reduction(seed: int) -> Verdict:
    pair = reduction_pair((1, 1, 1), (1, -1, 0))
    cmp = reduction_compare(pair, 100)
    reports = [sigma_map(pair, k) for k in range(2, 21, 2)]
    smallest = min(r.smallest for r in reports)
    stability = max(r.stability for r in reports)
    ok = cmp.all_equal and smallest > 1e-6 and stability <= 0.01
    return Verdict(8, "quantization commutes with reduction", ok,
                   [int(cmp.all_equal), smallest, stability], [1, 1e-6, 0.01],
                   {"reduced_weights": pair.reduced.a, "generators": pair.generators,
                    "sigma": [{"k": r.k, "dims": r.dims, "smallest": r.smallest, "stability": r.stability,
                               "projection_residual": r.projection_residual} for r in reports]})


def criterion_orbifold(seed: int) -> Verdict:
    rows, worst = [], 0.0
    for (name, (g, full)), s in zip(INTEGRANDS.items(), _seeds(seed, len(INTEGRANDS))):
        c = compare_atlases(2, (1, 1), g, name, seed=s, exact=full / 2)
        worst = max(worst, c.z_score)
        rows.append({"integrand": name, "band": c.first.value, "band_stderr": c.first.stderr,
                     "sector": c.second.value, "sector_stderr": c.second.stderr,
                     "exact": c.exact, "z_score": c.z_score})
    return Verdict(9, "orbifold integration is atlas-independent", worst <= 3.0, worst, 3.0, {"rows": rows})


STOCHASTIC = (criterion_reproducing, criterion_orbifold)


CRITERIA: tuple[Callable[..., Verdict], ...] = (
    criterion_dimensions,
    criterion_diagonal,
    criterion_strata,
    criterion_averaging,
    criterion_offdiag,
    criterion_reproducing,
    criterion_embedding,
    criterion_reduction,
    criterion_orbifold,
)


def _canonical(v: Verdict) -> str:
    return json.dumps(to_jsonable(v), sort_keys=True)


def run_battery(seed: int = 0, log: Callable[[str], None] | None = None) -> list[Verdict]:
    """Criteria 1 to 9, then a same-process rerun of the sampled ones for criterion 10.

    Cross-process determinism (two CLI runs, identical bytes) is exercised by
    the test-suite.
    """
    seeds = dict(zip(CRITERIA, _seeds(seed, len(CRITERIA))))
    verdicts = []
    for fn in CRITERIA:
        verdicts.append(fn(seeds[fn]))
        if log:
            log(verdicts[-1].line())
    first = {fn: _canonical(v) for fn, v in zip(CRITERIA, verdicts) if fn in STOCHASTIC}
    same = all(first[fn] == _canonical(fn(seeds[fn])) for fn in STOCHASTIC)
    verdicts.append(Verdict(10, "deterministic reports", same, int(same), 1))
    if log:
        log(verdicts[-1].line())
    return verdicts
