"""Command-line front end: one experiment per invocation, JSON report out.

Exit codes: 0 ok, 2 configuration error, 3 numerical failure, 4 a verdict FAILed.
Reports contain no timing so that identical configurations give identical
bytes; wall time goes to stderr.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import time
from pathlib import Path

import numpy as np

from . import acceptance
from .acceptance import Verdict, calibrated_kappa, generic_points, to_jsonable
from .embedding import BasePointError, embedding_sweep
from .geometry import (
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
from .hardy import build_basis, dim_asymptotics, lattice_counts
from .kernels import (
    CalibrationError,
    FitRejected,
    averaged_kernel,
    calibrate,
    diagonal_series,
    fit_leading,
    offdiag_decay,
    stratum_selection,
)
from .orbifold import INTEGRANDS, AtlasError, compare_atlases
from .quadrature import QuadratureSpec
from .reduction import reduction_compare, reduction_pair, sigma_map

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_FAIL = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        if ":" in text:
            parts = [int(p) for p in text.split(":")]
            return list(range(*parts))
        return [int(p) for p in text.split(",") if p.strip()]
    except ValueError as exc:
        raise ConfigError(f"malformed integer list {text!r}") from exc


def _point(text: str | None, dim: int) -> np.ndarray | None:
    if text is None:
        return None
    try:
        z = np.array([complex(p.strip().replace(" ", "")) for p in text.split(",")])
    except ValueError as exc:
        raise ConfigError(f"malformed point {text!r}") from exc
    if len(z) != dim or np.linalg.norm(z) == 0:
        raise ConfigError(f"point must have {dim} coordinates, not all zero")
    return normalize(z)


def _weights(args) -> WeightVector:
    try:
        return WeightVector.parse(args.weights)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


# ---------------------------------------------------------------- commands
# each returns (results, verdicts, csv_rows)


def cmd_dims(args):
    a = _weights(args)
    counts = lattice_counts(a, args.k_max)
    rep = dim_asymptotics(a, args.k_max)
    n = a.n
    rows = [(k, int(c), rep.limit * k**n, int(c) - rep.limit * k**n) for k, c in enumerate(counts)]
    return {"dims": [[k, int(c)] for k, c in enumerate(counts)], "asymptotics": rep}, [], rows


def cmd_stratify(args):
    return {"stratification": stratification(make_sphere(_weights(args)))}, [], None


def cmd_levi(args):
    X = make_sphere(_weights(args))
    x = _point(args.point, X.dim)
    if x is None:
        x = generic_points(X.dim, 1, args.seed)[0]
    closed, frame = levi_data(X, x), levi_data(X, x, method="frame")
    gap = max(abs(closed.det_levi - frame.det_levi), abs(closed.vol_density - frame.vol_density),
              max(abs(u - v) for u, v in zip(closed.levi_eigenvalues, frame.levi_eigenvalues)))
    res = check_contact(X, x)
    verdicts = [Verdict(1, "closed form matches frame computation", gap <= args.tol, gap, args.tol),
                Verdict(2, "contact identities", res.max <= args.tol, res.max, args.tol)]
    return {"point": x, "isotropy": isotropy_order(X, x), "closed": closed, "frame": frame,
            "contact_residuals": res}, verdicts, None


def cmd_geom_integral(args):
    X = make_sphere(_weights(args))
    quad = QuadratureSpec(args.method, samples=args.samples, seed=args.seed)
    est = geometric_integral(X, quad)
    exact = exact_geometric_integral(X)
    allowed = max(3 * est.stderr, args.tol * exact)
    verdict = Verdict(1, "integral matches closed form", abs(est.value - exact) <= allowed,
                      abs(est.value - exact), allowed)
    return {"estimate": est, "exact": exact}, [verdict], None


def cmd_integrate_orbifold(args):
    w = tuple(_int_list(args.w))
    rows, verdicts = [], []
    for i, (name, (g, full)) in enumerate(INTEGRANDS.items()):
        try:
            c = compare_atlases(args.m, w, g, name, samples=args.samples, seed=args.seed + i,
                                exact=full / args.m)
        except ValueError as exc:
            if isinstance(exc, AtlasError):
                raise
            rows.append({"integrand": name, "skipped": str(exc)})
            continue
        rows.append(c)
        verdicts.append(Verdict(len(verdicts) + 1, f"atlases agree on {name}", c.z_score <= 3.0, c.z_score, 3.0))
    return {"m": args.m, "w": w, "integrals": rows}, verdicts, None


def cmd_kernel_diag(args):
    X = make_sphere(_weights(args))
    x = _point(args.point, X.dim)
    if x is None:
        x = generic_points(X.dim, 1, args.seed)[0]
    if args.k_list:
        ks = _int_list(args.k_list)
    else:
        ell = isotropy_order(X, x)
        ks = sorted({ell * round(k / ell) for k in range(100, 201, 10)})
    series = diagonal_series(X, x, ks)
    fit = fit_leading(series, levi_data(X, x))
    kappa = calibrated_kappa(X.n)
    err = abs(fit.kappa_per_sheet - kappa) / kappa
    c0, c1 = fit.b0_hat, fit.b0_hat * fit.correction
    rows = [(int(k), v, c0 * k**X.n + c1 * k ** (X.n - 1), v - c0 * k**X.n - c1 * k ** (X.n - 1))
            for k, v in zip(series.ks, series.values)]
    return ({"point": x, "stratum": series.stratum, "fit": fit, "kappa": kappa},
            [Verdict(1, "kappa_hat / ell matches calibrated kappa", err <= 0.03, err, 0.03)], rows)


def cmd_kernel_offdiag(args):
    X = make_sphere(_weights(args))
    x = _point(args.point, X.dim)
    y = _point(args.point2, X.dim)
    if x is None or y is None:
        raise ConfigError("kernel-offdiag needs --point and --point2")
    ks = _int_list(args.k_list) if args.k_list else list(range(20, 201, 4))
    fit = offdiag_decay(X, x, y, ks)
    a, b = -fit.rate, fit.log_amplitude
    rows = [(k, v, a * k + b, v - a * k - b) for k, v in zip(fit.ks, fit.log_values)]
    verdicts = [Verdict(1, "decay rate inside the sandwich", fit.in_sandwich, fit.rate,
                        [fit.orbit_distance**2 / 10, 10 * fit.orbit_distance**2])]
    if math.isfinite(fit.rate):
        verdicts.append(Verdict(2, "linear fit quality", fit.r_squared >= 0.95, fit.r_squared, 0.95))
    return {"decay": fit}, verdicts, rows


def cmd_stratum(args):
    X = make_sphere(_weights(args))
    x = _point(args.point, X.dim)
    if x is None:
        raise ConfigError("stratum needs --point")
    rep = stratum_selection(X, x, k_max=args.k_max)
    rows = [(k, v * k**X.n, rep.stratum_limit * k**X.n, (v - rep.stratum_limit) * k**X.n)
            for k, v in zip(rep.admissible_ks, rep.rescaled)]
    verdicts = [Verdict(1, "exact zeros off the semigroup", rep.max_abs_on_vanishing <= 1e-14,
                        rep.max_abs_on_vanishing, 1e-14),
                Verdict(2, "top-window fluctuation", rep.fluctuation < 0.05, rep.fluctuation, 0.05)]
    return {"selection": rep}, verdicts, rows


def cmd_quotient_avg(args):
    w = tuple(_int_list(args.w))
    ks = _int_list(args.k_list) if args.k_list else [3, 7, 12]
    rng = np.random.default_rng(args.seed)
    rows, worst = [], 0.0
    for k in ks:
        basis = build_basis((1, 1), k)
        xs = acceptance.random_points(2, args.pairs, rng)
        ys = acceptance.random_points(2, args.pairs, rng)
        dev = max(averaged_kernel(basis, args.m, w, x, y).max_deviation for x, y in zip(xs, ys))
        worst = max(worst, dev)
        rows.append({"k": k, "max_deviation": dev})
    return ({"m": args.m, "w": w, "rows": rows},
            [Verdict(1, "three averaging routes agree", worst <= args.tol, worst, args.tol)], None)


def cmd_calibrate(args):
    if args.n < 1:
        raise ConfigError("--n must be >= 1")
    kappa = calibrate(make_sphere((1,) * (args.n + 1)))
    return {"n": args.n, "kappa": kappa}, [], None


def cmd_embed(args):
    X = make_sphere(_weights(args))
    sweep = embedding_sweep(X, K_max=args.k_max, n_pairs=args.samples, n_points=50, seed=args.seed)
    ok = sweep.k_star is not None and sweep.monotone
    return ({"sweep": sweep},
            [Verdict(1, "embedding from some K on", ok, -1 if sweep.k_star is None else sweep.k_star,
                     args.k_max)], None)


def _pair(args):
    b = _int_list(args.b) if args.b else None
    if b is None:
        raise ConfigError("--b is required")
    return reduction_pair(_weights(args), b)


def cmd_reduce(args):
    cmp = reduction_compare(_pair(args), args.k_max)
    rows = [(k, u, v, u - v) for k, u, v in cmp.table]
    return ({"comparison": cmp},
            [Verdict(1, "dimensions equal from a finite threshold", cmp.passed,
                     -1 if cmp.threshold is None else cmp.threshold, args.k_max)], rows)


def cmd_sigma(args):
    pair = _pair(args)
    ks = _int_list(args.k_list) if args.k_list else list(range(2, 21, 2))
    reps = [sigma_map(pair, k) for k in ks]
    smallest = min(r.smallest for r in reps)
    stability = max(r.stability for r in reps)
    return ({"sigma": reps},
            [Verdict(1, "sigma injective", smallest > 1e-6, smallest, 1e-6),
             Verdict(2, "stable under quadrature doubling", stability <= 0.01, stability, 0.01)], None)


def cmd_suite(args):
    verdicts = acceptance.run_battery(args.seed, log=lambda s: print(s, file=sys.stderr))
    return {"criteria": len(verdicts)}, verdicts, None


COMMANDS = {
    "dims": cmd_dims,
    "stratify": cmd_stratify,
    "levi": cmd_levi,
    "geom-integral": cmd_geom_integral,
    "integrate-orbifold": cmd_integrate_orbifold,
    "kernel-diag": cmd_kernel_diag,
    "kernel-offdiag": cmd_kernel_offdiag,
    "stratum": cmd_stratum,
    "quotient-avg": cmd_quotient_avg,
    "calibrate": cmd_calibrate,
    "embed": cmd_embed,
    "reduce": cmd_reduce,
    "sigma": cmd_sigma,
    "suite": cmd_suite,
}


# ---------------------------------------------------------------- plumbing


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--weights", default="1,2", help="comma-separated positive integers")
    common.add_argument("--k-max", type=int, default=None)
    common.add_argument("--k-list", default=None, help="comma list or start:stop:step")
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--tol", type=float, default=None)
    common.add_argument("--out", default=None, help="JSON report path (stdout if omitted)")
    common.add_argument("--csv", default=None, help="optional CSV plot data (k, value, fit, residual)")
    common.add_argument("--quick", action="store_true")

    parser = argparse.ArgumentParser(prog="szegolab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common])
        if name in ("levi", "kernel-diag", "kernel-offdiag", "stratum"):
            p.add_argument("--point", default=None, help="comma-separated complex coordinates")
        if name == "kernel-offdiag":
            p.add_argument("--point2", default=None)
        if name in ("integrate-orbifold", "quotient-avg"):
            p.add_argument("--m", type=int, default=2)
            p.add_argument("--w", default="1,1")
        if name == "quotient-avg":
            p.add_argument("--pairs", type=int, default=100)
        if name == "geom-integral":
            p.add_argument("--method", choices=["montecarlo", "product1d"], default="montecarlo")
        if name == "calibrate":
            p.add_argument("--n", type=int, default=1)
        if name in ("reduce", "sigma"):
            p.add_argument("--b", default=None, help="auxiliary circle weights")
    return parser


DEFAULTS = {
    "dims": {"k_max": 100},
    "stratum": {"k_max": 200},
    "embed": {"k_max": 10, "samples": 500},
    "reduce": {"k_max": 100},
    "geom-integral": {"tol": 0.0},
    "integrate-orbifold": {"samples": 200_000},
    "levi": {"tol": 1e-6},
    "quotient-avg": {"tol": 1e-10},
}


def _apply_defaults(args) -> None:
    if args.command == "geom-integral" and args.samples is None:
        args.samples = 64 if args.method == "product1d" else 200_000
    for key, value in DEFAULTS.get(args.command, {}).items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    if args.tol is not None and args.tol < 0:
        raise ConfigError("--tol must be nonnegative")
    if args.samples is not None and args.samples < 1:
        raise ConfigError("--samples must be positive")


def _atomic_write(path: str, text: str) -> None:
    target = Path(path)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _check_writable(path: str | None) -> None:
    if path is None:
        return
    parent = Path(path).parent
    if not parent.is_dir() or not os.access(parent, os.W_OK):
        raise ConfigError(f"output directory {str(parent)!r} is not writable")


def _csv_text(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["k", "value", "fit", "residual"])
    for r in rows:
        writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        _apply_defaults(args)
        _check_writable(args.out)
        _check_writable(args.csv)
        results, verdicts, rows = COMMANDS[args.command](args)
    except (FitRejected, CalibrationError, BasePointError, AtlasError, ArithmeticError,
            RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # precondition violations: malformed input, unsupported configurations
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    config = {k: v for k, v in sorted(vars(args).items()) if k not in ("out", "csv")}
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "config": config,
        "results": results,
        "verdicts": [{"id": v.id, "name": v.name, "status": v.status, "measured": v.measured,
                      "threshold": v.threshold, "details": v.details} for v in verdicts],
    }
    text = json.dumps(to_jsonable(report), sort_keys=True, indent=2, allow_nan=False) + "\n"
    if args.out:
        _atomic_write(args.out, text)
    else:
        sys.stdout.write(text)
    if args.csv and rows is not None:
        _atomic_write(args.csv, _csv_text(rows))
    for v in verdicts:
        if args.command != "suite":
            print(v.line(), file=sys.stderr)
    print(f"{args.command}: {time.perf_counter() - start:.2f} s", file=sys.stderr)
    return EXIT_FAIL if any(not v.passed for v in verdicts) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
