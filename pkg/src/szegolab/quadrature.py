"""Quadrature rules on odd-dimensional spheres.

Two independent routes are provided: seeded Monte-Carlo (normalized Gaussian
vectors, split into fixed-size shards so the result does not depend on the
number of worker threads) and, for S^3, an exact product rule built from a
Gauss-Legendre rule in ``t = |z_2|^2`` and trapezoid rules in both phases.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

SHARD_SIZE = 50_000
THREADS_ENV = "SZEGOLAB_THREADS"


@dataclass(frozen=True)
class QuadratureSpec:
    """How to integrate over the sphere.

    ``method`` is ``"montecarlo"`` or ``"product1d"``. For Monte-Carlo,
    ``samples`` is the point count; for the product rule it is the number of
    Gauss-Legendre nodes in ``t`` (phases get ``phase_nodes`` points each).
    """

    method: str = "montecarlo"
    samples: int = 200_000
    seed: int = 0
    phase_nodes: int | None = None

    def __post_init__(self):
        if self.method not in ("montecarlo", "product1d"):
            raise ValueError(f"unknown quadrature method {self.method!r}")
        if self.samples < 1:
            raise ValueError("samples must be positive")


@dataclass(frozen=True)
class SpherePoints:
    """Nodes ``z`` (shape ``(N, n+1)``) with weights summing to vol(S^{2n+1})."""

    z: np.ndarray
    weights: np.ndarray
    stochastic: bool


def sphere_volume(n: int) -> float:
    """Euclidean volume of S^{2n+1} in C^{n+1}: 2 pi^{n+1} / n!."""
    return 2.0 * math.pi ** (n + 1) / math.factorial(n)


def _thread_count() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _shard(seed_seq: np.random.SeedSequence, size: int, dim: int) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    g = rng.standard_normal((size, 2 * dim))
    z = g[:, :dim] + 1j * g[:, dim:]
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def uniform_sphere_samples(dim: int, samples: int, seed: int) -> np.ndarray:
    """Uniform points on the unit sphere of C^dim.

    Shards of ``SHARD_SIZE`` points each draw from their own child of
    ``SeedSequence(seed)``; the output is identical for any thread count.
    """
    sizes = [SHARD_SIZE] * (samples // SHARD_SIZE)
    if samples % SHARD_SIZE:
        sizes.append(samples % SHARD_SIZE)
    children = np.random.SeedSequence(seed).spawn(len(sizes))
    threads = _thread_count()
    if threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(threads) as pool:
            parts = list(pool.map(lambda a: _shard(a[0], a[1], dim), zip(children, sizes)))
    else:
        parts = [_shard(c, s, dim) for c, s in zip(children, sizes)]
    return np.concatenate(parts, axis=0)


def product_rule_s3(t_nodes: int, phase_nodes: int) -> SpherePoints:
    """Product rule on S^3 using dsigma = 1/2 dt dphi_1 dphi_2.

    Exact for integrands ``g(t) e^{i(j phi_1 + l phi_2)}`` whenever ``g`` is a
    polynomial of degree < 2 * t_nodes and ``|j|, |l| < phase_nodes``.
    """
    x, w = np.polynomial.legendre.leggauss(t_nodes)
    t = 0.5 * (x + 1.0)
    wt = 0.5 * w
    phi = 2.0 * math.pi * np.arange(phase_nodes) / phase_nodes
    wphi = 2.0 * math.pi / phase_nodes
    T, P1, P2 = np.meshgrid(t, phi, phi, indexing="ij")
    W = 0.5 * wt[:, None, None] * wphi * wphi * np.ones_like(T)
    z = np.stack(
        [np.sqrt(1.0 - T) * np.exp(1j * P1), np.sqrt(T) * np.exp(1j * P2)], axis=-1
    ).reshape(-1, 2)
    return SpherePoints(z=z, weights=W.reshape(-1), stochastic=False)


def sphere_rule(dim: int, quad: QuadratureSpec, max_degree: int = 0) -> SpherePoints:
    """Materialize a rule on the unit sphere of C^dim according to ``quad``.

    ``max_degree`` is the largest total monomial degree the integrand carries
    in each phase; the product rule sizes its phase grid from it.
    """
    if quad.method == "montecarlo":
        z = uniform_sphere_samples(dim, quad.samples, quad.seed)
        w = np.full(len(z), sphere_volume(dim - 1) / len(z))
        return SpherePoints(z=z, weights=w, stochastic=True)
    if dim != 2:
        raise ValueError("product1d quadrature is only available on S^3 (n = 1)")
    phase = quad.phase_nodes or (2 * max_degree + 2)
    return product_rule_s3(quad.samples, phase)


def weighted_mean(values: np.ndarray, rule: SpherePoints) -> tuple[float, float]:
    """Integral estimate and its standard error (zero for deterministic rules)."""
    values = np.asarray(values)
    total = np.sum(rule.weights * values)
    if not rule.stochastic:
        return total, 0.0
    vol = np.sum(rule.weights)
    per_sample = vol * values
    se = np.std(per_sample, ddof=1) / math.sqrt(len(values))
    return total, float(se)
