"""Weighted CR spheres: circle action, isotropy strata, contact and Levi data.

The model is X = S^{2n+1} in C^{n+1} with the standard CR structure and the
circle action ``e^{i theta} . z = (e^{i a_j theta} z_j)``. The contact form is
``omega_0 = alpha / S_a`` with ``alpha = (i/2) sum(conj(z_j) dz_j - z_j conj(dz_j))``
and ``S_a(z) = sum a_j |z_j|^2``, so the action generator is the Reeb field.

Metric conventions: T^{1,0}X carries the Hermitian coordinate inner product
``sum u_j conj(v_j)``, HX the Euclidean one, and R is declared unit length and
orthogonal to HX. With these choices every Levi eigenvalue is ``f/2`` and
``dV_X = f dsigma`` where ``f = 1/S_a``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .quadrature import QuadratureSpec, SpherePoints, sphere_rule, weighted_mean

SUPPORT_THRESHOLD = 1e-9
UNIT_TOL = 1e-12


class InvalidPointError(ValueError):
    """Raised for points off the sphere or with empty support."""


@dataclass(frozen=True)
class WeightVector:
    """Positive integer weights ``a = (a_1, ..., a_{n+1})`` of the circle action."""

    a: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(v) for v in self.a)
        if len(a) < 2:
            raise ValueError("need at least two weights (n >= 1)")
        if any(v < 1 for v in a):
            raise ValueError(f"weights must be positive integers, got {a}")
        if any(int(v) != v for v in self.a):
            raise ValueError("weights must be integers")
        object.__setattr__(self, "a", a)

    @property
    def n(self) -> int:
        return len(self.a) - 1

    @property
    def array(self) -> np.ndarray:
        return np.asarray(self.a, dtype=float)

    @classmethod
    def parse(cls, text: str) -> "WeightVector":
        """Parse ``"1,2,3"``."""
        try:
            parts = [int(p) for p in text.replace(" ", "").split(",") if p != ""]
        except ValueError as exc:
            raise ValueError(f"malformed weights {text!r}") from exc
        return cls(tuple(parts))

    def __str__(self) -> str:
        return ",".join(str(v) for v in self.a)


def as_weights(a) -> WeightVector:
    if isinstance(a, WeightVector):
        return a
    if isinstance(a, ModelSpace):
        return a.weights
    return WeightVector(tuple(a))


def sphere_point(z, tol: float = UNIT_TOL) -> np.ndarray:
    """Validate and return ``z`` as a complex unit vector."""
    z = np.asarray(z, dtype=complex)
    if z.ndim != 1 or len(z) < 2:
        raise InvalidPointError("a sphere point is a 1-d vector of >= 2 complex numbers")
    norm2 = float(np.sum(np.abs(z) ** 2))
    if abs(norm2 - 1.0) > tol:
        raise InvalidPointError(f"point is off the unit sphere (|z|^2 = {norm2!r})")
    return z


def normalize(z) -> np.ndarray:
    z = np.asarray(z, dtype=complex)
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


@dataclass(frozen=True)
class Stratification:
    ell_values: tuple[int, ...]
    ell0: int
    p: int


@dataclass(frozen=True)
class LeviData:
    f: float
    levi_eigenvalues: tuple[float, ...]
    det_levi: float
    vol_density: float


@dataclass(frozen=True)
class ContactResidual:
    reeb_normalization: float
    horizontal_annihilation: float
    reeb_interior: float

    @property
    def max(self) -> float:
        return max(self.reeb_normalization, self.horizontal_annihilation, self.reeb_interior)


@dataclass(frozen=True)
class IntegralEstimate:
    value: float
    stderr: float
    method: str


@dataclass(frozen=True)
class ModelSpace:
    """The weighted sphere S^{2n+1} with its circle action and contact form."""

    weights: WeightVector
    _a: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_a", self.weights.array)

    @property
    def n(self) -> int:
        return self.weights.n

    @property
    def dim(self) -> int:
        return self.weights.n + 1

    def act(self, z, theta) -> np.ndarray:
        """``e^{i theta} . z``; an array ``theta`` adds leading axes."""
        phase = np.exp(1j * np.multiply.outer(np.asarray(theta, dtype=float), self._a))
        return np.asarray(z, dtype=complex) * phase

    def s_a(self, z) -> np.ndarray:
        z = np.asarray(z)
        return np.sum(self._a * np.abs(z) ** 2, axis=-1)

    def density(self, z) -> np.ndarray:
        """``dV_X / dsigma`` = f = 1 / S_a."""
        return 1.0 / self.s_a(z)

    def reeb(self, z) -> np.ndarray:
        """The action generator ``d/dtheta (e^{i theta} . z)`` at ``theta = 0``."""
        return 1j * self._a * np.asarray(z, dtype=complex)

    def contact_form(self, z, v) -> np.ndarray:
        """``omega_0(v)`` at ambient point ``z`` (any point of C^{n+1} minus 0)."""
        z = np.asarray(z, dtype=complex)
        v = np.asarray(v, dtype=complex)
        alpha = -np.imag(np.sum(v * np.conj(z), axis=-1))
        return alpha / self.s_a(z)


def make_sphere(a) -> ModelSpace:
    """Build the model weighted sphere for weights ``a``."""
    if isinstance(a, str):
        return ModelSpace(WeightVector.parse(a))
    if not isinstance(a, WeightVector):
        a = tuple(a)
        if len(a) == 0:
            raise ValueError("empty weight vector")
        a = WeightVector(a)
    return ModelSpace(a)


def support(z, threshold: float = SUPPORT_THRESHOLD) -> tuple[int, ...]:
    return tuple(int(j) for j in np.flatnonzero(np.abs(np.asarray(z)) > threshold))


def isotropy_order(X: ModelSpace, x) -> int:
    """Order of the circle-action stabilizer at ``x``: gcd of supported weights."""
    x = sphere_point(x, tol=1e-9)
    supp = support(x)
    if not supp:
        raise InvalidPointError("all coordinates are below the support threshold")
    return reduce(math.gcd, (X.weights.a[j] for j in supp))


def stratification(X: ModelSpace) -> Stratification:
    """Isotropy orders realized on X; every nonempty support occurs on the sphere."""
    a = X.weights.a
    ells = set()
    for r in range(1, len(a) + 1):
        for subset in itertools.combinations(a, r):
            ells.add(reduce(math.gcd, subset))
    ell_values = tuple(sorted(ells))
    p = reduce(lambda u, v: u * v // math.gcd(u, v), ell_values)
    return Stratification(ell_values=ell_values, ell0=reduce(math.gcd, a), p=p)


def horizontal_frame(z) -> np.ndarray:
    """Orthonormal basis (rows) of T^{1,0}_z X = {u : <u, z> = 0} in C^{n+1}."""
    z = np.asarray(z, dtype=complex)
    m = len(z)
    # columns 1..n of a unitary whose first column is z span the complement
    q, _ = np.linalg.qr(np.column_stack([z, np.eye(m, dtype=complex)]))
    q = q[:, :m]
    q[:, 0] *= np.vdot(q[:, 0], z) / abs(np.vdot(q[:, 0], z))
    return q[:, 1:].T.copy()


def real_horizontal_frame(z) -> np.ndarray:
    """Euclidean-orthonormal real basis (rows, as complex displacements) of HX."""
    u = horizontal_frame(z)
    return np.concatenate([u, 1j * u], axis=0)


def _to_real(v: np.ndarray) -> np.ndarray:
    return np.concatenate([v.real, v.imag], axis=-1)


def _contact_covector(X: ModelSpace, xr: np.ndarray) -> np.ndarray:
    """Components of omega_0 on R^{2n+2} at the real point ``xr``."""
    m = X.dim
    z = xr[:m] + 1j * xr[m:]
    basis = np.concatenate([np.eye(m), 1j * np.eye(m)], axis=0)
    return X.contact_form(z, basis)


def contact_differential(X: ModelSpace, z, h: float = 1e-5) -> np.ndarray:
    """Antisymmetric matrix of d(omega_0) on R^{2n+2} by central differences."""
    xr = _to_real(np.asarray(z, dtype=complex))
    d = len(xr)
    jac = np.empty((d, d))
    for a in range(d):
        e = np.zeros(d)
        e[a] = h
        jac[a] = (_contact_covector(X, xr + e) - _contact_covector(X, xr - e)) / (2 * h)
    # jac[a, b] = d_a omega_b;  d omega = d_a omega_b - d_b omega_a
    return jac - jac.T


def levi_data(X: ModelSpace, x, method: str = "closed") -> LeviData:
    """Levi eigenvalues, determinant and volume density at ``x``.

    ``method="closed"`` uses the closed form (eigenvalues f/2, density f);
    ``method="frame"`` rebuilds both from a frame of T^{1,0}X and a
    finite-difference d(omega_0), and is kept as an internal cross-check.
    """
    x = sphere_point(x, tol=1e-9)
    f = float(1.0 / X.s_a(x))
    if method == "closed":
        eig = (0.5 * f,) * X.n
        return LeviData(f=f, levi_eigenvalues=eig, det_levi=float(np.prod(eig)), vol_density=f)
    if method != "frame":
        raise ValueError(f"unknown method {method!r}")
    omega = contact_differential(X, x)
    frame = horizontal_frame(x)
    # U = (v - iJv)/2 for the real vector v with complex coordinates u
    cu = [0.5 * (_to_real(u) - 1j * _to_real(1j * u)) for u in frame]
    levi = np.empty((X.n, X.n), dtype=complex)
    for j, U in enumerate(cu):
        for k, V in enumerate(cu):
            levi[j, k] = -(U @ omega @ np.conj(V)) / 2j
    eig = np.linalg.eigvalsh(0.5 * (levi + levi.conj().T))
    # declared metric: HX Euclidean, R unit and normal, so dV_X / dsigma is the
    # inverse Euclidean volume of the parallelepiped (HX frame, R)
    cols = np.stack([_to_real(v) for v in real_horizontal_frame(x)] + [_to_real(X.reeb(x))])
    euclid_vol = math.sqrt(abs(np.linalg.det(cols @ cols.T)))
    return LeviData(
        f=f,
        levi_eigenvalues=tuple(float(e) for e in eig),
        det_levi=float(np.prod(eig)),
        vol_density=1.0 / euclid_vol,
    )


def check_contact(X: ModelSpace, x, h: float = 1e-5) -> ContactResidual:
    """Residuals of omega_0(R) = -1, omega_0|HX = 0 and i_R d(omega_0) = 0 on TX."""
    x = sphere_point(x, tol=1e-9)
    R = X.reeb(x)
    frame = real_horizontal_frame(x)
    omega = contact_differential(X, x, h=h)
    Rr = _to_real(R)
    tangent = [_to_real(v) for v in frame] + [Rr]
    return ContactResidual(
        reeb_normalization=float(abs(X.contact_form(x, R) + 1.0)),
        horizontal_annihilation=float(np.max(np.abs(X.contact_form(x, frame)))),
        reeb_interior=float(max(abs(Rr @ omega @ v) for v in tangent)),
    )


def levi_density(X: ModelSpace, z) -> np.ndarray:
    """``|det L| * dV_X/dsigma`` at an array of points (closed form)."""
    f = X.density(z)
    return (0.5 * f) ** X.n * f


def geometric_integral(X: ModelSpace, quad: QuadratureSpec | None = None) -> IntegralEstimate:
    """``int_X |det L_x| dV_X`` with a standard-error estimate (zero when exact)."""
    quad = quad or QuadratureSpec()
    if quad.method == "product1d":
        if X.n != 1:
            raise ValueError("product1d quadrature requires n = 1")
        x, w = np.polynomial.legendre.leggauss(quad.samples)
        t = 0.5 * (x + 1.0)
        z = np.stack([np.sqrt(1 - t), np.sqrt(t)], axis=-1)
        # phases integrate to (2 pi)^2, dsigma = 1/2 dt dphi dphi
        value = 2.0 * math.pi**2 * float(np.sum(0.5 * w * levi_density(X, z)))
        return IntegralEstimate(value=value, stderr=0.0, method="product1d")
    rule: SpherePoints = sphere_rule(X.dim, quad)
    value, se = weighted_mean(levi_density(X, rule.z), rule)
    return IntegralEstimate(value=float(value), stderr=se, method="montecarlo")


def exact_geometric_integral(X: ModelSpace) -> float:
    """Closed form ``2^{-n} vol(S^{2n+1}) / prod(a_j)`` (Dirichlet average of S_a^{-n-1})."""
    n = X.n
    return 2.0 ** (-n) * 2.0 * math.pi ** (n + 1) / math.factorial(n) / math.prod(X.weights.a)
