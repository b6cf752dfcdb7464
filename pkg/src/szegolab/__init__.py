"""Numerical Szego-kernel experiments on weighted CR spheres and their cyclic quotients."""

from .geometry import (
    LeviData,
    ModelSpace,
    Stratification,
    WeightVector,
    check_contact,
    geometric_integral,
    isotropy_order,
    levi_data,
    make_sphere,
    stratification,
)
from .hardy import build_basis, dim_asymptotics, dim_fourier, enumerate_monomials, invariant_subbasis
from .kernels import averaged_kernel, calibrate, fit_leading, offdiag_decay, stratum_selection, szego_eval
from .quadrature import QuadratureSpec

__version__ = "0.1.0"

__all__ = [
    "LeviData",
    "ModelSpace",
    "QuadratureSpec",
    "Stratification",
    "WeightVector",
    "averaged_kernel",
    "build_basis",
    "calibrate",
    "check_contact",
    "dim_asymptotics",
    "dim_fourier",
    "enumerate_monomials",
    "fit_leading",
    "geometric_integral",
    "invariant_subbasis",
    "isotropy_order",
    "levi_data",
    "make_sphere",
    "offdiag_decay",
    "stratification",
    "stratum_selection",
    "szego_eval",
]
