"""High-precision verification library for CM height identities:
special functions, imaginary-quadratic class field data, theta
coefficients, divisor sums, holomorphic-projection Fourier
coefficients, Green's-kernel lattice sums, and Rankin-Selberg
L-series, with a verification CLI."""

from .core import DEFAULT_PREC, Params, Evaluation
from .lseries import (
    Eigenform,
    RSSeries,
    bundled_eigenform,
    central_derivative,
    ingest_eigenform,
    lambda_completed,
    petersson_quadrature,
    rs_coefficients,
)

__version__ = "0.1.0"
