"""Shared numeric plumbing: precision management, the arithmetic
configuration record, and the Evaluation result bundle.

All numerics run on the global mpmath context.  The library default is
128 bits; callers may either set mp.prec themselves or pass an explicit
``prec`` to any public entry point.  Determinism holds for a fixed
precision and fixed summation order, which every loop in this package
uses.
"""

from dataclasses import dataclass, field
from contextlib import contextmanager

from mpmath import mp

DEFAULT_PREC = 128
GUARD_BITS = 16

if mp.prec < DEFAULT_PREC:
    mp.prec = DEFAULT_PREC


def resolve_prec(prec=None):
    """Working precision in bits: explicit argument wins, else the
    current global context."""
    if prec is None:
        return mp.prec
    if prec < 64:
        raise ValueError("precision below 64 bits is not supported")
    return int(prec)


@contextmanager
def working_prec(prec=None, guard=GUARD_BITS):
    """Temporarily run at prec + guard bits; results should be produced
    at this precision and are accurate to roughly prec bits."""
    p = resolve_prec(prec)
    with mp.workprec(p + guard):
        yield p


@dataclass(frozen=True)
class Params:
    """Arithmetic configuration (k, t, N, D).

    k, t index the kernel weight data (0 <= t <= k-1), N is the level
    and D the (negative, odd, fundamental) field discriminant.  Deeper
    validation of D and of the split condition on N lives in quadfield;
    this record only enforces the shape.
    """

    k: int
    t: int
    N: int
    D: int

    def __post_init__(self):
        for name in ("k", "t", "N", "D"):
            v = getattr(self, name)
            if not isinstance(v, int):
                raise TypeError(f"{name} must be an integer, got {v!r}")
        if self.k < 1 or not (0 <= self.t <= self.k - 1):
            raise ValueError(f"need 0 <= t <= k-1, got k={self.k}, t={self.t}")
        if self.N < 1:
            raise ValueError(f"level must be positive, got N={self.N}")
        if self.D >= 0:
            raise ValueError(f"discriminant must be negative, got D={self.D}")

    @property
    def n(self):
        return self.k - self.t - 1


@dataclass
class Evaluation:
    """A numeric result with its reproducibility record.

    value       mpf/mpc result
    prec        precision bits the value was computed at
    truncation  cutoff actually used (series length, shell bound, ...)
    tail        estimate of the truncation error magnitude (None if the
                computation is exact/finite)
    meta        free-form provenance: parameters, tolerances, notes
    """

    value: object
    prec: int
    truncation: object = None
    tail: object = None
    meta: dict = field(default_factory=dict)

    def __float__(self):
        return float(self.value)
