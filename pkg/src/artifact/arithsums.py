"""Genus-character divisor sums.

sigma values are exact integers; the derivative-weighted sums are kept
symbolic as integer combinations of logs of primes and floated only on
demand, so downstream identities can be assembled exactly.
"""

import math
from dataclasses import dataclass

from mpmath import mp
from sympy import divisors, factorint

from .core import working_prec
from .quadfield import Disc, QuadClass, genus_character, kronecker

__all__ = [
    "LogLedger", "SigmaContext", "make_context", "eps_A", "sigma_A",
    "sigma_prime_A", "sigma_table",
]


@dataclass(frozen=True)
class LogLedger:
    """Exact combination sum_p c_p log(p) over primes, c_p integers."""

    terms: tuple = ()

    @classmethod
    def from_dict(cls, coeffs):
        return cls(tuple(sorted((p, c) for p, c in coeffs.items() if c)))

    @property
    def coeffs(self):
        return dict(self.terms)

    @property
    def is_zero(self):
        return not self.terms

    def to_real(self, prec=None):
        with working_prec(prec):
            return mp.fsum(c * mp.log(p) for p, c in self.terms)

    def __add__(self, other):
        if not isinstance(other, LogLedger):
            return NotImplemented
        out = self.coeffs
        for p, c in other.terms:
            out[p] = out.get(p, 0) + c
        return LogLedger.from_dict(out)

    def __rmul__(self, scalar):
        return LogLedger(tuple((p, scalar * c) for p, c in self.terms if scalar * c))

    __mul__ = __rmul__


def _prime_disc(p):
    """The discriminant p* = (-1)^((p-1)/2) p attached to an odd prime."""
    return p if p % 4 == 1 else -p


@dataclass(frozen=True)
class SigmaContext:
    """Level, orientation, and class data with the genus table baked in."""

    disc: Disc
    N: int
    beta: int
    cls: QuadClass
    splittings: tuple  # ((|D2|, D1, D2, chi_{D1.D2}(cls)), ...)

    def split_for(self, d):
        m = math.gcd(d, -self.disc.D)
        for mm, D1, D2, chi in self.splittings:
            if mm == m:
                return D1, D2, chi
        raise AssertionError(f"no splitting for gcd {m}")


def make_context(D, N, beta, cls):
    disc = D if isinstance(D, Disc) else Disc(D)
    if not (isinstance(N, int) and N >= 1):
        raise ValueError(f"level must be a positive integer, got {N}")
    if (beta * beta - disc.D) % (4 * N) != 0:
        raise ValueError(
            f"orientation {beta} does not satisfy beta^2 = D mod 4N")
    if not isinstance(cls, QuadClass) or cls.D != disc.D:
        raise ValueError(f"class {cls} does not belong to D = {disc.D}")
    spl = []
    for m in divisors(-disc.D):
        D2 = math.prod(_prime_disc(p) for p in factorint(m))
        D1 = disc.D // D2
        spl.append((m, D1, D2, genus_character(D1, D2, cls)))
    return SigmaContext(disc, N, beta, cls, tuple(spl))


def eps_A(ctx, n, d, second_kind=False):
    """The unit factor at a divisor d of n; 0 on the degenerate gcd.

    second_kind negates the argument of the D2 character: the series
    paired with the second-kind kernel draws its divisor terms from the
    reflected Fourier index, which flips that sign at ramified d.
    """
    if d <= 0 or n % d != 0:
        raise ValueError(f"{d} is not a positive divisor of {n}")
    e = n // d
    if math.gcd(math.gcd(d, e), -ctx.disc.D) != 1:
        return 0
    D1, D2, chi = ctx.split_for(d)
    arg = ctx.N * e if second_kind else -ctx.N * e
    return kronecker(D1, d) * kronecker(D2, arg) * chi


def sigma_A(ctx, n):
    """Exact integer divisor sum of the eps values, second-kind side."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    return sum(eps_A(ctx, n, d, second_kind=True) for d in divisors(n))


def sigma_prime_A(ctx, n):
    """Divisor sum weighted by log(n/d^2), as a prime-log ledger.

    First-kind side, so the eps factors keep the unreflected sign.
    """
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    vn = factorint(n)
    out = {}
    for d in divisors(n):
        e = eps_A(ctx, n, d)
        if not e:
            continue
        vd = factorint(d)
        for p, c in vn.items():
            out[p] = out.get(p, 0) + e * (c - 2 * vd.get(p, 0))
    return LogLedger.from_dict(out)


def sigma_table(ctx, upto):
    """sigma_A(n) for n = 1..upto as one array, by Dirichlet convolution
    of residue-periodic factors, one splitting at a time."""
    import numpy as np

    if upto < 1:
        raise ValueError(f"need upto >= 1, got {upto}")
    aD = -ctx.disc.D
    idx = np.arange(upto + 1, dtype=np.int64)
    out = np.zeros(upto + 1, dtype=np.int64)
    for m, D1, D2, chi in ctx.splittings:
        s0 = kronecker(D2, ctx.N) * chi
        if s0 == 0:
            continue
        p1, p2 = abs(D1), abs(D2)
        row1 = np.array([kronecker(D1, r) for r in range(p1)], dtype=np.int64)
        row2 = np.array([kronecker(D2, r) for r in range(p2)], dtype=np.int64)
        a = row1[idx % p1]
        b = s0 * row2[idx % p2]
        # enforce gcd(d, |D|) = m on the d side, gcd(e, m) = 1 on the e side
        for p in factorint(aD):
            if m % p == 0:
                a[idx % p != 0] = 0
                b[idx % p == 0] = 0
            else:
                a[idx % p == 0] = 0
        a[0] = b[0] = 0
        for d in range(1, upto + 1):
            ad = a[d]
            if ad:
                out[d::d] += ad * b[1:upto // d + 1]
    return out
