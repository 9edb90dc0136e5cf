"""Unramified Hecke characters of even infinity type (2t, 0), the
weighted representation numbers attached to an ideal class, and bulk
partial theta coefficient tables.

Values are kept exact as x + y*sqrt(D) with rational x, y whenever the
class group permits (always when h = 1); otherwise one complex root of
unity multiplies an exact lattice sum, so the only floating step is
that single principal-root extraction.
"""

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp

from .core import working_prec
from .quadfield import (
    Disc, Ideal, class_group, form_representations,
)

__all__ = [
    "AlgValue", "HeckeChar", "CoeffTable", "build_chi", "r_chi",
    "theta_coeffs", "principal_generator",
]


@dataclass(frozen=True)
class AlgValue:
    """x + y*sqrt(D) with exact Fraction x, y, or a floating mpc."""

    D: int
    x: object = None
    y: object = None
    approx: object = None

    @classmethod
    def exact(cls, D, x, y=0):
        return cls(D, Fraction(x), Fraction(y), None)

    @classmethod
    def inexact(cls, D, z):
        return cls(D, None, None, mp.mpc(z))

    @property
    def is_exact(self):
        return self.approx is None

    def to_mpc(self, prec=None):
        if not self.is_exact:
            return self.approx
        with working_prec(prec):
            sq = mp.sqrt(-self.D)
            re = mp.mpf(self.x.numerator) / self.x.denominator
            im = (mp.mpf(self.y.numerator) / self.y.denominator) * sq
            return mp.mpc(re, im)

    def conjugate(self):
        if self.is_exact:
            return AlgValue(self.D, self.x, -self.y, None)
        return AlgValue.inexact(self.D, mp.conj(self.approx))

    def half_pair(self):
        """(p, q) with value (p + q sqrt(D))/2, p = q mod 2; raises off
        the ring of integers."""
        p, q = 2 * self.x, 2 * self.y
        if p.denominator != 1 or q.denominator != 1 or (int(p) - int(q)) % 2:
            raise ValueError(f"{self} is not an algebraic integer")
        return int(p), int(q)

    def as_int(self):
        if self.y != 0 or self.x.denominator != 1:
            raise ValueError(f"{self} is not a rational integer")
        return int(self.x)

    def _coerce(self, other):
        if isinstance(other, (int, Fraction)):
            return AlgValue.exact(self.D, other)
        if isinstance(other, AlgValue) and other.D == self.D:
            return other
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.is_exact and o.is_exact:
            return AlgValue(self.D, self.x + o.x, self.y + o.y, None)
        return AlgValue.inexact(self.D, self.to_mpc() + o.to_mpc())

    __radd__ = __add__

    def __neg__(self):
        if self.is_exact:
            return AlgValue(self.D, -self.x, -self.y, None)
        return AlgValue.inexact(self.D, -self.approx)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if self.is_exact and o.is_exact:
            return AlgValue(self.D,
                            self.x * o.x + self.y * o.y * self.D,
                            self.x * o.y + self.y * o.x, None)
        return AlgValue.inexact(self.D, self.to_mpc() * o.to_mpc())

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)):
            if self.is_exact:
                q = Fraction(other)
                return AlgValue(self.D, self.x / q, self.y / q, None)
            return AlgValue.inexact(self.D, self.approx / other)
        raise TypeError("division only by rational scalars")

    def __pow__(self, e):
        if not (isinstance(e, int) and e >= 0):
            raise ValueError("only nonnegative integer powers")
        acc = AlgValue.exact(self.D, 1)
        base = self
        while e:
            if e & 1:
                acc = acc * base
            base = base * base
            e >>= 1
        return acc

    def __abs__(self):
        return abs(self.to_mpc())

    def __eq__(self, other):
        o = self._coerce(other) if isinstance(other, (int, Fraction, AlgValue)) else None
        if o is None:
            return NotImplemented
        if self.is_exact and o.is_exact:
            return self.x == o.x and self.y == o.y
        return self.to_mpc() == o.to_mpc()


def principal_generator(J):
    """Exact (p, q) with (p + q sqrt(D))/2 generating the principal J."""
    c = (J.b * J.b - J.D) // (4 * J.a)
    reps = form_representations(J.a, J.b, c, 1)
    if not reps:
        raise ValueError(f"ideal {J} is not principal")
    p, q = reps[0]
    return J.g * (2 * p * J.a + q * J.b), J.g * q


def _half(D, p, q):
    """(p + q sqrt(D))/2 as an exact AlgValue."""
    return AlgValue(D, Fraction(p, 2), Fraction(q, 2), None)


def _pow_pair(a, b, e, D):
    """(a + b sqrt(D))^e as an integer pair, square and multiply."""
    ra, rb = 1, 0
    while e:
        if e & 1:
            ra, rb = ra * a + rb * b * D, ra * b + rb * a
        a, b = a * a + b * b * D, 2 * a * b
        e >>= 1
    return ra, rb


def _abelian_basis(G):
    """Greedy direct-product basis [(class, order), ...] for the group."""
    n = len(G)
    if n == 1:
        return []
    ident = G.identity
    elems = list(G)

    def order(x):
        o, acc = 1, x
        while acc != ident:
            acc, o = acc * x, o + 1
        return o

    def cyclic(x):
        out, acc = {ident}, x
        while acc != ident:
            out.add(acc)
            acc = acc * x
        return out

    gens, span = [], {ident}
    while len(span) < n:
        best = None
        for x in elems:
            if x in span or len(cyclic(x) & span) != 1:
                continue
            o = order(x)
            if best is None or o > best[1]:
                best = (x, o)
        if best is None:
            raise NotImplementedError("class group has no greedy direct basis")
        gens.append(best)
        span = {s * y for s in span for y in cyclic(best[0])}
    return gens


class HeckeChar:
    """Unramified character with chi((alpha)) = alpha^(2t)."""

    def __init__(self, disc, t, branch=0):
        if not isinstance(disc, Disc):
            disc = Disc(disc)
        if not (isinstance(t, int) and t >= 0):
            raise ValueError(f"infinity type needs an integer t >= 0, got {t}")
        if disc.D == -3 and (2 * t) % 3 != 0:
            raise ValueError(
                f"D = -3 has sixth roots of unity, so 3 | 2t is forced; got t = {t}")
        self.disc = disc
        self.t = t
        G = class_group(disc.D)
        self._gens = _abelian_basis(G)
        nbranch = math.prod(o for _, o in self._gens)
        if not (isinstance(branch, int) and 0 <= branch < nbranch):
            raise ValueError(f"branch must lie in [0, {nbranch}), got {branch}")
        self.branch = branch
        digits, rem = [], branch
        for _, o in self._gens:
            digits.append(rem % o)
            rem //= o
        self._branch_digits = tuple(digits)
        # exponent coordinates of every class in the basis
        self._exps = {}
        for es in itertools.product(*[range(o) for _, o in self._gens]):
            acc = G.identity
            for (g, _), e in zip(self._gens, es):
                for _ in range(e):
                    acc = acc * g
            if acc in self._exps:
                raise AssertionError("generator basis is not direct")
            self._exps[acc] = es
        # g^order = (alpha): keep alpha^(2t) exact per generator
        self._gen_data = []
        for (g, o), bd in zip(self._gens, self._branch_digits):
            J = g.ideal()
            px, qx = principal_generator(J ** o)
            self._gen_data.append((J, o, _half(disc.D, px, qx) ** (2 * t), bd))

    @property
    def h(self):
        return self.disc.h

    @property
    def nbranches(self):
        return math.prod(o for _, o in self._gens)

    def gen_value(self, i, prec=None):
        """chi on generator i: the branch-indexed o-th root of alpha^(2t)."""
        J, o, alpha2t, bd = self._gen_data[i]
        with working_prec(prec):
            z = alpha2t.to_mpc()
            arg = mp.arg(z) % (2 * mp.pi)
            root = mp.power(abs(z), mp.mpf(1) / o) * mp.exp(1j * arg / o)
            return root * mp.exp(2j * mp.pi * bd / o)

    def on_ideal(self, J, prec=None):
        """chi(J) as an AlgValue; exact whenever the class group allows."""
        if not isinstance(J, Ideal) or J.D != self.disc.D:
            raise ValueError(f"ideal {J} does not live in D = {self.disc.D}")
        es = self._exps[J.quad_class()] if self._gens else ()
        P = J
        for (Jg, _, _, _), e in zip(self._gen_data, es):
            for _ in range(e):
                P = P * Jg.conjugate()
        px, qx = principal_generator(P)
        val = _half(self.disc.D, px, qx) ** (2 * self.t)
        if not any(es):
            return val
        with working_prec(prec):
            z = val.to_mpc()
            for i, e in enumerate(es):
                if e:
                    Ng = self._gen_data[i][0].norm
                    z *= (self.gen_value(i) / mp.mpf(Ng) ** (2 * self.t)) ** e
            return AlgValue.inexact(self.disc.D, z)


def build_chi(D, t, branch=0):
    """One character of infinity type (2t, 0) per branch index."""
    return HeckeChar(D if isinstance(D, Disc) else Disc(D), t, branch)


def r_chi(chi, cls, n, prec=None):
    """Weighted representation number of n for the class, through the
    reduced representative ideal; exact when the class group is trivial."""
    if n < 1:
        raise ValueError(f"need n >= 1, got {n}")
    D = chi.disc.D
    J = cls.ideal()
    A, B = J.a, J.b
    C = (B * B - D) // (4 * A)
    # N(p + q tau) = n / A  <=>  A p^2 - B p q + C q^2 = n
    pts = form_representations(A, -B, C, n)
    if not pts:
        return AlgValue.exact(D, 0)
    tt = 2 * chi.t
    sx = sy = 0
    for p, q in pts:
        px, py = _pow_pair(2 * A * p - q * B, q, tt, D)
        sx += px
        sy += py
    total = AlgValue.exact(D, Fraction(sx, (2 * A) ** tt),
                           Fraction(sy, (2 * A) ** tt))
    return chi.on_ideal(J, prec=prec) * total / (2 * chi.disc.u)


class CoeffTable:
    """r values for one class, 1-indexed up to `upto`; the lattice sums
    stay exact integer pairs and one prefactor scales them all."""

    def __init__(self, chi, cls, upto, prec=None):
        if upto < 1:
            raise ValueError(f"need upto >= 1, got {upto}")
        self.chi, self.cls, self.upto = chi, cls, upto
        D = chi.disc.D
        J = cls.ideal()
        A, B = J.a, J.b
        C = (B * B - D) // (4 * A)
        tt = 2 * chi.t
        sx = [0] * (upto + 1)
        sy = [0] * (upto + 1)
        # scan half the lattice (q > 0, or q = 0 with p > 0); the other
        # half contributes the same even powers
        qmax = math.isqrt(4 * A * upto // -D)
        for q in range(qmax + 1):
            disc4 = 4 * A * upto - (-D) * q * q
            rad = math.isqrt(disc4)
            lo = -((rad - B * q) // (2 * A))
            hi = (B * q + rad) // (2 * A)
            if q == 0:
                lo = max(lo, 1)
            Bq, Cq2 = B * q, C * q * q
            for p in range(lo, hi + 1):
                nval = (A * p - Bq) * p + Cq2
                if nval < 1 or nval > upto:
                    continue
                px, py = _pow_pair(2 * A * p - Bq, q, tt, D)
                sx[nval] += px
                sy[nval] += py
        self._sx, self._sy = sx, sy
        # the two lattice halves give a factor 2 against the 1/(2u)
        self._prefactor = chi.on_ideal(J, prec=prec) / (
            chi.disc.u * (2 * A) ** tt)

    def value(self, n):
        if not (1 <= n <= self.upto):
            raise IndexError(f"n = {n} outside table range 1..{self.upto}")
        return self._prefactor * AlgValue.exact(self.chi.disc.D,
                                                self._sx[n], self._sy[n])

    def is_zero(self, n):
        """Exact vanishing test, no prefactor multiplication."""
        if not (1 <= n <= self.upto):
            raise IndexError(f"n = {n} outside table range 1..{self.upto}")
        return not (self._sx[n] or self._sy[n])

    def __getitem__(self, n):
        return self.value(n)

    def __len__(self):
        return self.upto


def theta_coeffs(chi, cls, upto, prec=None):
    """Bulk table of r values for the class, n = 1 .. upto."""
    return CoeffTable(chi, cls, upto, prec=prec)
