"""Exact arithmetic in imaginary quadratic fields of odd discriminant.

Class groups are computed by reduced-form enumeration, but composition,
principality and all norm counts are derived from exact ideal products
in Hermite normal form, so the group law and every lattice count share
one code path.  A field element (x + y*sqrt(D))/2 is kept as the integer
pair (x, y) with x == y mod 2 throughout; nothing here is floating point
except the optional upper-half-plane embedding of a Heegner parameter.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import gmpy2
from mpmath import mp
from sympy import factorint
from sympy.ntheory import sqrt_mod

from .core import working_prec

__all__ = [
    "kronecker", "Disc", "QuadClass", "Ideal", "ClassGroup",
    "class_group", "reduce_form", "HeegnerPoint", "heegner_point",
    "genus_character", "ideals_of_norm", "form_representations",
]


def kronecker(D, n):
    """Kronecker symbol (D/n), completely multiplicative in n."""
    return int(gmpy2.kronecker(D, n))


def _is_fundamental_odd(D):
    if D >= 0 or D % 2 == 0 or D % 4 != 1:
        return False
    return all(e == 1 for e in factorint(-D).values())


@dataclass(frozen=True)
class Disc:
    """Negative odd fundamental discriminant with unit data."""

    D: int

    def __post_init__(self):
        if not isinstance(self.D, int):
            raise TypeError(f"discriminant must be an integer, got {self.D!r}")
        if not _is_fundamental_odd(self.D):
            raise ValueError(
                f"D = {self.D} is not a negative odd fundamental discriminant")

    @property
    def u(self):
        return 3 if self.D == -3 else 1

    @property
    def w(self):
        return 2 * self.u

    @property
    def h(self):
        return len(self.class_group())

    def class_group(self):
        return class_group(self.D)


def reduce_form(D, a, b, c):
    """Reduce a positive definite form (a, b, c) of discriminant D."""
    if a <= 0 or b * b - 4 * a * c != D:
        raise ValueError(f"not a positive definite form of disc {D}: {(a, b, c)}")
    while True:
        bp = (b + a) % (2 * a) - a
        if bp == -a:
            bp = a
        b = bp
        c = (b * b - D) // (4 * a)
        if a > c or (a == c and b < 0):
            a, b, c = c, -b, a
            continue
        return a, b, c


@dataclass(frozen=True)
class QuadClass:
    """Reduced form (a, b, c) representing an ideal class."""

    D: int
    a: int
    b: int
    c: int

    def __post_init__(self):
        a, b, c = self.a, self.b, self.c
        if b * b - 4 * a * c != self.D:
            raise ValueError(f"discriminant mismatch: {(a, b, c)} vs {self.D}")
        if reduce_form(self.D, a, b, c) != (a, b, c):
            raise ValueError(f"form {(a, b, c)} is not reduced")

    @classmethod
    def from_form(cls, D, a, b, c):
        return cls(D, *reduce_form(D, a, b, c))

    @property
    def form(self):
        return (self.a, self.b, self.c)

    def ideal(self):
        """A primitive ideal in this class (norm = leading coefficient)."""
        return Ideal(self.D, 1, self.a, -self.b)

    def __mul__(self, other):
        if not isinstance(other, QuadClass) or other.D != self.D:
            return NotImplemented
        return (self.ideal() * other.ideal()).quad_class()

    def inverse(self):
        return QuadClass.from_form(self.D, self.a, -self.b, self.c)

    def is_principal(self):
        return self.a == 1

    def order(self):
        n, acc = 1, self
        while not acc.is_principal():
            acc, n = acc * self, n + 1
        return n


@dataclass(frozen=True)
class Ideal:
    """g * <a, (b + sqrt(D))/2> in normal form: b odd in (-a, a],
    b^2 == D mod 4a.  Norm g^2 a."""

    D: int
    g: int
    a: int
    b: int

    def __post_init__(self):
        if self.g < 1 or self.a < 1:
            raise ValueError(f"content and norm part must be positive: {self}")
        b = (self.b + self.a) % (2 * self.a) - self.a
        if b == -self.a:
            b = self.a
        object.__setattr__(self, "b", b)
        if (b * b - self.D) % (4 * self.a) != 0:
            raise ValueError(f"<{self.a}, ({b}+sqrt({self.D}))/2> is not an ideal")

    @classmethod
    def unit(cls, D):
        return cls(D, 1, 1, 1)

    @property
    def norm(self):
        return self.g * self.g * self.a

    def conjugate(self):
        return Ideal(self.D, self.g, self.a, -self.b)

    def quad_class(self):
        return QuadClass.from_form(
            self.D, self.a, -self.b, (self.b * self.b - self.D) // (4 * self.a))

    def __mul__(self, other):
        if not isinstance(other, Ideal) or other.D != self.D:
            return NotImplemented
        D = self.D
        a1, b1, a2, b2 = self.a, self.b, other.a, other.b
        s = (b1 + b2) // 2
        # second HNF generator (x2 + d sqrt(D))/2 via two extended gcds
        g12, p, q = _egcd(a1, a2)
        d, u, v = _egcd(g12, s)
        if d < 0:
            d, u, v = -d, -u, -v
        A = a1 * a2 // (d * d)
        x2 = u * p * a1 * b2 + u * q * a2 * b1 + v * (b1 * b2 + D) // 2
        if x2 % d != 0:
            raise AssertionError("ideal product lost integrality")
        return Ideal(D, self.g * other.g * d, A, x2 // d)

    def __pow__(self, e):
        if e < 0:
            raise ValueError("only nonnegative ideal powers are supported")
        acc = Ideal.unit(self.D)
        for _ in range(e):
            acc = acc * self
        return acc


def _egcd(x, y):
    """(g, s, t) with s*x + t*y = g = gcd(x, y)."""
    s0, s1, t0, t1 = 1, 0, 0, 1
    while y:
        q, x, y = x // y, y, x % y
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    return x, s0, t0


class ClassGroup:
    """All reduced forms of a discriminant with the composition table."""

    def __init__(self, D):
        Disc(D)
        self.D = D
        forms = []
        amax = math.isqrt(-D // 3)
        for a in range(1, amax + 1):
            for b in range(-a + 1, a + 1):
                if (b - D) % 2 != 0:
                    continue
                if (b * b - D) % (4 * a) != 0:
                    continue
                c = (b * b - D) // (4 * a)
                if c < a:
                    continue
                if (abs(b) == a or a == c) and b < 0:
                    continue
                forms.append(QuadClass(D, a, b, c))
        forms.sort(key=lambda f: (f.a != 1, f.a, abs(f.b), -f.b))
        self.classes = tuple(forms)
        self._index = {f.form: i for i, f in enumerate(forms)}
        self.table = tuple(
            tuple(self._index[(x * y).form] for y in forms) for x in forms)

    def __len__(self):
        return len(self.classes)

    def __iter__(self):
        return iter(self.classes)

    def __getitem__(self, i):
        return self.classes[i]

    @property
    def identity(self):
        return self.classes[0]

    def index(self, cls):
        return self._index[cls.form]


@lru_cache(maxsize=None)
def class_group(D):
    return ClassGroup(D)


@dataclass(frozen=True)
class HeegnerPoint:
    """Parameters (A, B, C) of a level-N CM point with orientation beta;
    tau = (-B + sqrt(D))/(2A) and the attached ideal is <A, (B+sqrt(D))/2>."""

    D: int
    N: int
    beta: int
    A: int
    B: int
    C: int

    def __post_init__(self):
        if self.A <= 0 or self.A % self.N != 0:
            raise ValueError(f"need N | A > 0, got A={self.A}, N={self.N}")
        if (self.B - self.beta) % (2 * self.N) != 0:
            raise ValueError(f"B = {self.B} is not {self.beta} mod {2 * self.N}")
        if self.B * self.B - 4 * self.A * self.C != self.D:
            raise ValueError("discriminant mismatch in Heegner parameters")

    @property
    def form(self):
        return (self.A, self.B, self.C)

    def ideal(self):
        return Ideal(self.D, 1, self.A, self.B)

    def quad_class(self):
        return self.ideal().quad_class()

    def tau(self, prec=None):
        with working_prec(prec):
            return mp.mpc(-self.B, mp.sqrt(-self.D)) / (2 * self.A)


def heegner_point(D, N, beta, cls):
    """Smallest-A representative of the class with the given orientation."""
    Disc(D)
    if N < 3:
        raise ValueError(f"level must be at least 3, got {N}")
    beta = beta % (2 * N)
    if (beta * beta - D) % (4 * N) != 0:
        raise ValueError(
            f"beta^2 = {beta * beta} is not {D} mod {4 * N}: no such point")
    if not isinstance(cls, QuadClass) or cls.D != D:
        raise ValueError(f"class {cls} does not belong to discriminant {D}")
    A = N
    while A <= N * max(-D, 40):
        for j in range(A // N):
            B = beta + 2 * N * j
            if (B * B - D) % (4 * A) != 0:
                continue
            if Ideal(D, 1, A, B).quad_class() == cls:
                return HeegnerPoint(D, N, beta, A, B, (B * B - D) // (4 * A))
        A += N
    raise RuntimeError(f"no representative found below A = {A} (unexpected)")


def genus_character(D1, D2, cls):
    """Value on cls of the character attached to the splitting D = D1*D2."""
    D = cls.D
    if D1 * D2 != D:
        raise ValueError(f"{D1} * {D2} != {D}: invalid splitting")
    if math.gcd(D1, D2) != 1:
        raise ValueError(f"factors {D1}, {D2} are not coprime")
    for d in (D1, D2):
        if d != 1 and not (d % 4 == 1 and all(e == 1 for e in factorint(abs(d)).values())):
            raise ValueError(f"{d} is not 1 or an odd fundamental discriminant")
    if D1 == 1:
        return 1
    n = _coprime_represented(cls, D)
    return kronecker(D1, n)


def _coprime_represented(cls, D):
    a, b, c = cls.form
    for q in range(0, 3):
        for p in range(1, abs(D) + 2):
            n = a * p * p + b * p * q + c * q * q
            if math.gcd(n, D) == 1:
                return n
    raise AssertionError("no represented value coprime to D (unexpected)")


def form_representations(a, b, c, n):
    """All integer pairs (p, q) with a p^2 + b p q + c q^2 = n."""
    if n < 0:
        return []
    D = b * b - 4 * a * c
    out = []
    qmax = math.isqrt(4 * a * n // -D)
    for q in range(-qmax, qmax + 1):
        # discriminant of the quadratic in p
        disc = 4 * a * n - (-D) * q * q
        if disc < 0:
            continue
        r = math.isqrt(disc)
        if r * r != disc:
            continue
        for sgn in ((r, -r) if r else (r,)):
            num = -b * q + sgn
            if num % (2 * a) == 0:
                out.append((num // (2 * a), q))
    return sorted(out)


def ideals_of_norm(D, n):
    """All integral ideals of norm n, each with its class."""
    Disc(D)
    if n < 1:
        raise ValueError(f"norm must be positive, got {n}")
    pools = [[Ideal.unit(D)]]
    for p, e in sorted(factorint(n).items()):
        s = kronecker(D, p)
        if s == -1:
            if e % 2:
                return []
            pools.append([Ideal(D, p ** (e // 2), 1, 1)])
        elif s == 0:
            pram = Ideal(D, 1, p, p)
            pools.append([pram ** e])
        else:
            r = sqrt_mod(D, p)
            bsp = r if r % 2 == 1 else r + p
            pr = Ideal(D, 1, p, bsp)
            pc = pr.conjugate()
            pools.append([pr ** i * pc ** (e - i) for i in range(e + 1)])
    out = [Ideal.unit(D)]
    for pool in pools:
        out = [x * y for x in out for y in pool]
    out.sort(key=lambda J: (J.g, J.a, J.b))
    return [(J, J.quad_class()) for J in out]
