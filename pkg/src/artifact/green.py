"""Automorphic Green's kernel sums at CM points.

The kernel g_{k,t} is summed over determinant-m integral matrices with
level-divisible lower-left entry, grouped by the integer shell n that
indexes the distance level sets at CM points.  The diagonal (n = 0) is
regularized through the Dedekind eta factor, and the lattice side is
compared against the Q-series side as a numerical identity check."""

import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp

from .arithsums import make_context, sigma_A
from .core import Evaluation, Params, resolve_prec, working_prec
from .dirichlet import Lprime_over_L_1
from .fourier import TailBudgetError, TAIL_DELTA
from .heckechar import AlgValue, CoeffTable, r_chi
from .quadfield import HeegnerPoint, class_group, heegner_point, ideals_of_norm
from .special import Q_kt_closed, Q_kt_series, dedekind_eta4, digamma_int

__all__ = [
    "LatticeMatrix", "GreenConfig", "g_kt", "enumerate_RNm",
    "G_m_weighted", "rho_diagonal", "rho_class_sum", "rho_class_sum_closed",
    "gamma_m", "identity_residual",
]


@dataclass(frozen=True)
class LatticeMatrix:
    """Integral matrix (a b; c d) mod +-1 with positive determinant and
    level | c; the sign is normalized at construction."""

    a: int
    b: int
    c: int
    d: int
    level: int = 1

    def __post_init__(self):
        if self.a * self.d - self.b * self.c < 1:
            raise ValueError(f"matrix {self.entries} must have det >= 1")
        if self.c % self.level:
            raise ValueError(f"need {self.level} | c, got c = {self.c}")
        for v in (self.a, self.b, self.c, self.d):
            if v > 0:
                break
            if v < 0:
                for name, w in zip("abcd", self.entries):
                    object.__setattr__(self, name, -w)
                break

    @property
    def entries(self):
        return (self.a, self.b, self.c, self.d)

    @property
    def det(self):
        return self.a * self.d - self.b * self.c

    def apply(self, z):
        return (self.a * z + self.b) / (self.c * z + self.d)


@dataclass(frozen=True)
class GreenConfig:
    """Kernel index, shell truncation, and diagonal policy."""

    params: Params
    n_max: int
    prec: object = None
    diagonal: str = "exclude"
    beta: int = None
    tail_target: object = None

    def __post_init__(self):
        if not (isinstance(self.n_max, int) and self.n_max >= 1):
            raise ValueError(f"need n_max >= 1, got {self.n_max}")
        if self.diagonal not in ("exclude", "regularize"):
            raise ValueError(
                f"diagonal policy must be exclude|regularize, got {self.diagonal!r}")
        p = self.params
        if self.beta is None:
            b = next(b for b in range(1, 2 * p.N + 1)
                     if (b * b - p.D) % (4 * p.N) == 0)
            object.__setattr__(self, "beta", b)
        elif (self.beta ** 2 - p.D) % (4 * p.N) != 0:
            raise ValueError(f"orientation {self.beta} invalid at level {p.N}")


def g_kt(k, t, z, zp, prec=None):
    """g(z, z') = -Q_{k,t}(1 + |z - z'|^2 / (2 y y'))."""
    with working_prec(prec):
        z, zp = mp.mpc(z), mp.mpc(zp)
        if z.imag <= 0 or zp.imag <= 0:
            raise ValueError("both points must lie in the upper half-plane")
        if z == zp:
            raise ValueError("kernel is singular at coincident points")
        x = 1 + abs(z - zp) ** 2 / (2 * z.imag * zp.imag)
        return -Q_kt_closed(k, t, x)


def _egcd(a, b):
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        old_r, old_s, old_t = -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def _isqrt_ceil(fr):
    """Smallest integer >= sqrt of a nonnegative Fraction."""
    if fr < 0:
        raise ValueError("negative radicand")
    num, den = fr.numerator, fr.denominator
    lo = math.isqrt(num // den)
    while lo * lo * den < num:
        lo += 1
    return lo


def enumerate_RNm(m, N, p1, p2, n_max):
    """All det-m level-N matrices mod +-1 out to shell n_max at the CM
    pair (p1, p2), yielded as (n, matrices) with ascending n; the
    diagonal shell n = 0 comes first when present."""
    if not (isinstance(m, int) and m >= 1):
        raise ValueError(f"need m >= 1, got {m}")
    if math.gcd(m, N) != 1:
        raise ValueError(f"m = {m} is not coprime to N = {N}")
    if not (isinstance(n_max, int) and n_max >= 1):
        raise ValueError(f"need n_max >= 1, got {n_max}")
    for p in (p1, p2):
        if not isinstance(p, HeegnerPoint) or p.N != N:
            raise ValueError(f"{p} is not a level-{N} CM point")
    if p1.D != p2.D:
        raise ValueError("CM points must share a discriminant")
    D = p1.D
    aD = -D
    A1, B1 = p1.A, p1.B
    A2, B2 = p2.A, p2.B

    # |beta|^2 and |alpha|^2 caps give a box for (c, d), then (a, b)
    # runs along a 1-dimensional lattice fixed by the determinant
    Rb2 = Fraction(n_max * N, A1 * A2)
    Ra2 = Fraction(m * aD + n_max * N, A1 * A2)
    Rcd2 = Fraction(2 * A1 * A1, aD) * (Ra2 + Rb2)
    Rab2 = Fraction(B1 * B1, 2 * A1 * A1) * Rcd2 + (Ra2 + Rb2)

    shells = {}
    cmax = _isqrt_ceil(Rcd2 * Fraction(4 * A2 * A2, aD))
    for c in range(0, cmax + 1, N):
        rem = Rcd2 - Fraction(c * c * aD, 4 * A2 * A2)
        if rem < 0:
            continue
        half = _isqrt_ceil(rem) + 1
        center = Fraction(c * B2, 2 * A2)
        dlo = math.ceil(center) - half
        dhi = math.floor(center) + half
        if c == 0:
            dlo = max(dlo, 1)
        for d in range(dlo, dhi + 1):
            if c == 0 and d == 0:
                continue
            g = math.gcd(c, d)
            if m % g:
                continue
            _, u_, v_ = _egcd(d, -c)
            a0, b0 = u_ * (m // g), v_ * (m // g)
            # |(a0 + s c/g) tau2 + (b0 + s d/g)| <= Rab: rational quadratic
            x0 = Fraction(-a0 * B2, 2 * A2) + b0
            y0 = Fraction(a0, 2 * A2)
            xw = Fraction(Fraction(-c * B2, 2 * A2) + d, g)
            yw = Fraction(c, 2 * A2 * g)
            qa = xw * xw + yw * yw * aD
            qb = x0 * xw + y0 * yw * aD
            qc = x0 * x0 + y0 * y0 * aD - Rab2
            disc = qb * qb - qa * qc
            if disc < 0:
                continue
            root = _isqrt_ceil(disc) + 1
            slo = math.ceil((-qb - root) / qa) - 1
            shi = math.floor((-qb + root) / qa) + 1
            for s in range(slo, shi + 1):
                a = a0 + (c // g) * s
                b = b0 + (d // g) * s
                P = c * (B1 * B2 + D) - 2 * A2 * d * B1 + 2 * A1 * a * B2 \
                    - 4 * A1 * A2 * b
                Q = -c * (B1 + B2) + 2 * A2 * d - 2 * A1 * a
                num = P * P - D * Q * Q
                den = 16 * A1 * A2 * N
                if num % den:
                    raise ArithmeticError(
                        "non-integral shell: points are not compatible CM data")
                n = num // den
                if n > n_max:
                    continue
                Pa = c * (B1 * B2 - D) - 2 * A2 * d * B1 + 2 * A1 * a * B2 \
                    - 4 * A1 * A2 * b
                Qa = c * (B2 - B1) - 2 * A2 * d - 2 * A1 * a
                if (Pa * Pa - D * Qa * Qa) != 16 * A1 * A2 * (m * aD + n * N):
                    raise AssertionError("norm bookkeeping violated")
                shells.setdefault(n, []).append(LatticeMatrix(a, b, c, d, N))
    for n in sorted(shells):
        yield n, tuple(sorted(shells[n], key=lambda mt: mt.entries))


def _alpha_exact(mt, p1, p2):
    """alpha(gamma, tau1, tau2) as an exact field element."""
    D = p1.D
    A1, B1, A2, B2 = p1.A, p1.B, p2.A, p2.B
    a, b, c, d = mt.entries
    Pa = c * (B1 * B2 - D) - 2 * A2 * d * B1 + 2 * A1 * a * B2 \
        - 4 * A1 * A2 * b
    Qa = c * (B2 - B1) - 2 * A2 * d - 2 * A1 * a
    den = 4 * A1 * A2
    return AlgValue.exact(D, Fraction(Pa, den), Fraction(Qa, den))


def _q_value(k, t, x):
    if x > 4:
        return Q_kt_series(k, t, x)
    return Q_kt_closed(k, t, x)


def G_m_weighted(cfg, m, p1, p2, prec=None):
    """Off-diagonal kernel sum Sigma g(tau1, gamma tau2) alpha^{2t} out
    to shell n_max, with the same tail model as the Q-series."""
    p = cfg.params
    k, t = p.k, p.t
    with working_prec(prec if prec is not None else cfg.prec) as pr:
        tau1 = p1.tau()
        tau2 = p2.tau()
        y1 = tau1.imag
        shell_sums = []
        for n, mats in enumerate_RNm(m, p.N, p1, p2, cfg.n_max):
            if n == 0:
                continue
            terms = []
            for mt in mats:
                w = mt.apply(tau2)
                x = 1 + abs(tau1 - w) ** 2 / (2 * y1 * w.imag)
                gv = -_q_value(k, t, x)
                terms.append(gv * (_alpha_exact(mt, p1, p2) ** (2 * t)).to_mpc())
            shell_sums.append((n, mp.fsum(terms)))
        total = mp.fsum(v for _, v in shell_sums)
        exps = k - t - mp.mpf(1) / 2 - TAIL_DELTA
        cap = mp.mpf(0)
        for n, v in shell_sums[:100]:
            cap = max(cap, abs(v) * mp.mpf(n) ** exps)
        tail = 2 * cap * mp.mpf(cfg.n_max) ** (-exps)
        if cfg.tail_target is not None and tail > cfg.tail_target:
            raise TailBudgetError(
                "tail estimate exceeds the configured budget",
                m=m, n0=cfg.n_max, tail=tail, target=cfg.tail_target)
        return Evaluation(value=total, prec=pr, truncation=cfg.n_max,
                          tail=tail, meta={"m": m, "k": k, "t": t,
                                           "N": p.N, "D": p.D})


def rho_diagonal(k, t, z, prec=None):
    """Regularized diagonal value: the kernel's logarithmic singularity
    matched against log|2 pi i eta^4(z) (w - z)|_v with |x|_v = |x|^2."""
    with working_prec(prec):
        z = mp.mpc(z)
        if z.imag <= 0:
            raise ValueError("point must lie in the upper half-plane")
        return (digamma_int(k + t) + digamma_int(k - t) + 2 * mp.euler
                - mp.log(4 * z.imag ** 2)
                - 2 * mp.log(2 * mp.pi * abs(dedekind_eta4(z))))


def rho_class_sum(k, t, D, prec=None):
    """Sum of rho over the CM points of the class group, via reduced
    forms (rho is modular-invariant)."""
    with working_prec(prec):
        out = mp.mpf(0)
        for cls in class_group(D):
            J = cls.ideal()
            tau = (-J.b + mp.sqrt(D)) / (2 * J.a)
            out += rho_diagonal(k, t, tau)
        return out


def rho_class_sum_closed(k, t, D, prec=None):
    """Closed form of the class sum through the Dirichlet L-derivative."""
    with working_prec(prec):
        h = len(class_group(D))
        return h * (digamma_int(k + t) + digamma_int(k - t)
                    - 2 * mp.log(2 * mp.pi) + 2 * Lprime_over_L_1(D)
                    + mp.log(-D))


def _diag_count(D, m, cls):
    return sum(1 for _, jc in ideals_of_norm(D, m) if jc == cls)


def gamma_m(cfg, chi, m, cls, prec=None):
    """Class-pair sum of weighted kernel sums, with the regularized
    diagonal added per pair when the policy asks for it."""
    p = cfg.params
    if chi.disc.D != p.D or chi.t != p.t:
        raise ValueError("character does not match the configuration")
    if cls.D != p.D:
        raise ValueError(f"class {cls} does not belong to D = {p.D}")
    with working_prec(prec if prec is not None else cfg.prec) as pr:
        G = class_group(p.D)
        diag = cfg.diagonal == "regularize" and _diag_count(p.D, m, cls) > 0
        rm = r_chi(chi, cls, m, prec=pr) if diag else None
        u = chi.disc.u
        total = mp.mpc(0)
        tail = mp.mpf(0)
        for c1 in G:
            c2 = c1 * cls
            hp1 = heegner_point(p.D, p.N, cfg.beta, c1)
            hp2 = heegner_point(p.D, p.N, cfg.beta, c2)
            weight = chi.on_ideal(hp1.ideal().conjugate() * hp2.ideal(),
                                  prec=pr)
            part = G_m_weighted(cfg, m, hp1, hp2, prec=pr)
            total += weight.to_mpc() * part.value
            tail += abs(weight.to_mpc()) * part.tail
            if diag:
                rho = rho_diagonal(p.k, p.t, hp1.tau())
                total += u * (Fraction(p.D) ** p.t * rm).to_mpc() * rho
        return Evaluation(value=total, prec=pr, truncation=cfg.n_max,
                          tail=tail, meta={"m": m, "diagonal": cfg.diagonal,
                                           "cls": str(cls)})


def identity_residual(cfg, chi, m, cls, prec=None):
    """Relative gap between the lattice-sum side and the Q-series side
    of the archimedean height identity, at matched shell truncation."""
    p = cfg.params
    k, t, N, D = p.k, p.t, p.N, p.D
    aD = -D
    with working_prec(prec if prec is not None else cfg.prec) as pr:
        pref = Fraction(4 * m * aD) ** (k - t - 1) / (
            Fraction(D) ** t * math.comb(2 * k - 2, k - t - 1))
        preff = mp.mpf(pref.numerator) / pref.denominator
        lhs = preff * gamma_m(cfg, chi, m, cls, prec=pr).value

        disc = chi.disc
        u, h = disc.u, disc.h
        ctx = make_context(D, N, cfg.beta, cls.inverse())
        table = CoeffTable(chi, cls, m * aD + cfg.n_max * N, prec=pr)
        terms = []
        for n in range(1, cfg.n_max + 1):
            s = sigma_A(ctx, n)
            if s == 0 or table.is_zero(m * aD + n * N):
                continue
            x = mp.mpf(m * aD + 2 * n * N) / (m * aD)
            terms.append(s * table[m * aD + n * N].to_mpc()
                         * _q_value(k, t, x))
        rhs = -preff * u * u * mp.fsum(terms)
        if cfg.diagonal == "regularize" and _diag_count(D, m, cls) > 0:
            rm = r_chi(chi, cls, m, prec=pr)
            const = (digamma_int(k + t) + digamma_int(k - t)
                     - 2 * mp.log(2 * mp.pi) + 2 * Lprime_over_L_1(D)
                     + mp.log(aD))
            rhs += preff * h * u * (Fraction(D) ** t * rm).to_mpc() * const
        scale = max(abs(lhs), abs(rhs))
        if scale == 0:
            return mp.mpf(0)
        return abs(lhs - rhs) / scale
