"""Holomorphic-projection Fourier coefficients, split into the finite
and archimedean parts, plus integer relation vectors and the classical
cusp-form dimension count.

The finite part is assembled symbolically (prime-log ledger with exact
algebraic coefficients) and floated once; the archimedean part truncates
its shell sum at n0 and reports a certified tail estimate."""

import math
from dataclasses import dataclass
from fractions import Fraction

from mpmath import mp
from sympy import divisors, factorint

from .arithsums import make_context, sigma_prime_A, sigma_table
from .core import Evaluation, Params, resolve_prec, working_prec
from .dirichlet import Lprime_over_L_1
from .heckechar import AlgValue, HeckeChar, theta_coeffs
from .quadfield import QuadClass, kronecker
from .special import P_kt, Q_kt_closed, Q_kt_series, digamma_int

__all__ = [
    "FourierParams", "TailBudgetError", "NoRelationError", "a_fin",
    "a_inf", "a_m", "find_relation", "dim_cusp_forms",
]

TAIL_DELTA = 0.1


class TailBudgetError(ArithmeticError):
    """The configured shell cutoff cannot certify the requested tail."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class NoRelationError(ArithmeticError):
    """The admissible support carries no nontrivial integer relation."""


def _default_beta(D, N):
    for b in range(1, 2 * N + 1):
        if (b * b - D) % (4 * N) == 0:
            return b
    raise ValueError(f"no orientation with beta^2 = D mod 4N for D={D}, N={N}")


@dataclass(frozen=True)
class FourierParams:
    """Index, character, class, and truncation policy for one expansion."""

    params: Params
    chi: HeckeChar
    cls: QuadClass
    n0: int = 10_000
    tail_target: object = None
    beta: int = None

    def __post_init__(self):
        p = self.params
        if not 0 < p.t <= p.k - 1:
            raise ValueError(f"need 0 < t <= k-1, got (k, t) = ({p.k}, {p.t})")
        if self.chi.disc.D != p.D:
            raise ValueError("character and parameters disagree on D")
        if self.chi.t != p.t:
            raise ValueError(
                f"character type {self.chi.t} does not match t = {p.t}")
        if not isinstance(self.cls, QuadClass) or self.cls.D != p.D:
            raise ValueError(f"class {self.cls} does not belong to D = {p.D}")
        for q in factorint(p.N):
            if kronecker(p.D, q) != 1:
                raise ValueError(
                    f"prime {q} | N does not split in K (Heegner hypothesis)")
        if not (isinstance(self.n0, int) and self.n0 >= 1):
            raise ValueError(f"need n0 >= 1, got {self.n0}")
        if self.beta is None:
            object.__setattr__(self, "beta", _default_beta(p.D, p.N))
        elif (self.beta ** 2 - p.D) % (4 * p.N) != 0:
            raise ValueError(f"orientation {self.beta} invalid at level {p.N}")
        object.__setattr__(self, "_cache", {})

    @property
    def sigma_ctx(self):
        if "ctx" not in self._cache:
            self._cache["ctx"] = make_context(
                self.params.D, self.params.N, self.beta, self.cls)
        return self._cache["ctx"]

    def rbar_table(self, upto, prec=None):
        """Coefficients of the conjugate-class theta series, grown in
        power-of-two jumps so repeated calls reuse one lattice scan; the
        cache is keyed by precision since the prefactor may be floating."""
        pr = resolve_prec(prec)
        have = self._cache.get(("rbar", pr))
        if have is None or have.upto < upto:
            size = max(upto, 2 * have.upto if have else 0, 512)
            have = theta_coeffs(self.chi, self.cls.inverse(), size, prec=pr)
            self._cache[("rbar", pr)] = have
        return have

    def sigma_array(self, upto):
        arr = self._cache.get("sigma")
        if arr is None or len(arr) <= upto:
            size = max(upto, 2 * (len(arr) - 1) if arr is not None else 0, 512)
            arr = sigma_table(self.sigma_ctx, size)
            self._cache["sigma"] = arr
        return arr


def _validate_m(fp, m):
    if not (isinstance(m, int) and m >= 1):
        raise ValueError(f"need m >= 1, got {m}")
    if math.gcd(m, fp.params.N) != 1:
        raise ValueError(f"m = {m} is not coprime to N = {fp.params.N}")


def _float_ledger(acc, D, prec=None):
    """Evaluate {prime: AlgValue} -> sum coeff * log(p), floated once."""
    with working_prec(prec):
        real = all(v.is_exact and v.y == 0 for v in acc.values())
        if real:
            return mp.fsum(
                (mp.mpf(v.x.numerator) / v.x.denominator) * mp.log(p)
                for p, v in sorted(acc.items()))
        return mp.fsum(v.to_mpc() * mp.log(p) for p, v in sorted(acc.items()))


def _fin_acc(fp, m, pr):
    p = fp.params
    k, t, N, D = p.k, p.t, p.N, p.D
    aD = -D
    disc = fp.chi.disc
    rbar = fp.rbar_table(max(m, m * aD - N), prec=pr)
    pref = Fraction(disc.h, disc.u) * Fraction(D) ** t
    acc = {}

    def add(prime, val):
        acc[prime] = acc.get(prime, AlgValue.exact(D, 0)) + val

    head = rbar[m] * pref
    for q, e in factorint(N).items():
        add(q, e * head)
    for q, e in factorint(m).items():
        add(q, -e * head)
    for n in range(1, m * aD // N + 1):
        led = sigma_prime_A(fp.sigma_ctx, n)
        if led.is_zero:
            continue
        j = m * aD - n * N
        if j == 0 or rbar.is_zero(j):
            continue
        Pv = P_kt(k, t, Fraction(m * aD - 2 * n * N, m * aD))
        w = rbar[j] * Pv
        for q, c in led.terms:
            add(q, -c * w)
    return acc


def a_fin(fp, m, prec=None):
    """Finite part: the log(N/m) head minus the P-weighted divisor sum,
    assembled exactly and floated once."""
    _validate_m(fp, m)
    p = fp.params
    with working_prec(prec) as pr:
        acc = _fin_acc(fp, m, pr)
        return mp.mpf(m) ** (p.k - p.t - 1) * _float_ledger(acc, p.D)


def a_fin_ledger(fp, m, prec=None):
    """Finite part kept exact: the integer scale m^{k-t-1} and the
    {prime: AlgValue} coefficients of log p that it multiplies."""
    _validate_m(fp, m)
    p = fp.params
    with working_prec(prec) as pr:
        acc = _fin_acc(fp, m, pr)
    return m ** (p.k - p.t - 1), acc


def _q_value(k, t, x):
    # closed form near the logarithmic edge, series in the bulk
    if x > 4:
        return Q_kt_series(k, t, x)
    return Q_kt_closed(k, t, x)


def a_inf(fp, m, prec=None):
    """Archimedean part: digamma/log/L'-head minus the Q-weighted shell
    sum truncated at n0, with a certified tail estimate."""
    _validate_m(fp, m)
    p = fp.params
    k, t, N, D = p.k, p.t, p.N, p.D
    aD = -D
    disc = fp.chi.disc
    with working_prec(prec) as pr:
        rbar = fp.rbar_table(m * aD + fp.n0 * N, prec=pr)
        sig = fp.sigma_array(fp.n0)
        pref = Fraction(disc.h, disc.u) * Fraction(D) ** t
        rm = rbar[m]
        headc = (digamma_int(k + t) + digamma_int(k - t)
                 + mp.log(mp.mpf(aD) / (4 * mp.pi ** 2))
                 + 2 * Lprime_over_L_1(D))
        head = rm.to_mpc() * (mp.mpf(pref.numerator) / pref.denominator) * headc
        if rm.is_exact and rm.y == 0:
            head = head.real

        exps = k - t - mp.mpf(1) / 2 - TAIL_DELTA
        cap = mp.mpf(0)
        terms = []
        total = mp.mpf(0)
        for n in range(1, fp.n0 + 1):
            s = int(sig[n])
            if s == 0 or rbar.is_zero(m * aD + n * N):
                if n <= 100:
                    terms.append(mp.mpf(0))
                continue
            rv = rbar[m * aD + n * N]
            x = 1 + Fraction(2 * n * N, m * aD)
            qv = _q_value(k, t, mp.mpf(x.numerator) / x.denominator)
            if rv.is_exact and rv.y == 0:
                rf = mp.mpf(rv.x.numerator) / rv.x.denominator
            else:
                rf = rv.to_mpc()
            term = s * rf * qv
            total += term
            if n <= 100:
                terms.append(abs(term))
        for n, a in enumerate(terms, start=1):
            cap = max(cap, a * mp.mpf(n) ** exps)
        C = 2 * cap
        scale = mp.mpf(m) ** (k - t - 1)
        tail = scale * C * mp.mpf(fp.n0) ** (-exps)
        value = scale * (head - total)
        if fp.tail_target is not None and tail > fp.tail_target:
            raise TailBudgetError(
                "tail estimate exceeds the configured budget",
                m=m, n0=fp.n0, tail=tail, target=fp.tail_target)
        return Evaluation(value=value, prec=pr, truncation=fp.n0, tail=tail,
                          meta={"m": m, "k": k, "t": t, "N": N, "D": D,
                                "delta": TAIL_DELTA})


def a_m(fp, m, prec=None):
    """Full coefficient: finite plus archimedean, tail carried through."""
    inf = a_inf(fp, m, prec=prec)
    fin = a_fin(fp, m, prec=prec)
    return Evaluation(value=fin + inf.value, prec=inf.prec,
                      truncation=inf.truncation, tail=inf.tail,
                      meta=inf.meta)


def find_relation(coeff_matrix, support, forbidden=frozenset()):
    """Primitive integer vector lambda over `support` annihilating every
    row, with forced zeros on `forbidden`; exact rational elimination."""
    support = list(support)
    idx = {mm: i for i, mm in enumerate(support)}
    cols = [mm for mm in support if mm not in forbidden]
    if not cols:
        raise NoRelationError("no admissible support columns remain")
    for row in coeff_matrix:
        if len(row) != len(support):
            raise ValueError("coefficient rows must match the support length")
    rows = [[Fraction(row[idx[mm]]) for mm in cols] for row in coeff_matrix]
    ncols = len(cols)
    # reduced row echelon over the rationals
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(rows)) if rows[i][c]), None)
        if piv is None:
            continue
        rows[r], rows[piv] = rows[piv], rows[r]
        inv = 1 / rows[r][c]
        rows[r] = [v * inv for v in rows[r]]
        for i in range(len(rows)):
            if i != r and rows[i][c]:
                f = rows[i][c]
                rows[i] = [a - f * b for a, b in zip(rows[i], rows[r])]
        pivots.append(c)
        r += 1
        if r == len(rows):
            break
    free = [c for c in range(ncols) if c not in pivots]
    if not free:
        raise NoRelationError(
            f"nullspace is trivial on support {support}")
    fc = free[0]
    vec = [Fraction(0)] * ncols
    vec[fc] = Fraction(1)
    for i, c in enumerate(pivots):
        vec[c] = -rows[i][fc]
    lcm = 1
    for v in vec:
        lcm = lcm * v.denominator // math.gcd(lcm, v.denominator)
    ints = [int(v * lcm) for v in vec]
    g = 0
    for v in ints:
        g = math.gcd(g, v)
    ints = [v // g for v in ints]
    lead = next(v for v in ints if v)
    if lead < 0:
        ints = [-v for v in ints]
    out = {mm: 0 for mm in support}
    out.update(dict(zip(cols, ints)))
    return out


def dim_cusp_forms(weight, N):
    """dim S_weight(Gamma_0(N)) by the classical genus and elliptic-point
    count; zero in odd weight since -1 lies in the group."""
    if not (isinstance(weight, int) and weight >= 2):
        raise ValueError(f"need an integer weight >= 2, got {weight}")
    if not (isinstance(N, int) and N >= 1):
        raise ValueError(f"need a positive level, got {N}")
    if weight % 2:
        return 0
    fac = factorint(N)
    mu = N
    for q in fac:
        mu = mu // q * (q + 1)
    if N % 4 == 0:
        e2 = 0
    else:
        e2 = 1
        for q in fac:
            if q == 2:
                continue
            e2 *= 1 + kronecker(-4, q)
    if N % 9 == 0:
        e3 = 0
    else:
        e3 = 1
        for q in fac:
            e3 *= 1 + kronecker(-3, q)
    einf = sum(_totient(math.gcd(d, N // d)) for d in divisors(N))
    g = 1 + Fraction(mu, 12) - Fraction(e2, 4) - Fraction(e3, 3) - Fraction(einf, 2)
    assert g.denominator == 1
    g = int(g)
    if weight == 2:
        return g
    return ((weight - 1) * (g - 1) + (weight // 4) * e2
            + (weight // 3) * e3 + (weight // 2 - 1) * einf)


def _totient(n):
    out = n
    for q in factorint(n):
        out = out // q * (q - 1)
    return out
