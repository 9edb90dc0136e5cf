"""Rankin-Selberg series attached to an eigenform and one class of the
ring class field: exact Dirichlet coefficients, the completed function
through a smoothed approximate functional equation, its central
derivative, and a Petersson norm quadrature.

The completed function used here is

    Lambda(s) = (N|D|)^s (2pi)^{-2s} Gamma(s) Gamma(s-2t) L(s),

self-dual under s -> 2k + 2t - s with sign -eps_K(N).  Both the power
of 2pi and the conductor N|D| are exposed as knobs on the series
record; the functional-equation residual is the arbiter between
conventions, and the default pair is the one that passes it.

Evaluation splits the incomplete Mellin integral of 2 K_{2t} at a point
c and reflects the complementary piece through the functional equation.
The split point deliberately defaults away from 1: at c = 1 the
residual of the functional equation cancels identically by symmetry of
the two sums, so only an asymmetric split makes the residual an actual
measurement.
"""

import math
import re
from dataclasses import dataclass

from mpmath import mp

from .core import GUARD_BITS, resolve_prec, working_prec
from .heckechar import AlgValue, theta_coeffs
from .quadfield import kronecker
from .special import ConvergenceError, digamma_int

_J_CAP = 20000


class EigenformError(ValueError):
    """Raised on malformed or arithmetically inconsistent coefficient data."""


# ---------------------------------------------------------------------------
# eigenform records


@dataclass(frozen=True)
class Eigenform:
    """A normalized holomorphic eigenform given by its q-expansion.

    weight      even integer 2k
    level       positive integer N
    coeffs      tuple of exact integers, coeffs[n] = a(n), coeffs[0] = 0
    provenance  free-form description of where the table came from
    """

    weight: int
    level: int
    coeffs: tuple
    provenance: str = ""

    def __post_init__(self):
        if self.weight < 4 or self.weight % 2:
            raise EigenformError(f"weight must be even and >= 4, got {self.weight}")
        if self.level < 1:
            raise EigenformError(f"level must be positive, got {self.level}")
        if len(self.coeffs) < 2 or self.coeffs[0] != 0 or self.coeffs[1] != 1:
            raise EigenformError("coefficient table must start 0, 1 (normalized)")

    @property
    def upto(self):
        return len(self.coeffs) - 1

    def a(self, n):
        if not 1 <= n <= self.upto:
            raise EigenformError(
                f"a({n}) requested but the table stops at {self.upto}")
        return self.coeffs[n]


def _check_multiplicative(coeffs, bound=50):
    top = min(len(coeffs) - 1, bound)
    for m in range(2, top // 2 + 1):
        for n in range(m + 1, top // m + 1):
            if math.gcd(m, n) == 1 and coeffs[m * n] != coeffs[m] * coeffs[n]:
                raise EigenformError(
                    f"multiplicativity fails at ({m}, {n}): "
                    f"a({m * n}) = {coeffs[m * n]} but a({m})a({n}) = "
                    f"{coeffs[m] * coeffs[n]}")


def ingest_eigenform(path, weight=None, level=None):
    """Read a coefficient file with lines "n a_n" and '#' comments.

    Weight and level are taken from a comment header of the form
    "# weight W level N ..." unless supplied explicitly.  The table must
    cover n = 1..max contiguously, be normalized (a(1) = 1), and pass a
    multiplicativity spot check on small coprime pairs.
    """
    header = []
    entries = {}
    with open(path, encoding="ascii") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if raw.lstrip().startswith("#"):
                header.append(raw.lstrip()[1:].strip())
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise EigenformError(
                    f"{path}:{lineno}: expected 'n a_n', got {raw.strip()!r}")
            try:
                n, an = int(parts[0]), int(parts[1])
            except ValueError:
                raise EigenformError(
                    f"{path}:{lineno}: non-integer entry {raw.strip()!r}") from None
            if n < 1 or n in entries:
                raise EigenformError(f"{path}:{lineno}: bad or repeated index {n}")
            entries[n] = an
    if not entries:
        raise EigenformError(f"{path}: no coefficient lines found")
    top = max(entries)
    if set(entries) != set(range(1, top + 1)):
        missing = min(set(range(1, top + 1)) - set(entries))
        raise EigenformError(f"{path}: table has a gap at n = {missing}")
    text = " ".join(header)
    if weight is None:
        m = re.search(r"weight\s+(\d+)", text)
        if not m:
            raise EigenformError(f"{path}: weight not in header and not supplied")
        weight = int(m.group(1))
    if level is None:
        m = re.search(r"level\s+(\d+)", text)
        if not m:
            raise EigenformError(f"{path}: level not in header and not supplied")
        level = int(m.group(1))
    coeffs = (0,) + tuple(entries[n] for n in range(1, top + 1))
    if coeffs[1] != 1:
        raise EigenformError(f"{path}: table is not normalized, a(1) = {coeffs[1]}")
    _check_multiplicative(coeffs)
    prov = header[0] if header else path
    return Eigenform(weight=weight, level=level, coeffs=coeffs, provenance=prov)


def bundled_eigenform():
    """The packaged weight 6, level 3 eigenform table."""
    from importlib.resources import files

    return ingest_eigenform(str(files("artifact") / "data" / "eigenform_w6_N3.txt"))


# ---------------------------------------------------------------------------
# Dirichlet coefficients of the Rankin-Selberg product


@dataclass(frozen=True)
class RSSeries:
    """Coefficient data of one class component of the product series.

    b holds exact AlgValue Dirichlet coefficients b(n) = sum over
    d^2 e = n, (d, N) = 1 of eps_K(d) d^{2k+2t-1} a(e) r(e); the series
    converges for Re s > k + t + 1/2 and completes to Lambda above.
    sign is -eps_K(N); s0 = k + t is the symmetry center.
    """

    k: int
    t: int
    N: int
    D: int
    b: tuple
    sign: int
    s0: int
    conductor: int
    two_pi_exp: int = 2
    provenance: str = ""

    def __post_init__(self):
        object.__setattr__(self, "_cache", {})

    @property
    def upto(self):
        return len(self.b) - 1

    def abs_floats(self):
        """Cheap magnitude envelope of the coefficients, for cutoff sizing."""
        have = self._cache.get("absb")
        if have is None:
            have = [0.0] + [abs(complex(v.to_mpc(64))) for v in self.b[1:]]
            self._cache["absb"] = have
        return have


def _alg_is_zero(v):
    return v.is_exact and not v.x and not v.y


def rs_coefficients(f, chi, cls, upto, prec=None, two_pi_exp=2, conductor=None):
    """Exact Dirichlet coefficients of the series attached to (f, chi)
    and one ideal class, up to the given index."""
    if f.weight % 2:
        raise EigenformError(f"weight {f.weight} is odd")
    k = f.weight // 2
    t = chi.t
    if not 0 <= t <= k - 1:
        raise ValueError(f"character weight t = {t} incompatible with k = {k}")
    if upto < 1:
        raise ValueError(f"need upto >= 1, got {upto}")
    if upto > f.upto:
        raise EigenformError(
            f"need a({upto}) but the eigenform table stops at {f.upto}")
    D, N = chi.disc.D, f.level
    eN = kronecker(D, N)
    if eN == 0:
        raise ValueError(f"level {N} ramifies in D = {D}")
    table = theta_coeffs(chi, cls, upto, prec=prec)
    zero = AlgValue.exact(D, 0)
    power = 2 * k + 2 * t - 1
    b = [zero]
    for n in range(1, upto + 1):
        acc = zero
        d = 1
        while d * d <= n:
            if n % (d * d) == 0 and math.gcd(d, N) == 1:
                e = n // (d * d)
                c = kronecker(D, d) * d ** power * f.a(e)
                if c:
                    acc = acc + c * table[e]
            d += 1
        b.append(acc)
    return RSSeries(
        k=k, t=t, N=N, D=D, b=tuple(b), sign=-eN, s0=k + t,
        conductor=N * abs(D) if conductor is None else conductor,
        two_pi_exp=two_pi_exp,
        provenance=f.provenance)


# ---------------------------------------------------------------------------
# incomplete Bessel-Mellin weights
#
# W(beta, X, c) = int_c^oo 2 K_{2t}(2 sqrt(X y)) y^{beta-1} dy, computed
# as Gamma(beta+t) Gamma(beta-t) X^{-beta} minus the ascending series of
# the lower integral.  The lower series cancels against the head by
# roughly exp(2 sqrt(Xc)), which the callers absorb into the working
# precision before entering.


def _k_lower(beta, X, c, t, want_deriv):
    """Lower incomplete integral int_0^c of the Bessel kernel, plus its
    beta-derivative when asked; requires Re beta > t."""
    m = 2 * t
    lnX, lnc = mp.log(X), mp.log(c)
    L = lnX + lnc
    val = []
    dval = []
    # polynomial part of the kernel, m terms
    coef = mp.mpf(math.factorial(m - 1)) if m else None
    for j in range(m):
        g = beta + j - t
        base = coef * mp.power(X, j - t) * mp.power(c, g)
        val.append(base / g)
        if want_deriv:
            dval.append(base * (lnc / g - 1 / g ** 2))
        if j + 1 < m:
            coef = -coef / ((j + 1) * (m - 1 - j))
    # log and digamma strands share the power series of I_m
    P = mp.power(X, t) * mp.power(c, beta + t) / math.factorial(m)
    psi = digamma_int(1) + digamma_int(m + 1)
    Xc = X * c
    tiny = mp.ldexp(1, -(mp.prec + 10))
    peak = mp.mpf(0)
    settled = 0
    for j in range(_J_CAP):
        g = beta + j + t
        ig = 1 / g
        term = P * ((psi - L) * ig + ig ** 2)
        val.append(term)
        if want_deriv:
            dval.append(P * (lnc * ((psi - L) * ig + ig ** 2)
                             + (L - psi) * ig ** 2 - 2 * ig ** 3))
        mag = abs(term)
        peak = max(peak, mag)
        settled = settled + 1 if mag < tiny * (1 + peak) else 0
        if settled >= 2 and j > 2:
            break
        P = P * Xc / ((j + 1) * (m + j + 1))
        psi += mp.mpf(1) / (j + 1) + mp.mpf(1) / (m + j + 1)
    else:
        raise ConvergenceError(
            "kernel series did not settle", X=float(X), c=float(c),
            prec=mp.prec, cap=_J_CAP)
    return mp.fsum(val), (mp.fsum(dval) if want_deriv else None)


def _k_weight(beta, X, c, t, gprod, want_deriv=False):
    """Upper incomplete weight and optionally its beta-derivative."""
    head = gprod * mp.power(X, -beta)
    low, dlow = _k_lower(beta, X, c, t, want_deriv)
    w = head - low
    if not want_deriv:
        return w, None
    dhead = head * (mp.digamma(beta + t) + mp.digamma(beta - t) - mp.log(X))
    return w, dhead - dlow


# ---------------------------------------------------------------------------
# completed function

_W_FUDGE = 50.0


def _wbound(rebeta, X, c):
    """Crude float upper estimate of |W|, for cutoff sizing only."""
    z = 2.0 * math.sqrt(X * c)
    poly = (1.0 + X * c) ** (abs(rebeta) / 2.0 + 1.0)
    return _W_FUDGE * math.exp(-z) * poly


def _plan(series, res, tolf, split):
    """Float pre-pass: coefficient cutoff and cancellation budget."""
    absb = series.abs_floats()
    x1 = (2.0 * math.pi) ** series.two_pi_exp / series.conductor
    t = series.t
    betas = (res - t, 2 * series.k - (res - t))
    cmin, cmax = min(split, 1.0 / split), max(split, 1.0 / split)
    heads = [
        absb[n] * x1 ** (-t) * math.exp(
            math.lgamma(rb + t) + math.lgamma(rb - t) - rb * math.log(x1 * n))
        for n in range(1, min(series.upto, 40) + 1) if absb[n]
        for rb in betas]
    if not heads:
        raise ValueError("coefficient vector is identically zero")
    scale = max(heads)
    # tail bound through a monotone envelope; raw |b_n| has long zero
    # runs that say nothing about later terms
    env = max(absb[n] / float(n) ** series.s0 for n in range(1, series.upto + 1))
    M = None
    for n in range(1, series.upto + 1):
        X = x1 * n
        top = max(_wbound(rb, X, cmin) for rb in betas)
        if env * float(n) ** series.s0 * X ** (-t) * top < tolf * scale / 8.0:
            M = n
            break
    if M is None:
        raise ConvergenceError(
            "smoothing cutoff exceeds the available coefficient table",
            available=series.upto, tol=tolf,
            hint="extend the eigenform table or relax tol")
    boost = int(2.886 * math.sqrt(x1 * M * cmax)) + 32
    return M, boost, scale


def _series_eval(series, s, split, cutoff, tol, prec, want_deriv):
    """Shared core: Lambda(s) and optionally d/ds Lambda at s.

    Returns (lam, dlam, pr).  The split point c > 0 weights one sum with
    the kernel at c and the reflected sum at 1/c; any c is valid under
    the functional equation, and c != 1 keeps the reflection honest.
    """
    res = mp.re(s)
    if not 2 * series.t < res < 2 * series.k:
        raise ValueError(
            f"Re s = {res} outside the managed strip "
            f"({2 * series.t}, {2 * series.k})")
    if split <= 0:
        raise ValueError(f"split point must be positive, got {split}")
    pr = resolve_prec(prec)
    if cutoff is not None:
        if not 1 <= cutoff <= series.upto:
            raise EigenformError(
                f"cutoff {cutoff} outside the coefficient table ({series.upto})")
        M = cutoff
        boost = int(2.886 * math.sqrt(
            (2 * math.pi) ** series.two_pi_exp / series.conductor * cutoff
            * max(split, 1 / split))) + 32
    else:
        tol_eff = tol if tol is not None else mp.ldexp(1, -(pr // 3 + 10))
        M, boost, _ = _plan(series, float(res), float(tol_eff), float(split))
    with mp.workprec(pr + GUARD_BITS + boost):
        c1 = mp.mpf(split)
        c2 = 1 / c1
        x1 = mp.power(2 * mp.pi, series.two_pi_exp) / series.conductor
        t, k = series.t, series.k
        alpha = mp.mpc(s) - t
        betas = (alpha, 2 * k - alpha)
        gp = [mp.gamma(bt + t) * mp.gamma(bt - t) for bt in betas]
        sums = [[], [], [], []]
        for n in range(1, M + 1):
            bv = series.b[n]
            if _alg_is_zero(bv):
                continue
            bn = bv.to_mpc()
            X = x1 * n
            fac = bn * mp.power(X, -t)
            w1, d1 = _k_weight(betas[0], X, c1, t, gp[0], want_deriv)
            w2, d2 = _k_weight(betas[1], X, c2, t, gp[1], want_deriv)
            sums[0].append(fac * w1)
            sums[1].append(fac * w2)
            if want_deriv:
                sums[2].append(fac * d1)
                sums[3].append(fac * d2)
        T1, T2 = mp.fsum(sums[0]), mp.fsum(sums[1])
        lam = T1 + series.sign * T2
        dlam = None
        if want_deriv:
            dlam = mp.fsum(sums[2]) - series.sign * mp.fsum(sums[3])
    with mp.workprec(pr):
        lam = +lam if mp.im(lam) else mp.mpf(mp.re(lam))
        dlam = +dlam if dlam is not None else None
    return lam, dlam, pr


def lambda_completed(series, s, split=0.75, cutoff=None, tol=None, prec=None):
    """Completed value Lambda(s) inside the strip 2t < Re s < 2k.

    cutoff fixes the number of Dirichlet coefficients used (default:
    sized automatically from tol, raising ConvergenceError with sizing
    diagnostics when the table cannot certify it)."""
    lam, _, _ = _series_eval(series, s, split, cutoff, tol, prec, False)
    return lam


def central_derivative(series, split=0.75, cutoff=None, tol=None, prec=None):
    """Derivative L'(s0) of the bare series at the center s0 = k + t.

    Requires sign -1, so that Lambda(s0) = 0 and the derivative of the
    completed function carries the whole central datum; the gamma and
    conductor factors are divided back out.  The result is real for a
    real coefficient vector and is returned as mpf in that case."""
    if series.sign != -1:
        raise ValueError(f"center of an even series (sign {series.sign:+d})")
    s0 = series.s0
    lam, dlam, pr = _series_eval(series, s0, split, cutoff, tol, prec, True)
    with mp.workprec(pr + GUARD_BITS):
        gfac = (mp.power(series.conductor, s0)
                * mp.power(2 * mp.pi, -series.two_pi_exp * s0)
                * mp.gamma(s0) * mp.gamma(s0 - 2 * series.t))
        glog = (mp.log(series.conductor)
                - series.two_pi_exp * mp.log(2 * mp.pi)
                + mp.digamma(s0) + mp.digamma(s0 - 2 * series.t))
        out = (dlam - glog * lam) / gfac
    with mp.workprec(pr):
        if abs(mp.im(out)) <= mp.ldexp(abs(mp.re(out)) + 1, -(pr // 2)):
            return mp.mpf(mp.re(out))
        return +out


# ---------------------------------------------------------------------------
# Petersson norm


def _qexp(f, z, terms):
    """q-expansion sum at z, fixed term count, Horner in q."""
    q = mp.exp(2j * mp.pi * z)
    acc = mp.mpc(0)
    for n in range(terms, 0, -1):
        acc = (acc + f.coeffs[n]) * q
    return acc


def petersson_quadrature(f, mesh=64, ymax=None, prec=None, fricke=-1):
    """Petersson norm (f, f) over the level group, prime level.

    Unfolds over the N + 1 cosets of the level group in the modular
    group; the inverted copies are pulled back through the Fricke
    involution (eigenvalue `fricke`, entering squared, so the norm is
    insensitive to its sign), which turns every coset term into a plain
    q-expansion high in the upper half plane.  Simpson rule on a
    log-stretched grid over the standard fundamental domain, with an
    internal mesh-halving check."""
    N, k2 = f.level, f.weight
    if N < 2 or any(N % p == 0 for p in range(2, N) if p * p <= N):
        raise ValueError(f"level {N} is not prime")
    if mesh < 8 or mesh % 4:
        raise ValueError(f"mesh must be a multiple of 4 and >= 8, got {mesh}")
    if fricke not in (-1, 1):
        raise ValueError(f"Fricke eigenvalue must be +-1, got {fricke}")
    with working_prec(prec) as pr:
        yfloor = mp.sqrt(3) / (2 * N)
        terms = int((pr + 16) * mp.log(2) / (2 * mp.pi * yfloor)) + 40
        if terms > f.upto:
            raise EigenformError(
                f"need {terms} q-expansion terms near the domain floor, "
                f"table has {f.upto}")
        top = mp.mpf(ymax) if ymax else N * (pr * mp.log(2) + 30) / (4 * mp.pi)
        scale = mp.power(N, -k2)

        def density(x, y):
            w = mp.mpc(x, y)
            tot = abs(_qexp(f, w, terms)) ** 2
            for j in range(N):
                tot += scale * abs(_qexp(f, (w + j) / N, terms)) ** 2
            return tot * mp.power(y, k2 - 2)

        def simpson(n):
            hx = mp.mpf(1) / n
            rows = []
            for i in range(n + 1):
                x = -mp.mpf(1) / 2 + i * hx
                wx = 1 if i in (0, n) else (4 if i % 2 else 2)
                ylow = mp.sqrt(1 - x * x)
                span = mp.log(top / ylow)
                hv = mp.mpf(1) / n
                col = []
                for ji in range(n + 1):
                    v = ji * hv
                    wv = 1 if ji in (0, n) else (4 if ji % 2 else 2)
                    y = ylow * mp.exp(v * span)
                    col.append(wx * wv * density(x, y) * y * span)
                rows.append(mp.fsum(col) * hv / 3)
            return mp.fsum(rows) * hx / 3

        fine = simpson(mesh)
        coarse = simpson(mesh // 2)
        drift = abs(fine - coarse) / abs(fine)
        if drift > mp.mpf("0.02"):
            raise ConvergenceError(
                "quadrature has not settled under mesh halving",
                mesh=mesh, drift=float(drift))
        return +fine
