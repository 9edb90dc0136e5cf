"""Jacobi polynomials and second-kind functions, Dedekind eta, integer
digamma, and the finite-difference harmonicity check.

Polynomial data (P, W, and the log-free part of Q) is built once per
index over exact rationals and floated only at evaluation time, so the
evaluators carry no cancellation risk and type-follow their argument:
Fraction/int in, Fraction out; mpf in, mpf out.
"""

from fractions import Fraction
from functools import lru_cache
import warnings

from mpmath import mp, mpf, mpc

from .core import GUARD_BITS, working_prec

__all__ = [
    "ConvergenceError", "jacobi_P", "P_kt", "W_kt", "Q_kt_closed",
    "Q_kt_oracle", "q_kt_derivs", "digamma_int", "euler_gamma",
    "edge_digamma_sum", "dedekind_eta4", "harmonicity_residual",
]


class ConvergenceError(ArithmeticError):
    """Raised when an oracle route cannot certify the requested tolerance."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


# ---------------------------------------------------------------------------
# exact polynomial helpers (ascending Fraction coefficients)

def _padd(p, q):
    n = max(len(p), len(q))
    p = list(p) + [Fraction(0)] * (n - len(p))
    q = list(q) + [Fraction(0)] * (n - len(q))
    return tuple(a + b for a, b in zip(p, q))


def _pscale(p, c):
    c = Fraction(c)
    return tuple(a * c for a in p)


def _pmul(p, q):
    out = [Fraction(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        if a:
            for j, b in enumerate(q):
                out[i + j] += a * b
    return tuple(out)


def _pderiv(p):
    if len(p) <= 1:
        return (Fraction(0),)
    return tuple(Fraction(j) * p[j] for j in range(1, len(p)))


def _ppow(p, e):
    out = (Fraction(1),)
    for _ in range(e):
        out = _pmul(out, p)
    return out


def _peval(p, x):
    if isinstance(x, (int, Fraction)):
        acc = Fraction(0)
        for c in reversed(p):
            acc = acc * x + c
        return acc
    acc = mp.zero
    for c in reversed(p):
        acc = acc * x + c
    return acc


@lru_cache(maxsize=None)
def _mpf_coeffs(p, prec):
    with mp.workprec(prec):
        return tuple(mp.mpf(c.numerator) / c.denominator for c in p)


def _peval_f(p, x):
    """Horner with precompiled mpf coefficients at the current precision."""
    acc = mp.zero
    for c in reversed(_mpf_coeffs(p, mp.prec)):
        acc = acc * x + c
    return acc


# ---------------------------------------------------------------------------
# Jacobi polynomials

def _pochhammer(a, n):
    a = Fraction(a)
    out = Fraction(1)
    for i in range(n):
        out *= a + i
    return out


@lru_cache(maxsize=None)
def _jacobi_coeffs(n, alpha, beta):
    """Coefficients of P_n^{(alpha,beta)} in x, from the explicit
    expansion in powers of (x-1)/2 written with Pochhammer products so
    that nonpositive integer a+b+n+1 degenerations stay finite."""
    alpha = Fraction(alpha)
    beta = Fraction(beta)
    lead = _pochhammer(alpha + 1, n) / _pochhammer(1, n)
    half = (Fraction(-1, 2), Fraction(1, 2))  # (x-1)/2
    poly = (Fraction(0),)
    for j in range(n + 1):
        c = (_pochhammer(-n, j) * _pochhammer(n + alpha + beta + 1, j)
             / (_pochhammer(alpha + 1, j) * _pochhammer(1, j)))
        c *= (-1) ** j  # absorb ((1-x)/2)^j -> ((x-1)/2)^j
        if c:
            poly = _padd(poly, _pscale(_ppow(half, j), c))
    return _pscale(poly, lead)


def jacobi_P(n, alpha, beta, x, prec=None):
    """P_n^{(alpha,beta)}(x); exact for Fraction/int x, mpf otherwise."""
    if n < 0 or n != int(n):
        raise ValueError(f"degree must be a nonnegative integer, got {n}")
    coeffs = _jacobi_coeffs(int(n), Fraction(alpha), Fraction(beta))
    if isinstance(x, (int, Fraction)):
        return _peval(coeffs, x)
    with working_prec(prec):
        return _peval_f(coeffs, mp.mpf(x) if not isinstance(x, mpc) else x)


def _require_index(k, t):
    if not (isinstance(k, int) and isinstance(t, int)):
        raise TypeError(f"k, t must be integers, got k={k!r}, t={t!r}")
    if not (k >= 1 and 0 <= t <= k - 1):
        raise ValueError(f"need 0 <= t <= k-1 with k >= 1, got k={k}, t={t}")


@lru_cache(maxsize=None)
def _P_kt_coeffs(k, t):
    return _jacobi_coeffs(k - t - 1, Fraction(0), Fraction(2 * t))


@lru_cache(maxsize=None)
def _P_kt_rodrigues_coeffs(k, t):
    # (d/dx)^(k+t-1) [(x^2-1)^(k-t-1) (x-1)^(2t)] / (2^(k-t-1) (k+t-1)!)
    poly = _pmul(_ppow((Fraction(-1), Fraction(0), Fraction(1)), k - t - 1),
                 _ppow((Fraction(-1), Fraction(1)), 2 * t))
    for _ in range(k + t - 1):
        poly = _pderiv(poly)
    fact = Fraction(1)
    for i in range(2, k + t):
        fact *= i
    return _pscale(poly, Fraction(1) / (2 ** (k - t - 1) * fact))


def P_kt(k, t, x, prec=None):
    """P_{k,t}(x) = P_{k-t-1}^{(0,2t)}(x); exact on rational input."""
    _require_index(k, t)
    coeffs = _P_kt_coeffs(k, t)
    if isinstance(x, (int, Fraction)):
        return _peval(coeffs, x)
    with working_prec(prec):
        return _peval_f(coeffs, mp.mpf(x))


@lru_cache(maxsize=None)
def _W_coeffs(k, t):
    """W_{n-1}^{(0,2t)} with n = k-t-1, as a polynomial in x."""
    out = (Fraction(0),)
    for j in range(k - t - 2 + 1):
        term = _pmul(_jacobi_coeffs(j, Fraction(0), Fraction(-2 * t)),
                     _jacobi_coeffs(k - t - 2 - j, Fraction(0), Fraction(2 * t)))
        out = _padd(out, _pscale(term, Fraction(1, (j + 1) * (k + t - 1 - j))))
    return _pscale(out, Fraction(4 ** t * (k + t)))


def W_kt(k, t, x, prec=None):
    """Second-kind Jacobi polynomial W_{n-1}^{(0,2t)}(x), n = k-t-1;
    zero for n = 0 (empty sum)."""
    _require_index(k, t)
    coeffs = _W_coeffs(k, t)
    if isinstance(x, (int, Fraction)):
        return _peval(coeffs, x)
    with working_prec(prec):
        return _peval_f(coeffs, mp.mpf(x))


# ---------------------------------------------------------------------------
# Q_{k,t}: closed form and derivatives

@lru_cache(maxsize=None)
def _J_correction(t):
    """sum_{j=1}^{2t} C(2t,j) (-1)^j/j (x+1)^{2t-j} [(x+1)^j - (x-1)^j]."""
    xp = (Fraction(1), Fraction(1))
    xm = (Fraction(-1), Fraction(1))
    out = (Fraction(0),)
    from math import comb
    for j in range(1, 2 * t + 1):
        c = Fraction(comb(2 * t, j) * (-1) ** j, j)
        diff = _padd(_ppow(xp, j), _pscale(_ppow(xm, j), -1))
        out = _padd(out, _pscale(_pmul(_ppow(xp, 2 * t - j), diff), c))
    return out


@lru_cache(maxsize=None)
def _Q_parts(k, t):
    """Q_{k,t} = A(x) log((x+1)/(x-1)) + U(x)/(x+1)^{2t} with exact A, U."""
    A = _P_kt_coeffs(k, t)
    U = _padd(_pmul(A, _J_correction(t)), _pscale(_W_coeffs(k, t), -1))
    return A, U


def _cancel_guard(k, x):
    # the polynomial parts grow like x^(k-t-1) while Q decays like
    # x^-(k+t), so roughly (2k-1) log2(x) leading bits cancel for x >> 1
    if x <= 2:
        return 0
    from math import ceil, log2
    return ceil((2 * k - 1) * log2(float(x)))


def Q_kt_closed(k, t, x, prec=None):
    """Production evaluator of Q_{k,t}(x) for real x > 1."""
    _require_index(k, t)
    xg = mp.mpf(x)
    if not xg > 1:
        raise ValueError(f"Q_kt requires x > 1, got x = {xg}")
    with working_prec(prec, guard=GUARD_BITS + _cancel_guard(k, xg)):
        x = mp.mpf(x)
        A, U = _Q_parts(k, t)
        L = mp.log((x + 1) / (x - 1))
        return _peval_f(A, x) * L + _peval_f(U, x) / (x + 1) ** (2 * t)


@lru_cache(maxsize=None)
def _Q_deriv_parts(k, t):
    A, U = _Q_parts(k, t)
    A1, A2 = _pderiv(A), _pderiv(_pderiv(A))
    # R = U/(x+1)^m, R' = N1/(x+1)^(m+1), R'' = N2/(x+1)^(m+2)
    m = 2 * t
    xp = (Fraction(1), Fraction(1))
    N1 = _padd(_pmul(_pderiv(U), xp), _pscale(U, -m))
    N2 = _padd(_pmul(_pderiv(N1), xp), _pscale(N1, -(m + 1)))
    return A, A1, A2, U, N1, N2


def q_kt_derivs(k, t, x, prec=None):
    """(Q, Q', Q'') with analytic derivatives of the closed form."""
    _require_index(k, t)
    xg = mp.mpf(x)
    if not xg > 1:
        raise ValueError(f"Q_kt requires x > 1, got x = {xg}")
    with working_prec(prec, guard=GUARD_BITS + _cancel_guard(k, xg)):
        x = mp.mpf(x)
        A, A1, A2, U, N1, N2 = _Q_deriv_parts(k, t)
        m = 2 * t
        L = mp.log((x + 1) / (x - 1))
        L1 = -2 / (x * x - 1)
        L2 = 4 * x / (x * x - 1) ** 2
        xp = x + 1
        q0 = _peval_f(A, x) * L + _peval_f(U, x) / xp ** m
        q1 = (_peval_f(A1, x) * L + _peval_f(A, x) * L1
              + _peval_f(N1, x) / xp ** (m + 1))
        q2 = (_peval_f(A2, x) * L + 2 * _peval_f(A1, x) * L1
              + _peval_f(A, x) * L2 + _peval_f(N2, x) / xp ** (m + 2))
        return q0, q1, q2


def Q_kt_series(k, t, x, prec=None):
    """Direct hypergeometric series for Q_{k,t}(x), x > 3 so that the
    argument 2/(1-x) lies inside the unit disk.  Cancellation-free, so
    no extra guard bits are needed at large x; meant for bulk tails."""
    _require_index(k, t)
    xg = mp.mpf(x)
    if not xg > 3:
        raise ValueError(f"series route requires x > 3, got x = {xg}")
    with working_prec(prec, guard=GUARD_BITS):
        x = mp.mpf(x)
        z = 2 / (1 - x)
        term = mp.mpf(1)
        total = mp.mpf(1)
        floor = mp.mpf(2) ** (-mp.prec - 10)
        j = 0
        while True:
            term *= z * (k - t + j) ** 2 / ((2 * k + j) * (j + 1))
            total += term
            j += 1
            if abs(term) <= floor * abs(total):
                break
        pre = Fraction(2 ** (k + t) * _fact(k + t - 1) * _fact(k - t - 1),
                       _fact(2 * k - 1))
        scale = mp.mpf(pre.numerator) / pre.denominator
        return scale * total / ((x - 1) ** (k - t) * (x + 1) ** (2 * t))


def _fact(n):
    from math import factorial
    return factorial(n)


def _Q_hypergeometric(k, t, x):
    # Euler-transformed representation; mpmath continues the series on
    # 1 < x <= 3 where |2/(1-x)| >= 1
    pre = (mpf(2) ** (k + t) * mp.gamma(k + t) * mp.gamma(k - t)
           / (mp.gamma(2 * k) * (x - 1) ** (k - t) * (x + 1) ** (2 * t)))
    return pre * mp.hyp2f1(k - t, k - t, 2 * k, 2 / (1 - x))


def _Q_quadrature(k, t, x, rel_tol):
    s = mp.sqrt(x * x - 1)
    four_t = mpf(4) ** t
    kt = k - t
    tt = 2 * t

    def integrand(w):
        ew = mp.exp(w)
        ch = (ew + 1 / ew) / 2
        return four_t / ((x + s * ch) ** kt * (x + 1 + s * ew) ** tt)

    last = None
    for maxdegree in (8, 10, 12):
        val, err = mp.quad(integrand, [mp.ninf, 0, mp.inf],
                           error=True, maxdegree=maxdegree)
        last = (val, err, maxdegree)
        if err <= rel_tol * max(abs(val), mpf("1e-30")):
            return val
    val, err, maxdegree = last
    raise ConvergenceError(
        "quadrature did not certify the requested tolerance",
        k=k, t=t, x=float(x), route="quadrature", maxdegree=maxdegree,
        error_estimate=float(err), target=float(rel_tol * max(abs(val), mpf("1e-30"))))


def Q_kt_oracle(k, t, x, route, prec=None, rel_tol=None):
    """Independent evaluations of Q_{k,t}: 'quadrature' integrates the
    defining integral over w in (-inf, inf); 'hypergeometric' sums the
    2F1 representation.  Test oracles only; Q_kt_closed is production."""
    _require_index(k, t)
    guard = 32
    with working_prec(prec, guard=guard) as p:
        x = mp.mpf(x)
        if not x > 1:
            raise ValueError(f"Q_kt requires x > 1, got x = {x}")
        if route == "hypergeometric":
            return _Q_hypergeometric(k, t, x)
        if route == "quadrature":
            if rel_tol is None:
                rel_tol = mpf(2) ** (-(p - 24))
            return _Q_quadrature(k, t, x, rel_tol)
        raise ValueError(f"unknown route {route!r}")


# ---------------------------------------------------------------------------
# digamma at integers, eta, harmonicity

@lru_cache(maxsize=None)
def _harmonic(n):
    return sum((Fraction(1, j) for j in range(1, n + 1)), Fraction(0))


def digamma_int(n, prec=None):
    """psi(n) = -gamma + H_{n-1} for integer n >= 1."""
    if not (isinstance(n, int) and n >= 1):
        raise ValueError(f"digamma_int needs an integer n >= 1, got {n}")
    with working_prec(prec):
        return -mp.euler + mp.mpf(_harmonic(n - 1).numerator) / _harmonic(n - 1).denominator


def euler_gamma(prec=None):
    with working_prec(prec):
        return +mp.euler


def edge_digamma_sum(k, t):
    """psi(k+t) + psi(k-t) - 2 psi(1) = H_{k+t-1} + H_{k-t-1}, exact."""
    _require_index(k, t)
    return _harmonic(k + t - 1) + _harmonic(k - t - 1)


def dedekind_eta4(z, prec=None):
    """eta^4(z) = q^(1/6) prod (1-q^n)^4, principal branch of q^(1/6)."""
    with working_prec(prec) as p:
        z = mpc(z)
        if not z.imag > 0:
            raise ValueError(f"eta requires Im z > 0, got z = {z}")
        q = mp.exp(2j * mp.pi * z)
        nmax = int(mp.ceil((p + 16) * mp.ln(2) / (2 * mp.pi * z.imag))) + 4
        prod = mp.mpc(1)
        qn = q
        for _ in range(nmax):
            f = 1 - qn
            f *= f
            prod *= f * f
            qn *= q
        return mp.exp(mp.log(q) / 6) * prod


def harmonicity_residual(k, t, sign, z, zp, step, prec=None):
    """Relative residual of the eigen-equation for the weighted kernel
    mu^{+/-} under the second-order operator in the primed variable,
    measured with 4th-order central finite differences of size `step`.
    When the eigenvalue vanishes (t = k-1, '-' sign) the residual is
    scaled by the second-order term's magnitude instead of |lam*mu|."""
    _require_index(k, t)
    if sign not in ("+", "-"):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    sg = 1 if sign == "+" else -1
    lam = -(k + sg * t - 1) * (k - sg * t)
    with working_prec(prec, guard=64):
        z = mpc(z)
        zp0 = mpc(zp)
        h = mp.mpf(step)
        if abs(z - zp0) < 10 * h:
            warnings.warn("step is large relative to |z - z'|; residual "
                          "will be dominated by truncation", stacklevel=2)
        y = z.imag
        tt = 2 * t

        def mu(w):
            yw = w.imag
            g = -Q_kt_closed(k, t, 1 + abs(z - w) ** 2 / (2 * y * yw))
            if sign == "+":
                fac = ((z - mp.conj(w)) / (2j * yw)) ** tt
            else:
                fac = ((mp.conj(z) - w) / (2j * y)) ** tt
            return g * fac

        f0 = mu(zp0)
        xm2, xm1 = mu(zp0 - 2 * h), mu(zp0 - h)
        xp1, xp2 = mu(zp0 + h), mu(zp0 + 2 * h)
        ym2, ym1 = mu(zp0 - 2j * h), mu(zp0 - 1j * h)
        yp1, yp2 = mu(zp0 + 1j * h), mu(zp0 + 2j * h)
        dx = (-xp2 + 8 * xp1 - 8 * xm1 + xm2) / (12 * h)
        dy = (-yp2 + 8 * yp1 - 8 * ym1 + ym2) / (12 * h)
        dxx = (-xp2 + 16 * xp1 - 30 * f0 + 16 * xm1 - xm2) / (12 * h * h)
        dyy = (-yp2 + 16 * yp1 - 30 * f0 + 16 * ym1 - ym2) / (12 * h * h)
        yp = zp0.imag
        dzbar = (dx + 1j * dy) / 2
        dzzbar = (dxx + dyy) / 4
        op = -4 * yp ** 2 * dzzbar + sg * 4j * t * yp * dzbar
        scale = abs(lam * f0)
        if scale == 0:
            scale = 4 * yp ** 2 * (abs(dxx) + abs(dyy)) / 4
        return abs(op - lam * f0) / scale
