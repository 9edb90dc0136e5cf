"""Oracle tests for the special-function layer.

Frozen values below were derived independently before implementation:
either by hand from the defining sums (Q_{2,1}(3) = log 2 - 5/8,
Q_{3,1}(3) = 5 log 2 - 83/24, W_{3,1} = 16/3) or via a second route
(sympy Rodrigues differentiation, defining-integral quadrature,
mpmath.qp for eta)."""

import random
import warnings
from fractions import Fraction

import mpmath
import pytest
import sympy
from mpmath import mp, mpf

from artifact.special import (
    ConvergenceError, P_kt, Q_kt_closed, Q_kt_oracle, W_kt,
    dedekind_eta4, digamma_int, edge_digamma_sum, euler_gamma,
    harmonicity_residual, jacobi_P, q_kt_derivs,
)
from artifact.special import _jacobi_coeffs, _P_kt_rodrigues_coeffs, _P_kt_coeffs

KT_GRID = [(k, t) for k in range(1, 6) for t in range(0, k)]
X_GRID = [mpf("1.01"), mpf("1.5"), mpf(3), mpf(10), mpf(100)]


def sympy_rodrigues(n, alpha, beta):
    x = sympy.symbols("x")
    expr = sympy.diff((1 - x) ** (n + alpha) * (1 + x) ** (n + beta), x, n)
    expr = expr * (-1) ** n / (2 ** n * sympy.factorial(n) * (1 - x) ** alpha * (1 + x) ** beta)
    return sympy.Poly(sympy.cancel(sympy.together(expr)), x)


def test_jacobi_examples():
    for x in (mpf("-0.3"), mpf(0), mpf("2.5")):
        assert jacobi_P(0, 0, 2, x) == 1
    assert abs(jacobi_P(1, 0, 0, mpf("0.5")) - mpf("0.5")) < mpf(2) ** -120
    for n in range(0, 6):
        for t in range(0, 4):
            assert jacobi_P(n, 0, 2 * t, Fraction(1)) == 1


def test_jacobi_degree_validation():
    with pytest.raises(ValueError):
        jacobi_P(-1, 0, 0, mpf(2))


def test_jacobi_matches_rodrigues_exactly():
    # coefficient-level comparison over the rationals, beta >= 0
    for n in range(0, 7):
        for beta in range(0, 7):
            ours = _jacobi_coeffs(n, Fraction(0), Fraction(beta))
            x = sympy.symbols("x")
            theirs = sympy_rodrigues(n, 0, beta).all_coeffs()[::-1]
            theirs = [Fraction(int(sympy.numer(c)), int(sympy.denom(c))) for c in theirs]
            theirs += [Fraction(0)] * (len(ours) - len(theirs))
            assert list(ours) == theirs, (n, beta)


def test_P_kt_examples():
    for x in (mpf("1.2"), mpf(7), mpf("-0.5")):
        assert P_kt(2, 1, x) == 1
        assert abs(P_kt(2, 0, x) - x) < mpf(2) ** -120
    for k, t in KT_GRID:
        assert P_kt(k, t, Fraction(1)) == 1


def test_P_kt_rodrigues_crosscheck():
    # ambient definition: scaled (k+t-1)-th derivative of (x^2-1)^(k-t-1) (x-1)^(2t)
    for k, t in KT_GRID:
        a = _P_kt_coeffs(k, t)
        b = _P_kt_rodrigues_coeffs(k, t)
        n = max(len(a), len(b))
        pa = list(a) + [Fraction(0)] * (n - len(a))
        pb = list(b) + [Fraction(0)] * (n - len(b))
        assert pa == pb, (k, t)


def w_defining_integral(k, t, x):
    # quadrature of the defining integral of W_{n-1}^{(0,2t)}, n = k-t-1
    n = k - t - 1
    xf = mpf(x)

    def integrand(u):
        return ((jacobi_P(n, 0, 2 * t, xf) - jacobi_P(n, 0, 2 * t, u))
                / (xf - u) * (1 + u) ** (2 * t))

    return mp.quad(integrand, [-1, 1])


def test_W_examples():
    for x in (mpf("1.5"), mpf(2), mpf(5)):
        assert W_kt(2, 1, x) == 0
        assert W_kt(3, 1, Fraction(5)) == Fraction(16, 3)
    with mp.workprec(160):
        got = W_kt(3, 0, mpf(2))
        want = w_defining_integral(3, 0, 2)
        assert abs(got - want) < mpf("1e-25")


def test_W_against_integral_grid():
    # exercises the degenerate negative-second-parameter Jacobi path
    with mp.workprec(160):
        for k, t in [(3, 1), (4, 1), (4, 2), (5, 2), (5, 3)]:
            got = W_kt(k, t, mpf(2))
            want = w_defining_integral(k, t, 2)
            assert abs(got - want) < mpf("1e-25"), (k, t)


def test_Q_examples():
    for x in (mpf("1.01"), mpf("1.5"), mpf(3), mpf(10)):
        want = mp.log((x + 1) / (x - 1))
        assert abs(Q_kt_closed(1, 0, x) - want) < mpf(2) ** -110
        want21 = mp.log((x + 1) / (x - 1)) - (2 * x + 4) / (x + 1) ** 2
        assert abs(Q_kt_closed(2, 1, x) - want21) < mpf(2) ** -110
    assert abs(Q_kt_closed(2, 1, 3) - (mp.log(2) - mpf(5) / 8)) < mpf(2) ** -110
    assert abs(Q_kt_closed(3, 1, 3) - (5 * mp.log(2) - mpf(83) / 24)) < mpf(2) ** -110
    assert abs(float(Q_kt_closed(2, 1, 3)) - 0.0681472) < 1e-6


def test_Q_domain():
    for bad in (mpf(1), mpf("0.5"), mpf(-3)):
        with pytest.raises(ValueError):
            Q_kt_closed(2, 1, bad)
        with pytest.raises(ValueError):
            Q_kt_oracle(2, 1, bad, "hypergeometric")
    with pytest.raises(ValueError):
        Q_kt_oracle(2, 1, mpf(2), "nosuchroute")


def test_Q_routes_hypergeometric():
    tol = mpf(2) ** -(mp.prec - 24)
    for k, t in KT_GRID:
        for x in X_GRID:
            a = Q_kt_closed(k, t, x)
            b = Q_kt_oracle(k, t, x, "hypergeometric")
            assert abs(a - b) <= tol * abs(a), (k, t, float(x))


def test_Q_routes_quadrature_spot():
    tol = mpf(2) ** -(mp.prec - 24)
    for k, t in [(2, 0), (2, 1), (3, 1), (3, 2), (4, 2), (5, 4)]:
        for x in (mpf("1.5"), mpf(10)):
            a = Q_kt_closed(k, t, x)
            b = Q_kt_oracle(k, t, x, "quadrature")
            assert abs(a - b) <= tol * abs(a), (k, t, float(x))


def test_Q_quadrature_convergence_error_diagnostics():
    with pytest.raises(ConvergenceError) as exc:
        Q_kt_oracle(3, 1, mpf("1.5"), "quadrature", rel_tol=mpf("1e-80"))
    diag = exc.value.diagnostics
    assert diag["route"] == "quadrature"
    assert {"k", "t", "x", "maxdegree", "error_estimate", "target"} <= set(diag)


def test_Q_ode_residual():
    tol = mpf(2) ** -(mp.prec - 24)
    for k, t in KT_GRID:
        for x in X_GRID:
            q0, q1, q2 = q_kt_derivs(k, t, x)
            res = (1 - x * x) * q2 + (2 * t - (2 * t + 2) * x) * q1 \
                + (k - t - 1) * (k + t) * q0
            assert abs(res) <= tol * max(abs(q0), mpf(1)), (k, t, float(x))


def test_Q_decay():
    for k, t in KT_GRID:
        vals = [abs(mpf(10) ** (j * (k + t)) * Q_kt_closed(k, t, mpf(10) ** j))
                for j in (1, 2, 3, 4)]
        assert max(vals) / min(vals) < 10, (k, t, [float(v) for v in vals])


def test_Q_edge_asymptote():
    # error behaves like c_kt * eps * log(1/eps); for (3,1) and (4,2) it
    # sits slightly above 1e-2 at eps = 1e-3 (1.45e-2, 2.10e-2)
    for k, t in [(2, 0), (2, 1), (3, 1), (3, 2), (4, 2)]:
        c = edge_digamma_sum(k, t)
        c = mpf(c.numerator) / c.denominator
        errs = []
        for eps in (mpf("1e-2"), mpf("1e-3"), mpf("1e-4")):
            q = Q_kt_closed(k, t, 1 + eps)
            errs.append(abs(q - mp.log((2 + eps) / eps) + c))
        assert errs[0] > errs[1] > errs[2], (k, t, [float(e) for e in errs])
        assert errs[2] <= mpf("3e-3"), (k, t, float(errs[2]))
        assert 6 < errs[1] / errs[2] < 12  # one decade of eps per step


def test_digamma():
    assert abs(digamma_int(2) - digamma_int(1) - 1) < mpf(2) ** -120
    assert abs(digamma_int(3) - digamma_int(1) - mpf(3) / 2) < mpf(2) ** -120
    assert abs(digamma_int(1) + euler_gamma()) < mpf(2) ** -120
    assert abs(digamma_int(4) - mp.digamma(4)) < mpf(2) ** -120
    assert edge_digamma_sum(2, 1) == Fraction(3, 2)
    assert edge_digamma_sum(3, 1) == Fraction(17, 6)
    with pytest.raises(ValueError):
        digamma_int(0)


def test_eta_examples():
    v = dedekind_eta4(mp.mpc(2j))
    assert abs(v.imag) < mpf(2) ** -120 and v.real > 0
    for z in (mp.mpc(0.3 + 0.9j), mp.mpc(-0.45 + 0.61j)):
        assert abs(abs(dedekind_eta4(z + 1)) - abs(dedekind_eta4(z))) < mpf(2) ** -110
    closed = (mp.gamma(mpf(1) / 4) / (2 * mp.pi ** (mpf(3) / 4))) ** 4
    assert abs(abs(dedekind_eta4(mp.mpc(1j))) - closed) < mpf("1e-25")
    with pytest.raises(ValueError):
        dedekind_eta4(mp.mpc(1 - 1j))


def test_eta_qp_oracle():
    # independent q-Pochhammer route
    for y in (mpf(1), mpf(2), mpf("0.7")):
        q = mp.exp(-2 * mp.pi * y)
        want = q ** (mp.mpf(1) / 6) * mpmath.qp(q) ** 4
        got = dedekind_eta4(mp.mpc(0, y))
        assert abs(got - want) < mpf(2) ** -110 * abs(want)


def test_harmonicity_example():
    r = harmonicity_residual(3, 1, "-", mp.mpc(1j), mp.mpc(1 + 2j), mpf("1e-4"))
    assert r <= mpf("1e-6")
    r = harmonicity_residual(3, 1, "+", mp.mpc(1j), mp.mpc(1 + 2j), mpf("1e-4"))
    assert r <= mpf("1e-6")


def test_harmonicity_random_pairs():
    rng = random.Random(20240817)
    for k, t in [(2, 1), (3, 1), (3, 2), (4, 2)]:
        for _ in range(3):
            z = mp.mpc(rng.uniform(-1, 1), rng.uniform(0.7, 1.6))
            zp = mp.mpc(rng.uniform(-1, 1) + 2.2, rng.uniform(0.7, 1.6))
            for sign in "+-":
                r = harmonicity_residual(k, t, sign, z, zp, mpf("1e-4"))
                assert r <= mpf("1e-6"), (k, t, sign, complex(z), complex(zp), float(r))


def test_harmonicity_rate_and_t0():
    r1 = harmonicity_residual(3, 1, "-", mp.mpc(1j), mp.mpc(1 + 2j), mpf("2e-2"))
    r2 = harmonicity_residual(3, 1, "-", mp.mpc(1j), mp.mpc(1 + 2j), mpf("1e-2"))
    assert r1 / r2 >= 3.5  # at least quadratic decay
    # t = 0: both signs give the same operator
    a = harmonicity_residual(3, 0, "+", mp.mpc(1j), mp.mpc(1 + 2j), mpf("1e-4"))
    b = harmonicity_residual(3, 0, "-", mp.mpc(1j), mp.mpc(1 + 2j), mpf("1e-4"))
    assert a == b and a <= mpf("1e-6")
    with pytest.raises(ValueError):
        harmonicity_residual(3, 1, "x", mp.mpc(1j), mp.mpc(2j), mpf("1e-4"))


def test_harmonicity_step_warning():
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        harmonicity_residual(2, 1, "+", mp.mpc(1j), mp.mpc(1.001j + 0.0005), mpf("1e-3"))
    assert any("step" in str(w.message) for w in caught)
