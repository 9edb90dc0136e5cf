"""Green's kernel lattice sums: enumeration completeness, shell
identities, diagonal regularization, and the height identity residual."""

import pytest
from mpmath import mp

from artifact.arithsums import make_context, sigma_A
from artifact.core import Params
from artifact.green import (
    G_m_weighted, GreenConfig, LatticeMatrix, enumerate_RNm, g_kt, gamma_m,
    identity_residual, rho_class_sum, rho_class_sum_closed, rho_diagonal,
    _alpha_exact,
)
from artifact.heckechar import build_chi, r_chi
from artifact.quadfield import class_group, heegner_point
from artifact.special import Q_kt_closed, dedekind_eta4


def principal_point(D=-11, N=3, beta=1):
    G = class_group(D)
    return heegner_point(D, N, beta, G.identity)


class TestLatticeMatrix:
    def test_sign_normalization(self):
        mt = LatticeMatrix(-1, 0, 0, -1)
        assert mt.entries == (1, 0, 0, 1)
        mt = LatticeMatrix(0, -1, 1, 0)
        assert mt.entries == (0, 1, -1, 0)

    def test_det_and_level_checks(self):
        with pytest.raises(ValueError, match="det"):
            LatticeMatrix(1, 0, 0, -1)
        with pytest.raises(ValueError, match=r"3 \| c"):
            LatticeMatrix(1, 0, 2, 1, level=3)
        assert LatticeMatrix(1, 0, 3, 1, level=3).det == 1

    def test_apply(self):
        mt = LatticeMatrix(2, 1, 1, 1)
        z = mp.mpc(0, 1)
        assert abs(mt.apply(z) - (2j + 1) / (1j + 1)) < mp.mpf(2) ** -50


class TestKernel:
    def test_plug_in_example(self):
        # |i - 2i|^2 / (2*1*2) = 1/4
        got = g_kt(2, 1, mp.mpc(0, 1), mp.mpc(0, 2))
        want = -Q_kt_closed(2, 1, mp.mpf(5) / 4)
        assert abs(got - want) < mp.mpf(2) ** -100

    def test_swap_symmetry(self):
        z, zp = mp.mpc("0.3", "1.2"), mp.mpc("-0.7", "0.4")
        assert abs(g_kt(3, 1, z, zp) - g_kt(3, 1, zp, z)) < mp.mpf(2) ** -100

    def test_modular_invariance(self):
        z, zp = mp.mpc("0.21", "0.9"), mp.mpc("-0.45", "1.7")
        base = g_kt(3, 2, z, zp)
        for a, b, c, d in [(1, 1, 0, 1), (0, -1, 1, 0), (2, 1, 1, 1)]:
            gz = (a * z + b) / (c * z + d)
            gzp = (a * zp + b) / (c * zp + d)
            assert abs(g_kt(3, 2, gz, gzp) - base) < mp.mpf(2) ** -90

    def test_singularities_rejected(self):
        z = mp.mpc(0, 1)
        with pytest.raises(ValueError, match="coincident"):
            g_kt(2, 1, z, z)
        with pytest.raises(ValueError, match="upper half-plane"):
            g_kt(2, 1, z, mp.mpc(0, -1))


class TestEnumeration:
    def test_validation(self):
        hp = principal_point()
        with pytest.raises(ValueError, match="coprime"):
            list(enumerate_RNm(3, 3, hp, hp, 5))
        with pytest.raises(ValueError, match="m >= 1"):
            list(enumerate_RNm(0, 3, hp, hp, 5))
        with pytest.raises(ValueError, match="n_max"):
            list(enumerate_RNm(1, 3, hp, hp, 0))

    def test_diagonal_counts(self):
        hp = principal_point()
        # m = 1: the identity coset only
        shells = dict(enumerate_RNm(1, 3, hp, hp, 3))
        assert len(shells[0]) == 1
        assert shells[0][0].entries == (1, 0, 0, 1)
        # m = 2 is inert-free of principal ideals: no diagonal
        shells = dict(enumerate_RNm(2, 3, hp, hp, 3))
        assert 0 not in shells
        # m = 5 splits with both primes principal: u * r(5) = 2
        shells = dict(enumerate_RNm(5, 3, hp, hp, 3))
        assert len(shells[0]) == 2

    def test_shells_ascend_and_dedupe(self):
        hp = principal_point()
        seen = []
        allm = set()
        for n, mats in enumerate_RNm(2, 3, hp, hp, 20):
            seen.append(n)
            for mt in mats:
                assert mt.det == 2 and mt.c % 3 == 0
                assert mt.entries not in allm
                allm.add(mt.entries)
        assert seen == sorted(seen)

    def test_completeness_against_box_scan(self):
        # independent brute force over a box that provably covers
        # every matrix reaching shell <= 12
        D, N, m, n_max = -11, 3, 2, 12
        hp = principal_point(D, N)
        A, B = hp.A, hp.B
        found = {}
        R = 15
        for c in range(-R, R + 1, 3):
            for d in range(-R, R + 1):
                for a in range(-R, R + 1):
                    num = a * d - m
                    if c == 0:
                        if num != 0:
                            continue
                        bs = range(-R, R + 1)
                    else:
                        if num % c:
                            continue
                        bs = [num // c]
                    for b in bs:
                        if a * d - b * c != m:
                            continue
                        P = c * (B * B + D) - 2 * A * d * B + 2 * A * a * B \
                            - 4 * A * A * b
                        Q = -2 * c * B + 2 * A * d - 2 * A * a
                        n = (P * P - D * Q * Q) // (16 * A * A * N)
                        if n > n_max:
                            continue
                        key = LatticeMatrix(a, b, c, d, N).entries
                        found.setdefault(n, set()).add(key)
        got = {n: {mt.entries for mt in mats}
               for n, mats in enumerate_RNm(m, N, hp, hp, n_max)}
        assert got == found

    def test_alpha_norm_tracks_shell(self):
        from fractions import Fraction
        hp = principal_point()
        for n, mats in enumerate_RNm(2, 3, hp, hp, 15):
            for mt in mats:
                al = _alpha_exact(mt, hp, hp)
                assert al.x ** 2 + 11 * al.y ** 2 == Fraction(22 + 3 * n, 9)


class TestShellIdentity:
    def test_exact_bijection_weights(self):
        # chi(a) * sum of alpha^2 over shell n equals
        # u^2 sigma_{conj}(n) r_chi(m|D| + nN): exact field arithmetic
        D, N, m = -11, 3, 2
        chi = build_chi(D, 1)
        G = class_group(D)
        hp = principal_point(D, N)
        wt = chi.on_ideal(hp.ideal().conjugate() * hp.ideal())
        ctx = make_context(D, N, 1, G.identity)
        for n, mats in enumerate_RNm(m, N, hp, hp, 30):
            if n == 0:
                continue
            tot = _alpha_exact(mats[0], hp, hp) ** 2
            for mt in mats[1:]:
                tot = tot + _alpha_exact(mt, hp, hp) ** 2
            lhs = wt * tot
            rhs = sigma_A(ctx, n) * r_chi(chi, G.identity, m * 11 + n * N)
            assert lhs == rhs

    def test_exact_diagonal_weights(self):
        # chi(a) * sum of alpha^2 over the diagonal equals u D^t r_chi(m)
        D, N, m = -11, 3, 5
        chi = build_chi(D, 1)
        G = class_group(D)
        hp = principal_point(D, N)
        wt = chi.on_ideal(hp.ideal().conjugate() * hp.ideal())
        shells = dict(enumerate_RNm(m, N, hp, hp, 2))
        tot = _alpha_exact(shells[0][0], hp, hp) ** 2
        for mt in shells[0][1:]:
            tot = tot + _alpha_exact(mt, hp, hp) ** 2
        assert wt * tot == -11 * r_chi(chi, G.identity, m)


class TestRho:
    def test_psi_part(self):
        z = mp.mpc("0.1", "1.3")
        got = rho_diagonal(3, 1, z) + mp.log(4 * z.imag ** 2) \
            + 2 * mp.log(2 * mp.pi * abs(dedekind_eta4(z)))
        assert abs(got - mp.mpf(17) / 6) < mp.mpf(2) ** -100

    def test_limit_consistency(self):
        z = mp.mpc("0.2", "0.8")
        rho = rho_diagonal(3, 1, z)
        errs = []
        for eps in ("1e-2", "1e-3", "1e-4"):
            e = mp.mpf(eps)
            w = z + e
            val = g_kt(3, 1, z, w) - 2 * mp.log(
                2 * mp.pi * abs(dedekind_eta4(z)) * e)
            errs.append(abs(val - rho))
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < mp.mpf("1e-3")

    def test_class_sum_identity(self):
        for D in (-11, -23, -15):
            lhs = rho_class_sum(3, 1, D)
            rhs = rho_class_sum_closed(3, 1, D)
            assert abs(lhs - rhs) < mp.mpf("1e-30")

    def test_lower_half_plane_rejected(self):
        with pytest.raises(ValueError, match="upper half-plane"):
            rho_diagonal(3, 1, mp.mpc(0, -2))


class TestWeightedSum:
    def test_real_for_symmetric_pair(self):
        cfg = GreenConfig(Params(3, 1, 3, -11), n_max=60)
        hp = principal_point()
        out = G_m_weighted(cfg, 2, hp, hp)
        assert abs(out.value.imag) < mp.mpf(2) ** -90 * max(1, abs(out.value))

    def test_truncation_monotone(self):
        hp = principal_point()
        small = G_m_weighted(GreenConfig(Params(3, 1, 3, -11), n_max=100),
                             2, hp, hp)
        big = G_m_weighted(GreenConfig(Params(3, 1, 3, -11), n_max=400),
                           2, hp, hp)
        assert abs(small.value - big.value) <= small.tail
        assert big.tail < small.tail

    def test_tail_budget(self):
        from artifact.fourier import TailBudgetError
        cfg = GreenConfig(Params(3, 1, 3, -11), n_max=50,
                          tail_target=mp.mpf("1e-40"))
        with pytest.raises(TailBudgetError):
            G_m_weighted(cfg, 2, principal_point(), principal_point())

    def test_config_validation(self):
        with pytest.raises(ValueError, match="n_max"):
            GreenConfig(Params(3, 1, 3, -11), n_max=0)
        with pytest.raises(ValueError, match="policy"):
            GreenConfig(Params(3, 1, 3, -11), n_max=5, diagonal="drop")
        with pytest.raises(ValueError, match="orientation"):
            GreenConfig(Params(3, 1, 3, -11), n_max=5, beta=2)
        assert GreenConfig(Params(3, 1, 3, -11), n_max=5).beta == 1


class TestGammaAndResidual:
    def test_single_pair_matches_weighted_sum(self):
        cfg = GreenConfig(Params(3, 1, 3, -11), n_max=80)
        chi = build_chi(-11, 1)
        G = class_group(-11)
        hp = principal_point()
        whole = gamma_m(cfg, chi, 2, G.identity)
        wt = chi.on_ideal(hp.ideal().conjugate() * hp.ideal())
        part = G_m_weighted(cfg, 2, hp, hp)
        diff = abs(whole.value - wt.to_mpc() * part.value)
        assert diff < mp.mpf(2) ** -120 * max(1, abs(whole.value))

    def test_no_rho_when_r_vanishes(self):
        cfg_ex = GreenConfig(Params(3, 1, 3, -11), n_max=40)
        cfg_rg = GreenConfig(Params(3, 1, 3, -11), n_max=40,
                             diagonal="regularize")
        chi = build_chi(-11, 1)
        G = class_group(-11)
        a = gamma_m(cfg_ex, chi, 2, G.identity)
        b = gamma_m(cfg_rg, chi, 2, G.identity)
        assert a.value == b.value

    def test_identity_residual_offdiagonal(self):
        cfg = GreenConfig(Params(3, 1, 3, -11), n_max=300)
        chi = build_chi(-11, 1)
        G = class_group(-11)
        res = identity_residual(cfg, chi, 2, G.identity)
        assert res < mp.mpf("1e-25")

    def test_identity_residual_diagonal(self):
        cfg = GreenConfig(Params(3, 1, 3, -11), n_max=200,
                          diagonal="regularize")
        chi = build_chi(-11, 1)
        G = class_group(-11)
        for m in (1, 5):
            res = identity_residual(cfg, chi, m, G.identity)
            assert res < mp.mpf("1e-25")

    def test_identity_residual_class_number_three(self):
        # h = 3 wiring: all three ordered class pairs and a nontrivial branch
        G = class_group(-23)
        cfg = GreenConfig(Params(3, 1, 3, -23), n_max=40)
        for branch in (0, 1):
            chi = build_chi(-23, 1, branch)
            res = identity_residual(cfg, chi, 2, G.identity)
            assert res < mp.mpf("1e-20")

    def test_mismatched_character_rejected(self):
        cfg = GreenConfig(Params(3, 1, 3, -11), n_max=5)
        G = class_group(-11)
        with pytest.raises(ValueError, match="match"):
            gamma_m(cfg, build_chi(-23, 1), 1, G.identity)
