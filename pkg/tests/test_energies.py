import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import nls_transport as nt
from nls_transport.energies import EnergyParams

from conftest import random_coeffs
from oracles import q_derivative_oracle, q_oracle, r_oracle


def params(n_cut, fam):
    return EnergyParams(n_cut=n_cut, family=fam)


class TestRCorrection:
    def test_single_mode_vanishes(self, fam_eq):
        u = nt.FourierState.from_modes(3, {2: 0.7 - 0.4j})
        assert nt.r_correction(u, params(3, fam_eq)) == 0.0

    def test_low_pair_support_vanishes(self, fam_eq):
        # on {0,1} the constraint forces every tuple resonant
        u = nt.FourierState.from_modes(2, {0: 0.3 + 1j, 1: 0.7})
        assert nt.r_correction(u, params(2, fam_eq)) == 0.0

    def test_pinned_three_mode_value(self, fam_eq):
        # oracle: exhaustive 6-loop scan of {-1,0,1}^6 summing psi_4/Omega;
        # every non-resonant tuple contributes 1, and there are 48 of them
        u = nt.FourierState.from_modes(1, {-1: 1.0, 0: 1.0, 1: 1.0})
        assert nt.r_correction(u, params(1, fam_eq)) == pytest.approx(8.0, rel=1e-14)

    def test_pinned_complex_value(self, fam_eq):
        u = nt.FourierState.from_modes(
            1, {-1: 0.4 - 0.3j, 0: 0.8 + 0.1j, 1: -0.2 + 0.6j})
        assert nt.r_correction(u, params(1, fam_eq)) == pytest.approx(
            0.36074999999999996, rel=1e-13)

    def test_truncation_error(self, fam_eq):
        u = nt.FourierState.zero(2)
        with pytest.raises(nt.TruncationExceedsAmbient):
            nt.r_correction(u, params(3, fam_eq))

    @pytest.mark.parametrize("n_cut,m_amb", [(1, 2), (2, 3), (3, 3)])
    def test_matches_loop_oracle(self, n_cut, m_amb, fam_jb, rng):
        for _ in range(4):
            u = nt.FourierState(m_amb, random_coeffs(rng, m_amb))
            expect, _ = r_oracle(u.coeffs, m_amb, n_cut, fam_jb)
            for method in ("enumerate", "grouped"):
                got = nt.r_correction(u, params(n_cut, fam_jb), method=method)
                assert got == pytest.approx(expect, rel=1e-12, abs=1e-13)

    def test_paths_agree_at_larger_cut(self, fam_jb, rng):
        u = nt.FourierState(8, random_coeffs(rng, 8))
        a = nt.r_correction(u, params(8, fam_jb), method="enumerate")
        b = nt.r_correction(u, params(8, fam_jb), method="grouped")
        assert b == pytest.approx(a, rel=1e-11)

    def test_ambient_sentinel(self, fam_jb, rng):
        u = nt.FourierState(4, random_coeffs(rng, 4))
        full = nt.r_correction(u, EnergyParams(n_cut=None, family=fam_jb))
        explicit = nt.r_correction(u, params(4, fam_jb))
        assert full == explicit


class TestModifiedEnergy:
    def test_zero(self, fam_eq):
        assert nt.e_modified(nt.FourierState.zero(2), params(2, fam_eq)) == 0.0

    def test_single_mode(self, fam_eq):
        c = 0.6 + 0.8j
        u = nt.FourierState.from_modes(3, {2: c})
        expect = 0.5 * (1.0 + 2.0**4) * abs(c) ** 2
        assert nt.e_modified(u, params(3, fam_eq)) == pytest.approx(expect, rel=1e-14)

    def test_decomposition(self, fam_jb, rng):
        # E is defined as the sum of the two parts; recovering R is exact
        # up to one rounding of the final addition
        u = nt.FourierState(3, random_coeffs(rng, 3))
        p = params(2, fam_jb)
        w = nt.project_low(u, 2)
        norm_part = 0.5 * nt.sobolev_norm_sq(w, fam_jb)
        assert nt.e_modified(u, p) - norm_part == pytest.approx(
            nt.r_correction(u, p), rel=1e-12, abs=1e-14)


class TestQComponents:
    def test_single_mode_zero(self, fam_eq):
        u = nt.FourierState.from_modes(3, {1: 1.2 - 0.1j})
        q = nt.q_components(u, params(3, fam_eq), nt.default_grid(3))
        assert q == (0, 0, 0)

    def test_low_pair_support_q_derivative_zero(self, fam_eq):
        # on {0,1} the resonant sum is empty and the two non-resonant sums
        # are complex conjugates (the quintic slot reaches outside the
        # support, so they do not vanish individually), leaving Q = 0
        u = nt.FourierState.from_modes(2, {0: 0.5, 1: 0.9j})
        q0, q1, q2 = nt.q_components(u, params(2, fam_eq), nt.default_grid(2))
        assert q0 == 0.0
        assert q2 == pytest.approx(np.conj(q1), rel=1e-13)
        assert nt.q_derivative(u, params(2, fam_eq), nt.default_grid(2)) == \
            pytest.approx(0.0, abs=1e-13)

    def test_pinned_three_mode_value(self, fam_eq):
        # oracle: direct sums over {-1,0,1}^9 free indices
        u = nt.FourierState.from_modes(1, {-1: 1.0, 0: 1.0, 1: 1.0})
        q0, q1, q2 = nt.q_components(u, params(1, fam_eq), nt.default_grid(1))
        assert q0 == 0.0
        assert q1 == pytest.approx(2280.0, rel=1e-12)
        assert q2 == pytest.approx(2280.0, rel=1e-12)

    def test_pinned_complex_value(self, fam_eq):
        u = nt.FourierState.from_modes(
            1, {-1: 0.4 - 0.3j, 0: 0.8 + 0.1j, 1: -0.2 + 0.6j})
        q0, q1, q2 = nt.q_components(u, params(1, fam_eq), nt.default_grid(1))
        assert q0 == 0.0
        assert q1 == pytest.approx(19.559083862500003 + 1.450605j, rel=1e-12)
        assert q2 == pytest.approx(19.559083862500003 - 1.450605j, rel=1e-12)

    @pytest.mark.parametrize("n_cut,m_amb", [(1, 2), (2, 2), (3, 4)])
    def test_matches_direct_sum_oracle(self, n_cut, m_amb, fam_jb, rng):
        u = nt.FourierState(m_amb, random_coeffs(rng, m_amb))
        e0, e1, e2 = q_oracle(u.coeffs, m_amb, n_cut, fam_jb)
        for method in ("enumerate", "grouped"):
            g0, g1, g2 = nt.q_components(u, params(n_cut, fam_jb),
                                         nt.default_grid(n_cut), method=method)
            scale = max(1.0, abs(e1))
            assert abs(g0 - e0) <= 1e-12 * max(1.0, abs(e0))
            assert abs(g1 - e1) <= 1e-12 * scale
            assert abs(g2 - e2) <= 1e-12 * scale
        qd = nt.q_derivative(u, params(n_cut, fam_jb), nt.default_grid(n_cut))
        assert qd == pytest.approx(
            q_derivative_oracle(u.coeffs, m_amb, n_cut, fam_jb),
            rel=1e-11, abs=1e-12)

    def test_grid_too_small(self, fam_jb):
        u = nt.FourierState.zero(4)
        with pytest.raises(nt.GridTooSmall):
            nt.q_components(u, params(4, fam_jb), nt.GridSpec(16))


class TestInvariances:
    @given(st.integers(0, 200), st.floats(0, 2 * np.pi, allow_nan=False),
           st.floats(0, 2 * np.pi, allow_nan=False))
    @settings(max_examples=25, deadline=None)
    def test_gauge_invariance(self, seed, theta, alpha):
        rng = np.random.default_rng(seed)
        fam = nt.WeightFamily(nt.WeightKind.JAPANESE_BRACKET, 2.0)
        u = nt.FourierState(3, random_coeffs(rng, 3))
        ks = u.wavenumbers()
        rotated = nt.FourierState(3, np.exp(1j * theta) * u.coeffs)
        translated = nt.FourierState(3, np.exp(1j * ks * alpha) * u.coeffs)
        p = params(3, fam)
        grid = nt.default_grid(3)
        base_r = nt.r_correction(u, p)
        base_q = nt.q_derivative(u, p, grid)
        for v in (rotated, translated):
            assert nt.r_correction(v, p) == pytest.approx(
                base_r, rel=1e-10, abs=1e-12)
            assert nt.q_derivative(v, p, grid) == pytest.approx(
                base_q, rel=1e-9, abs=1e-11)

    def test_outputs_are_real_floats(self, fam_jb, rng):
        u = nt.FourierState(2, random_coeffs(rng, 2))
        assert isinstance(nt.r_correction(u, params(2, fam_jb)), float)
        assert isinstance(
            nt.q_derivative(u, params(2, fam_jb), nt.default_grid(2)), float)


class TestNormalFormIdentity:
    def test_de_dt_equals_q(self, fam_eq, rng):
        """Five-point central difference of E along the flow vs Q."""
        n_cut = 4
        u = nt.FourierState(n_cut, random_coeffs(rng, n_cut, scale=0.3))
        p = params(n_cut, fam_eq)
        flow = nt.FlowParams(n_cut=n_cut, step=1e-4)
        delta = 1e-4
        for tau in (0.1, 0.35):
            base = nt.evolve(u, tau, flow)
            es = {m: nt.e_modified(nt.evolve(base, m * delta, flow), p)
                  for m in (-2, -1, 1, 2)}
            fd = (es[-2] - 8 * es[-1] + 8 * es[1] - es[2]) / (12 * delta)
            q = nt.q_derivative(base, p, flow.grid)
            assert fd == pytest.approx(q, rel=2e-7)

    def test_two_point_difference_converges(self, fam_eq, rng):
        # the plain central difference approaches Q at second order
        n_cut = 3
        u = nt.FourierState(n_cut, random_coeffs(rng, n_cut, scale=0.3))
        p = params(n_cut, fam_eq)
        flow = nt.FlowParams(n_cut=n_cut, step=5e-5)
        q = nt.q_derivative(u, p, flow.grid)
        errs = []
        for delta in (2e-3, 1e-3, 5e-4):
            fd = (nt.e_modified(nt.evolve(u, delta, flow), p)
                  - nt.e_modified(nt.evolve(u, -delta, flow), p)) / (2 * delta)
            errs.append(abs(fd - q))
        assert errs[2] < errs[0]
        assert errs[0] / max(errs[1], 1e-16) == pytest.approx(4.0, rel=0.35)
