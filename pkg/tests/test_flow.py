import numpy as np
import pytest

import nls_transport as nt
from nls_transport.flow import (evolve_batch, picard_iterates,
                                picard_local_time)
from nls_transport.spectral import quintic_batch, wavenumbers

from conftest import mu_like_coeffs, random_coeffs


def plane_wave(m_ambient, k, c):
    return nt.FourierState.from_modes(m_ambient, {k: c})


def rk4_ungauged(u0, t, n_cut, h, n_points):
    """Independent second code path: plain RK4 on the untwisted equation
    du/dt = i u_xx - i Pi_N(|Pi_N u|^4 Pi_N u)."""
    ks = wavenumbers(u0.m_ambient).astype(float)
    low = np.abs(ks) <= n_cut
    c = u0.coeffs.copy()

    def f(c):
        nl = quintic_batch(c[None, :], u0.m_ambient, n_cut, n_points)[0]
        return -1j * (ks**2 * c * low + nl)

    n = int(round(abs(t) / h))
    dt = t / n
    high = ~low
    for _ in range(n):
        k1 = f(c); k2 = f(c + dt / 2 * k1)
        k3 = f(c + dt / 2 * k2); k4 = f(c + dt * k3)
        cl = c + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        c = np.where(low, cl, c)
    c[high] = np.exp(-1j * ks[high] ** 2 * t) * u0.coeffs[high]
    return nt.FourierState(u0.m_ambient, c)


class TestEvolve:
    def test_plane_wave_closed_form(self):
        p = nt.FlowParams(n_cut=4, step=1e-3)
        c, k, t = 0.5, 1, 1.0
        got = nt.evolve(plane_wave(4, k, c), t, p)
        expect = c * np.exp(-1j * (k**2 + abs(c) ** 4) * t)
        assert abs(got.coeff(k) - expect) <= 1e-12

    def test_high_frequency_free_rotation(self):
        p = nt.FlowParams(n_cut=2, step=1e-3)
        u0 = nt.FourierState.from_modes(6, {4: 0.3 + 0.4j, -5: 1.0})
        got = nt.evolve(u0, 0.7, p)
        ks = u0.wavenumbers().astype(float)
        expect = np.exp(-1j * ks**2 * 0.7) * u0.coeffs
        assert np.max(np.abs(got.coeffs - expect)) <= 1e-14

    def test_zero_state(self):
        p = nt.FlowParams(n_cut=3, step=1e-3)
        got = nt.evolve(nt.FourierState.zero(3), 0.5, p)
        assert np.all(got.coeffs == 0)

    def test_time_zero_identity(self, rng):
        p = nt.FlowParams(n_cut=3, step=1e-3)
        u = nt.FourierState(3, random_coeffs(rng, 3))
        got = nt.evolve(u, 0.0, p)
        assert np.array_equal(got.coeffs, u.coeffs)

    def test_reversibility(self, rng):
        u = nt.FourierState(8, mu_like_coeffs(rng, 8))
        p = nt.FlowParams(n_cut=8, step=1e-3)
        back = nt.evolve(nt.evolve(u, 1.0, p), -1.0, p)
        err = np.sqrt(nt.sobolev_norm_sq_sigma(
            nt.FourierState(8, back.coeffs - u.coeffs), 1.0))
        assert err <= 1e-7

    def test_gauge_consistency_two_paths(self, rng):
        u = nt.FourierState(4, mu_like_coeffs(rng, 4))
        p = nt.FlowParams(n_cut=4, step=1e-4)
        a = nt.evolve(u, 0.3, p)
        b = rk4_ungauged(u, 0.3, 4, 1e-4, p.grid.n_points)
        assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-10

    def test_non_finite_detected(self):
        p = nt.FlowParams(n_cut=1, step=0.1)
        u = nt.FourierState.from_modes(1, {0: 1e80})
        with np.errstate(over="ignore", invalid="ignore"):
            with pytest.raises(nt.NonFiniteState):
                nt.evolve(u, 1.0, p)

    def test_batch_matches_single(self, rng):
        p = nt.FlowParams(n_cut=3, step=1e-3)
        block = np.stack([random_coeffs(rng, 5, scale=0.3) for _ in range(4)])
        batch = evolve_batch(block, 5, 0.2, p)
        for i in range(4):
            single = nt.evolve(nt.FourierState(5, block[i]), 0.2, p)
            assert np.array_equal(batch[i], single.coeffs)


class TestTrajectory:
    def test_zero_window(self, rng):
        u = nt.FourierState(2, random_coeffs(rng, 2))
        p = nt.FlowParams(n_cut=2, step=1e-3)
        traj = nt.evolve_trajectory(u, 0.0, p, 5)
        assert len(traj.states) == 1 and traj.times[0] == 0.0

    def test_snapshot_count_and_endpoints(self, rng):
        u = nt.FourierState(3, random_coeffs(rng, 3, scale=0.3))
        p = nt.FlowParams(n_cut=3, step=1e-3)
        traj = nt.evolve_trajectory(u, 0.5, p, 6)
        assert len(traj.states) == 6
        assert traj.times[0] == 0.0 and traj.times[-1] == 0.5
        assert np.array_equal(traj.states[0].coeffs, u.coeffs)
        direct = nt.evolve(u, 0.5, p)
        assert np.max(np.abs(traj.states[-1].coeffs - direct.coeffs)) <= 1e-9

    def test_plane_wave_phases(self):
        p = nt.FlowParams(n_cut=2, step=1e-3)
        c, k = 0.8, 2
        traj = nt.evolve_trajectory(plane_wave(2, k, c), 1.0, p, 5)
        for time, state in zip(traj.times, traj.states):
            expect = c * np.exp(-1j * (k**2 + abs(c) ** 4) * time)
            assert abs(state.coeff(k) - expect) <= 1e-10

    def test_backward_times(self, rng):
        u = nt.FourierState(2, random_coeffs(rng, 2, scale=0.3))
        p = nt.FlowParams(n_cut=2, step=1e-3)
        traj = nt.evolve_trajectory(u, -0.4, p, 5)
        assert np.all(np.diff(traj.times) < 0)


class TestPicard:
    def test_high_frequency_fixed_point(self):
        u0 = nt.FourierState.from_modes(6, {5: 0.3 + 0.1j, -6: 0.2})
        p = nt.FlowParams(n_cut=2, step=1e-3)
        got = nt.picard_solve(u0, 5e-4, p, 1)
        ks = u0.wavenumbers().astype(float)
        expect = np.exp(-1j * ks**2 * 5e-4) * u0.coeffs
        assert np.max(np.abs(got.coeffs - expect)) == 0.0

    def test_plane_wave_convergence(self):
        u0 = plane_wave(4, 1, 0.5)
        p = nt.FlowParams(n_cut=4, step=1e-3)
        got = nt.picard_solve(u0, 0.01, p, 6)
        expect = 0.5 * np.exp(-1j * (1 + 0.5**4) * 0.01)
        assert abs(got.coeff(1) - expect) <= 1e-8

    def test_contraction_ratio(self, rng):
        u0 = nt.FourierState(3, random_coeffs(rng, 3, scale=0.4))
        p = nt.FlowParams(n_cut=3, step=1e-3)
        t = 0.9 * picard_local_time(u0)
        iters = picard_iterates(u0, t, p, 5)
        dists = [np.linalg.norm(a.coeffs - b.coeffs)
                 for a, b in zip(iters, iters[1:])]
        ratios = [b / a for a, b in zip(dists, dists[1:]) if a > 1e-16]
        assert all(r <= 2.0 / 3.0 for r in ratios)

    def test_window_enforced(self):
        u0 = plane_wave(2, 1, 2.0)
        p = nt.FlowParams(n_cut=2, step=1e-3)
        with pytest.raises(nt.ContractionRadiusExceeded):
            nt.picard_solve(u0, 1.0, p, 3)

    def test_agrees_with_evolve(self, rng):
        u0 = nt.FourierState(3, random_coeffs(rng, 3, scale=0.25))
        p = nt.FlowParams(n_cut=3, step=1e-5)
        t = 0.8 * picard_local_time(u0)
        a = nt.picard_solve(u0, t, p, 10, n_quad=128)
        b = nt.evolve(u0, t, p)
        assert np.max(np.abs(a.coeffs - b.coeffs)) <= 1e-9


class TestLiouville:
    def test_divergence_zero_state(self):
        p = nt.FlowParams(n_cut=2, step=1e-3)
        assert nt.divergence_at(nt.FourierState.zero(2), p) == \
            pytest.approx(0.0, abs=1e-12)

    def test_divergence_small(self, rng):
        for n_cut in (1, 2, 3):
            p = nt.FlowParams(n_cut=n_cut, step=1e-3)
            u = nt.FourierState(n_cut, random_coeffs(rng, n_cut, scale=0.4))
            assert abs(nt.divergence_at(u, p)) <= 1e-6

    def test_requires_pure_state(self, rng):
        p = nt.FlowParams(n_cut=2, step=1e-3)
        u = nt.FourierState(4, random_coeffs(rng, 4))
        with pytest.raises(ValueError):
            nt.divergence_at(u, p)

    def test_det_at_time_zero(self, rng):
        p = nt.FlowParams(n_cut=2, step=1e-3)
        u = nt.FourierState(2, random_coeffs(rng, 2))
        assert nt.jacobian_det(u, 0.0, p) == 1.0

    def test_det_near_one(self, rng):
        c = random_coeffs(rng, 2)
        u = nt.FourierState(2, c / max(1.0, np.sqrt(
            nt.sobolev_norm_sq_sigma(nt.FourierState(2, c), 1.0))))
        p = nt.FlowParams(n_cut=2, step=1e-3)
        assert abs(nt.jacobian_det(u, 0.5, p) - 1.0) <= 1e-6

    def test_det_composition(self, rng):
        c = random_coeffs(rng, 1, scale=0.4)
        u = nt.FourierState(1, c)
        p = nt.FlowParams(n_cut=1, step=1e-3)
        whole = nt.jacobian_det(u, 0.4, p)
        first = nt.jacobian_det(u, 0.25, p)
        mid = nt.evolve(u, 0.25, p)
        second = nt.jacobian_det(mid, 0.15, p)
        assert whole == pytest.approx(first * second, abs=1e-8)


class TestGrowthMonitor:
    def test_plane_wave_mass_constant(self):
        p = nt.FlowParams(n_cut=2, step=1e-3)
        traj = nt.evolve_trajectory(plane_wave(2, 1, 0.7), 1.0, p, 9)
        report = nt.growth_monitor(traj, sigma=1.0)
        assert report.mass_drift <= 1e-12

    def test_drift_small_and_fourth_order(self, rng):
        u = nt.FourierState(8, mu_like_coeffs(rng, 8))
        drifts = []
        for h in (2e-3, 1e-3):
            p = nt.FlowParams(n_cut=8, step=h)
            traj = nt.evolve_trajectory(u, 1.0, p, 9)
            report = nt.growth_monitor(traj, sigma=1.0, c_tol=1e-6,
                                       mass_tol=1e-6)
            drifts.append(report.c_drift)
        assert drifts[1] <= 1e-8
        assert drifts[0] / drifts[1] == pytest.approx(16.0, rel=0.5)

    def test_violation_raises(self, rng):
        u = nt.FourierState(4, random_coeffs(rng, 4, scale=0.4))
        p = nt.FlowParams(n_cut=4, step=1e-3)
        traj = nt.evolve_trajectory(u, 0.5, p, 7)
        with pytest.raises(nt.BoundViolated):
            nt.growth_monitor(traj, sigma=1.0, c_tol=1e-18)


class TestFactorization:
    def test_random_states(self, rng):
        p = nt.FlowParams(n_cut=3, step=1e-3)
        for _ in range(3):
            u = nt.FourierState(6, random_coeffs(rng, 6, scale=0.3))
            assert nt.check_factorization(u, 0.4, p) <= 1e-12

    def test_time_zero(self, rng):
        p = nt.FlowParams(n_cut=3, step=1e-3)
        u = nt.FourierState(5, random_coeffs(rng, 5))
        assert nt.check_factorization(u, 0.0, p) == 0.0

    def test_high_frequency_only(self):
        p = nt.FlowParams(n_cut=2, step=1e-3)
        u = nt.FourierState.from_modes(5, {4: 1.0, -3: 2.0})
        assert nt.check_factorization(u, 0.6, p) == 0.0


class TestApproximationProperty:
    def test_gap_shrinks_with_cut(self, rng):
        """Distance to the reference truncation decreases as the
        truncation grows through 4, 8, 16."""
        u = nt.FourierState(64, random_coeffs(rng, 64, scale=0.05))
        ref = nt.evolve(u, 0.25, nt.FlowParams(n_cut=64, step=1e-3,
                                               grid=nt.GridSpec(512)))
        gaps = []
        for n_cut in (4, 8, 16, 32):
            p = nt.FlowParams(n_cut=n_cut, step=1e-3)
            got = nt.evolve(u, 0.25, p)
            diff = nt.FourierState(64, got.coeffs - ref.coeffs)
            gaps.append(np.sqrt(nt.sobolev_norm_sq_sigma(diff, 1.0)))
        assert all(b < a for a, b in zip(gaps, gaps[1:]))
