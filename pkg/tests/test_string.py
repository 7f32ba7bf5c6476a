"""Tests for the finite vibrating string module."""

import math

import numpy as np
import pytest

from hamlab import (
    CanonicalState,
    DomainExitError,
    ResolutionError,
    completeness_jacobian,
    completeness_report,
    conservation_drift,
    evolve,
    involution_matrix,
    poisson_bracket,
    poisson_bracket_analytic,
)
from hamlab.canonical import Trajectory
from hamlab.string import (
    ModeState,
    SeparationData,
    StringField,
    beta_for_state,
    exact_mode_evolution,
    field_energy_integral,
    field_hamiltonian,
    hj_action,
    hj_trajectory,
    mode_energy,
    modes_hamiltonian,
    reconstruct_field,
    sample_field,
    separation_constants,
    sine_modes,
    string_grid,
    string_observable_set,
    string_system,
)

H_FD = 1e-5


def random_modes(n, seed, t=0.0):
    rng = np.random.default_rng(seed)
    return ModeState(rng.normal(size=n), rng.normal(size=n), t)


class TestStringField:
    def test_dirichlet_violation_rejected(self):
        x = string_grid(8)
        u = np.ones_like(x)
        with pytest.raises(ValueError, match="Dirichlet"):
            StringField(x, u, np.zeros_like(x))

    def test_roundoff_endpoints_snapped_to_zero(self):
        f = sample_field(lambda x: np.sin(3 * x), M=64)
        assert f.u[0] == 0.0 and f.u[-1] == 0.0

    def test_nonuniform_grid_rejected(self):
        x = np.sqrt(np.linspace(0.0, (2 * np.pi) ** 2, 9))
        with pytest.raises(ValueError, match="uniform"):
            StringField(x, np.zeros_like(x), np.zeros_like(x))


class TestSineModes:
    def test_single_mode(self):
        f = sample_field(lambda x: np.sin(x), M=64)
        m = sine_modes(f, 4)
        assert m.a[0] == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(m.a[1:])) < 1e-12
        assert np.max(np.abs(m.adot)) < 1e-12

    def test_zero_field(self):
        f = sample_field(lambda x: np.zeros_like(x), M=32)
        m = sine_modes(f, 8)
        assert np.all(m.a == 0.0) and np.all(m.adot == 0.0)

    def test_two_mode_combination(self):
        f = sample_field(lambda x: np.sin(3 * x) - 2 * np.sin(5 * x), M=128)
        m = sine_modes(f, 8)
        assert m.a[2] == pytest.approx(1.0, abs=1e-12)
        assert m.a[4] == pytest.approx(-2.0, abs=1e-12)
        others = np.delete(m.a, [2, 4])
        assert np.max(np.abs(others)) < 1e-12

    def test_velocity_channel(self):
        f = sample_field(lambda x: np.zeros_like(x), lambda x: 0.5 * np.sin(2 * x), M=64)
        m = sine_modes(f, 4)
        assert m.adot[1] == pytest.approx(0.5, abs=1e-12)

    def test_resolution_guard(self):
        f = sample_field(lambda x: np.sin(x), M=16)
        with pytest.raises(ResolutionError):
            sine_modes(f, 9)

    def test_round_trip_band_limited(self):
        m = random_modes(6, seed=21)
        back = sine_modes(reconstruct_field(m, M=128), 6)
        assert np.max(np.abs(back.a - m.a)) < 1e-12
        assert np.max(np.abs(back.adot - m.adot)) < 1e-12


class TestModeEnergy:
    def test_pure_displacement(self):
        assert mode_energy(2, 1.0, 0.0) == pytest.approx(2.0)

    def test_pure_velocity(self):
        assert mode_energy(1, 0.0, 3.0) == pytest.approx(4.5)

    def test_sum_equals_hamiltonian(self):
        m = random_modes(7, seed=22)
        total = sum(mode_energy(n, m.a[n - 1], m.adot[n - 1]) for n in range(1, 8))
        assert modes_hamiltonian(m) == pytest.approx(total, rel=1e-14)

    def test_parseval_field_vs_modes(self):
        m = random_modes(5, seed=23)
        f = reconstruct_field(m, M=256)
        assert field_hamiltonian(f) == pytest.approx(np.pi * modes_hamiltonian(m), rel=1e-11)


class TestFieldEnergyIntegral:
    def test_single_mode_value(self):
        f = sample_field(lambda x: np.sin(x), M=64)
        # integral of sin^2 over the full interval is pi
        assert field_energy_integral(f, 1) == pytest.approx(0.5 * np.pi**2, rel=1e-12)

    def test_zero_field(self):
        f = sample_field(lambda x: np.zeros_like(x), M=32)
        assert field_energy_integral(f, 3) == 0.0

    def test_pi_squared_times_mode_energy(self):
        m = random_modes(4, seed=24)
        f = reconstruct_field(m, M=128)
        for n in range(1, 5):
            want = np.pi**2 * mode_energy(n, m.a[n - 1], m.adot[n - 1])
            assert field_energy_integral(f, n) == pytest.approx(want, rel=1e-11)

    def test_constant_along_exact_evolution(self):
        m = random_modes(4, seed=25)
        vals0 = [field_energy_integral(reconstruct_field(m, 128), n) for n in range(1, 5)]
        for t in (0.37, 1.9, 6.0):
            mt = exact_mode_evolution(m, t)
            vals = [field_energy_integral(reconstruct_field(mt, 128), n) for n in range(1, 5)]
            assert np.max(np.abs(np.array(vals) - vals0)) < 1e-12


class TestExactModeEvolution:
    def test_zero_dt_identity(self):
        m = random_modes(5, seed=26)
        out = exact_mode_evolution(m, m.t)
        assert np.array_equal(out.a, m.a) and np.array_equal(out.adot, m.adot)

    def test_quarter_period_first_mode(self):
        m = ModeState([1.0], [0.0])
        out = exact_mode_evolution(m, np.pi / 2)
        assert out.a[0] == pytest.approx(0.0, abs=1e-15)
        assert out.adot[0] == pytest.approx(-1.0, abs=1e-15)

    def test_common_period(self):
        m = random_modes(6, seed=27)
        out = exact_mode_evolution(m, 2 * np.pi)
        assert np.max(np.abs(out.a - m.a)) < 1e-13
        assert np.max(np.abs(out.adot - m.adot)) < 1e-13

    def test_energies_invariant_to_machine_precision(self):
        m = random_modes(8, seed=28)
        e0 = np.array([mode_energy(n, m.a[n - 1], m.adot[n - 1]) for n in range(1, 9)])
        for t in (0.1, 2.7, 15.0):
            mt = exact_mode_evolution(m, t)
            e = np.array([mode_energy(n, mt.a[n - 1], mt.adot[n - 1]) for n in range(1, 9)])
            assert np.max(np.abs(e - e0)) < 1e-12


class TestHJAction:
    def test_zero_at_origin(self):
        assert hj_action(3, 0.0, 2.5) == 0.0

    def test_turning_point_value(self):
        E = 2.3
        n = 2
        a_turn = math.sqrt(E) / n
        assert hj_action(n, a_turn, E) == pytest.approx(np.pi * E / (4 * n), rel=1e-12)

    def test_derivative_matches_integrand(self):
        # dS/da = sqrt(E - n^2 a^2); at a = 0, E = 4, n = 2 this is 2.
        h = 1e-6
        fd = (hj_action(2, h, 4.0) - hj_action(2, -h, 4.0)) / (2 * h)
        assert fd == pytest.approx(2.0, abs=1e-9)

    def test_derivative_matches_inside_region(self):
        E, n = 3.0, 1
        for a in (-1.2, 0.4, 1.5):
            h = 1e-6
            fd = (hj_action(n, a + h, E) - hj_action(n, a - h, E)) / (2 * h)
            assert fd == pytest.approx(math.sqrt(E - n**2 * a**2), abs=1e-8)

    def test_beyond_turning_point_rejected(self):
        with pytest.raises(DomainExitError):
            hj_action(2, 2.0, 1.0)

    def test_zero_energy(self):
        assert hj_action(1, 0.0, 0.0) == 0.0
        with pytest.raises(DomainExitError):
            hj_action(1, 0.5, 0.0)


class TestSeparationData:
    def test_sum_rule_enforced(self):
        with pytest.raises(ValueError):
            SeparationData([1.0, 1.0], 3.0)

    def test_from_mode_state(self):
        m = random_modes(6, seed=29)
        sep = separation_constants(m)
        assert sep.E_total == pytest.approx(modes_hamiltonian(m), rel=1e-14)
        assert sep.E.sum() == pytest.approx(2 * sep.E_total, rel=1e-14)

    def test_negative_energy_rejected(self):
        with pytest.raises(ValueError):
            SeparationData([-0.1], -0.05)


class TestHJTrajectory:
    def test_single_mode_cosine_phase(self):
        sep = SeparationData([1.0], 0.5)
        # beta = pi/4 puts mode 1 at a(t) = sin(t + pi/2) = cos t
        traj = hj_trajectory(sep, [np.pi / 4])
        for t in (0.0, 0.3, 1.7):
            m = traj(t)
            assert m.a[0] == pytest.approx(math.cos(t), abs=1e-14)
            assert m.adot[0] == pytest.approx(-math.sin(t), abs=1e-14)

    def test_all_zero_energy_gives_zero_solution(self):
        sep = SeparationData([0.0, 0.0], 0.0)
        with pytest.warns(UserWarning, match="stationary"):
            traj = hj_trajectory(sep, [0.0, 0.0])
        m = traj(1.3)
        assert np.all(m.a == 0.0) and np.all(m.adot == 0.0)

    def test_matches_exact_evolution(self):
        m0 = random_modes(6, seed=30)
        traj = hj_trajectory(separation_constants(m0), beta_for_state(m0))
        for t in (0.0, 0.9, 4.2):
            want = exact_mode_evolution(m0, t)
            got = traj(t)
            assert np.max(np.abs(got.a - want.a)) < 1e-10
            assert np.max(np.abs(got.adot - want.adot)) < 1e-10

    def test_wave_equation_residual_band_limited(self):
        # u_tt - u_xx on the reconstructed field via a five-point stencil in
        # t; spatial derivative is exact through the sine series.
        m0 = random_modes(4, seed=31)
        traj = hj_trajectory(separation_constants(m0), beta_for_state(m0))
        t0, dt, M = 0.8, 1e-3, 64
        x = string_grid(M)
        snaps = [reconstruct_field(traj(t0 + k * dt), M).u for k in (-2, -1, 0, 1, 2)]
        u_tt = (
            -snaps[0] / 12 + 4 * snaps[1] / 3 - 5 * snaps[2] / 2 + 4 * snaps[3] / 3 - snaps[4] / 12
        ) / dt**2
        mid = traj(t0)
        u_xx = np.zeros_like(x)
        for n in range(1, 5):
            u_xx += -(n**2) * mid.a[n - 1] * np.sin(n * x)
        assert np.max(np.abs(u_tt - u_xx)) < 1e-8

    def test_hamilton_equations_residual(self):
        m0 = random_modes(5, seed=32)
        traj = hj_trajectory(separation_constants(m0), beta_for_state(m0))
        t0, dt = 1.1, 1e-5
        plus, minus, mid = traj(t0 + dt), traj(t0 - dt), traj(t0)
        da = (plus.a - minus.a) / (2 * dt)
        dadot = (plus.adot - minus.adot) / (2 * dt)
        n2 = np.arange(1, 6, dtype=float) ** 2
        assert np.max(np.abs(da - mid.adot)) < 1e-8
        assert np.max(np.abs(dadot + n2 * mid.a)) < 1e-8


class TestStringObservables:
    def test_involution_matrix_vanishes(self):
        obs = string_observable_set(8)
        s = random_modes(8, seed=33).as_canonical()
        B = involution_matrix(obs, s, H_FD)
        assert np.max(np.abs(B)) < 1e-6

    def test_cross_module_bracket_f2_f3(self):
        obs = string_observable_set(4)
        s = random_modes(4, seed=34).as_canonical()
        b = poisson_bracket(obs.observables[1], obs.observables[2], s, H_FD)
        assert abs(b) < 1e-6

    def test_fd_matches_analytic_brackets(self):
        obs = string_observable_set(6)
        s = random_modes(6, seed=35).as_canonical()
        for i in range(6):
            for j in range(i + 1, 6):
                fd = poisson_bracket(obs.observables[i], obs.observables[j], s, H_FD)
                exact = poisson_bracket_analytic(obs.observables[i], obs.observables[j], s)
                assert exact == 0.0
                assert abs(fd - exact) < 10 * H_FD**2

    def test_jacobian_is_diag_p(self):
        n = 6
        rng = np.random.default_rng(36)
        s = CanonicalState(rng.normal(size=n), rng.uniform(0.5, 2.0, size=n))
        J = completeness_jacobian(string_observable_set(n), s, H_FD)
        assert np.allclose(J, np.diag(s.p), atol=1e-9)

    def test_complete_with_nonzero_momenta(self):
        n = 8
        rng = np.random.default_rng(37)
        s = CanonicalState(rng.normal(size=n), rng.uniform(0.5, 2.0, size=n))
        J = completeness_jacobian(string_observable_set(n), s, H_FD)
        assert completeness_report(J).complete

    def test_incomplete_with_f1_removed(self):
        n = 8
        rng = np.random.default_rng(38)
        s = CanonicalState(rng.normal(size=n), rng.uniform(0.5, 2.0, size=n))
        obs = string_observable_set(n).without("mode_energy_1")
        rep = completeness_report(completeness_jacobian(obs, s, H_FD))
        assert not rep.complete
        assert rep.numerical_rank == n - 1


class TestStringSystem:
    def test_hamiltonian_matches_mode_sum(self):
        m = random_modes(5, seed=39)
        sys = string_system(5)
        assert sys.energy(m.as_canonical()) == pytest.approx(modes_hamiltonian(m), rel=1e-14)

    def test_gradients_consistent(self):
        sys = string_system(6)
        assert sys.check_gradients(random_modes(6, seed=40).as_canonical()) < 1e-8

    def test_verlet_matches_exact_evolution_at_second_order(self):
        n, horizon = 8, 2.0
        m0 = random_modes(n, seed=41)
        want = exact_mode_evolution(m0, horizon)
        errs = []
        for steps in (2000, 4000):
            dt = horizon / steps
            traj = evolve(string_system(n), m0.as_canonical(), dt, steps, record_stride=steps)
            end = traj.states[-1]
            errs.append(max(np.max(np.abs(end.q - want.a)), np.max(np.abs(end.p - want.adot))))
        # halving dt must cut the endpoint error by about 4 (second order)
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.15)
        assert errs[1] < 1e-3

    def test_energy_drift_bounded_decaying_spectrum(self):
        n = 8
        idx = np.arange(1, n + 1, dtype=float)
        m0 = ModeState(4.0 ** (1 - idx), np.zeros(n))
        traj = evolve(string_system(n), m0.as_canonical(), 1e-3, 20000, record_stride=100)
        drift = conservation_drift(string_observable_set(n), traj)
        assert np.max(drift) < 1e-6

    def test_mode_energy_drift_zero_on_exact_trajectory(self):
        m0 = random_modes(6, seed=42)
        times = np.linspace(0.0, 5.0, 40)
        states = [exact_mode_evolution(m0, t).as_canonical() for t in times]
        traj = Trajectory(times, states)
        drift = conservation_drift(string_observable_set(6), traj)
        assert np.max(drift) < 1e-12
