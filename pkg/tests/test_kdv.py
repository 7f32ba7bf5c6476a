"""KdV module tests: evolution, conserved densities, scattering, actions.

The analytic backbone is the one-soliton family
u = -2 kappa^2 sech^2(kappa (x - x0 - 4 kappa^2 t)) with
a(k) = (k - i kappa)/(k + i kappa), bound state at kappa, and
invariants I_1 = 4 kappa, I_2 = 16 kappa^3 / 3, I_3 = 64 kappa^5 / 5.
"""

import math
import warnings

import numpy as np
import pytest

from hamlab.errors import BlowUpError, DecayError
from hamlab.kdv import (
    ActionSpectrum,
    LinePotential,
    PeriodicField,
    ScatteringData,
    action_spectrum,
    analytic_soliton_a,
    bound_states,
    cfl_timestep,
    conserved_integrals,
    direct_hamiltonian,
    hamiltonian_from_actions,
    kdv_evolve,
    kdv_grid,
    kdv_invariants,
    line_window,
    periodic_integral,
    riccati_densities,
    riccati_residual,
    sample_potential,
    scattering_data,
    schrodinger_a,
    soliton,
    soliton_field,
    spectral_derivative,
)


def sech2_potential(kappa=1.0, x0=0.0):
    return lambda x: -2.0 * kappa**2 / np.cosh(kappa * (np.asarray(x) - x0)) ** 2


@pytest.fixture(scope="module")
def generic_field():
    x = kdv_grid()
    u = -1.2 * np.exp(-((x - 15.0) ** 2) / 4.0) - 0.8 * np.exp(-((x - 25.0) ** 2) / 6.0)
    return PeriodicField(u)


@pytest.fixture(scope="module")
def sech_pot():
    return sample_potential(sech2_potential())


@pytest.fixture(scope="module")
def evolved_soliton():
    f0 = soliton_field(1.0)
    return f0, kdv_evolve(f0, 1e-4, 10000)


@pytest.fixture(scope="module")
def two_soliton_run():
    L, M = 80.0, 1024
    x = kdv_grid(L, M)
    u0 = soliton(x, 1.0, 30.0) + soliton(x, 0.5, 50.0)
    f0 = PeriodicField(u0, L)
    return f0, kdv_evolve(f0, 5e-4, 24000)  # t = 12, well past the collision


@pytest.fixture(scope="module")
def sech_actions(sech_pot):
    sd = scattering_data(sech_pot, np.linspace(0.05, 4.0, 60), k_max_bound=1.5)
    return action_spectrum(sd)


class TestPeriodicField:
    def test_grid_must_be_power_of_two(self):
        with pytest.raises(ValueError, match="power of two"):
            PeriodicField(np.zeros(100))

    def test_non_finite_rejected(self):
        u = np.zeros(64)
        u[3] = np.nan
        with pytest.raises(ValueError):
            PeriodicField(u)

    def test_samples_read_only(self):
        f = PeriodicField(np.zeros(64))
        with pytest.raises(ValueError):
            f.u[0] = 1.0

    def test_grid_properties(self):
        f = PeriodicField(np.zeros(128), L_domain=16.0)
        assert f.M == 128
        assert f.h == pytest.approx(0.125)
        assert f.x[0] == 0.0
        assert f.x[-1] == pytest.approx(16.0 - 0.125)


class TestKdvEvolve:
    def test_zero_field_fixed_point(self):
        f = PeriodicField(np.zeros(64))
        g = kdv_evolve(f, 1e-3, 50)
        assert np.all(g.u == 0.0)
        assert g.t == pytest.approx(0.05)

    def test_soliton_translates(self, evolved_soliton):
        f0, f1 = evolved_soliton
        exact = soliton(f1.x, 1.0, f0.L_domain / 2.0, 1.0)
        assert np.max(np.abs(f1.u - exact)) < 1e-6

    def test_mass_exactly_conserved(self, evolved_soliton):
        f0, f1 = evolved_soliton
        m0 = periodic_integral(f0.u, f0.L_domain)
        m1 = periodic_integral(f1.u, f1.L_domain)
        assert m0 == m1

    def test_blow_up_reports_last_stable_time(self):
        f = soliton_field(1.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            with pytest.raises(BlowUpError) as exc:
                kdv_evolve(f, 2e-2, 2000)
        assert exc.value.step >= 1
        assert 0.0 <= exc.value.last_time < 2e-2 * 2000

    def test_oversized_step_warns(self):
        f = soliton_field(1.0)
        guard = cfl_timestep(f)
        with pytest.warns(UserWarning, match="stability guard"):
            with pytest.raises(BlowUpError):
                kdv_evolve(f, 4.0 * guard, 500)

    def test_quiet_field_guard_is_infinite(self):
        assert cfl_timestep(PeriodicField(np.zeros(64))) == math.inf

    def test_step_validation(self):
        f = PeriodicField(np.zeros(64))
        with pytest.raises(ValueError):
            kdv_evolve(f, -1e-3, 10)
        with pytest.raises(ValueError):
            kdv_evolve(f, 1e-3, -1)

    def test_zero_steps_returns_field(self):
        f = soliton_field(1.0)
        assert kdv_evolve(f, 1e-4, 0) is f


class TestTwoSolitonCollision:
    """After the fast soliton passes the slow one, both shapes are restored
    up to the classical forward/backward phase shifts."""

    @staticmethod
    def _trough(u, x, i, L):
        h = x[1] - x[0]
        ym, y0, yp = u[(i - 1) % u.size], u[i], u[(i + 1) % u.size]
        return x[i] + 0.5 * h * (ym - yp) / (ym - 2.0 * y0 + yp)

    def test_shapes_restored_with_phase_shifts(self, two_soliton_run):
        f0, g = two_soliton_run
        L, x = g.L_domain, g.x
        x_fast = self._trough(g.u, x, int(np.argmin(g.u)), L)
        d_fast = (x - x_fast + L / 2.0) % L - L / 2.0
        masked = np.where(np.abs(d_fast) > 8.0, g.u, 0.0)
        x_slow = self._trough(g.u, x, int(np.argmin(masked)), L)
        d_slow = (x - x_slow + L / 2.0) % L - L / 2.0

        err_fast = np.max(np.abs(g.u + 2.0 / np.cosh(d_fast) ** 2)[np.abs(d_fast) < 6.0])
        err_slow = np.max(np.abs(g.u + 0.5 / np.cosh(0.5 * d_slow) ** 2)[np.abs(d_slow) < 6.0])
        assert err_fast < 1e-4
        assert err_slow < 1e-4

        # free-flight crossing positions are 78 and 62; the interaction
        # advances the fast soliton by ln 3 and retards the slow one by 2 ln 3
        shift_fast = x_fast - (30.0 + 4.0 * 12.0)
        shift_slow = x_slow - (50.0 + 1.0 * 12.0)
        assert shift_fast == pytest.approx(math.log(3.0), abs=5e-3)
        assert shift_slow == pytest.approx(-2.0 * math.log(3.0), abs=5e-3)

    def test_invariants_survive_collision(self, two_soliton_run):
        f0, g = two_soliton_run
        c0, c1 = kdv_invariants(f0), kdv_invariants(g)
        assert np.max(np.abs(c1.I - c0.I) / np.abs(c0.I)) < 1e-6


class TestRiccatiDensities:
    def test_first_density_is_minus_u(self, generic_field):
        d = riccati_densities(generic_field, 1)
        assert np.array_equal(d.chi[0], -generic_field.u)

    def test_low_order_closed_forms(self, generic_field):
        f = generic_field
        d = riccati_densities(f, 3)
        ux = spectral_derivative(f, 1)
        uxx = spectral_derivative(f, 2)
        assert np.max(np.abs(d.chi[1] + ux)) < 1e-12
        assert np.max(np.abs(d.chi[2] - (-uxx + f.u**2))) < 1e-12

    def test_higher_order_closed_forms(self, generic_field):
        f = generic_field
        d = riccati_densities(f, 5)
        u, ux = f.u, spectral_derivative(f, 1)
        uxx, uxxx = spectral_derivative(f, 2), spectral_derivative(f, 3)
        u4 = spectral_derivative(f, 4)
        assert np.max(np.abs(d.chi[3] - (-uxxx + 4.0 * u * ux))) < 1e-10
        chi5 = -u4 + 5.0 * ux**2 + 6.0 * u * uxx - 2.0 * u**3
        assert np.max(np.abs(d.chi[4] - chi5)) < 1e-10

    def test_high_order_warns(self, generic_field):
        with pytest.warns(UserWarning, match="order 8"):
            riccati_densities(generic_field, 9)

    def test_order_validation(self, generic_field):
        with pytest.raises(ValueError):
            riccati_densities(generic_field, 0)


class TestConservedIntegrals:
    def test_first_invariant_is_minus_mass(self, generic_field):
        c = kdv_invariants(generic_field)
        mass = periodic_integral(generic_field.u, generic_field.L_domain)
        assert c.I[0] == pytest.approx(-mass, abs=1e-12)

    def test_second_invariant_is_l2_norm(self, generic_field):
        c = kdv_invariants(generic_field)
        l2 = periodic_integral(generic_field.u**2, generic_field.L_domain)
        assert c.I[1] == pytest.approx(l2, rel=1e-12)

    def test_third_invariant_doubles_hamiltonian(self, generic_field):
        c = kdv_invariants(generic_field)
        assert c.I[2] == pytest.approx(-2.0 * direct_hamiltonian(generic_field), rel=1e-12)

    @pytest.mark.parametrize("kappa", [1.0, 0.7])
    def test_soliton_values(self, kappa):
        c = kdv_invariants(soliton_field(kappa))
        exact = [4.0 * kappa, 16.0 * kappa**3 / 3.0, 64.0 * kappa**5 / 5.0]
        assert np.allclose(c.I, exact, rtol=1e-10)

    def test_even_integrals_vanish(self, generic_field):
        c = kdv_invariants(generic_field)
        assert np.max(np.abs(c.even)) < 1e-10

    def test_invariants_conserved_along_flow(self, evolved_soliton):
        f0, f1 = evolved_soliton
        c0, c1 = kdv_invariants(f0), kdv_invariants(f1)
        assert np.max(np.abs(c1.I - c0.I) / np.abs(c0.I)) < 1e-6
        assert np.max(np.abs(c1.even)) < 1e-10

    def test_count_follows_order(self, generic_field):
        c = conserved_integrals(riccati_densities(generic_field, 5))
        assert c.I.size == 3
        assert c.even.size == 2


class TestDirectHamiltonian:
    def test_soliton_value(self):
        assert direct_hamiltonian(soliton_field(1.0)) == pytest.approx(-32.0 / 5.0, rel=1e-10)

    def test_drift_along_flow(self, evolved_soliton):
        f0, f1 = evolved_soliton
        h0, h1 = direct_hamiltonian(f0), direct_hamiltonian(f1)
        assert abs(h1 - h0) / abs(h0) < 1e-8


class TestRiccatiResidual:
    @pytest.mark.parametrize("order", [4, 6])
    def test_decay_exponent_matches_order(self, order):
        f = soliton_field(1.0)
        r1 = riccati_residual(f, order, 6.0)
        r2 = riccati_residual(f, order, 9.0)
        exponent = math.log(r1 / r2) / math.log(9.0 / 6.0)
        assert exponent == pytest.approx(order, abs=0.1)

    def test_zero_k_rejected(self):
        with pytest.raises(ValueError):
            riccati_residual(soliton_field(1.0), 4, 0.0)


class TestLinePotential:
    def test_edge_decay_enforced(self):
        x = np.linspace(-20.0, 20.0, 256)
        with pytest.raises(DecayError):
            LinePotential(x, 0.1 * np.cos(x))

    def test_window_recenters_soliton(self):
        f = soliton_field(1.0, x0=7.0)
        w = line_window(f)
        assert abs(w.u[0]) < 1e-10 and abs(w.u[-1]) < 1e-10
        assert w.x[np.argmin(w.u)] == pytest.approx(0.0, abs=f.h)

    def test_window_values_match_profile(self):
        # center on a grid node so the integer roll lands exactly
        h = 40.0 / 512
        f = soliton_field(1.0, x0=168 * h)
        w = line_window(f)
        assert np.max(np.abs(w.u - soliton(w.x, 1.0, 0.0))) < 1e-10

    def test_spline_route_zero_outside(self, sech_pot):
        samples = LinePotential(sech_pot.x, sech_pot.u)  # no callable attached
        ev = samples.evaluate()
        assert ev(21.0) == 0.0
        assert ev(0.0) == pytest.approx(-2.0, abs=1e-9)

    def test_monotone_grid_required(self):
        x = np.zeros(32)
        with pytest.raises(ValueError):
            LinePotential(x, np.zeros(32))


class TestSchrodingerA:
    def test_free_potential_gives_unity(self):
        zero = LinePotential(np.linspace(-20.0, 20.0, 64), np.zeros(64))
        assert abs(schrodinger_a(zero, 1.3) - 1.0) < 1e-10

    @pytest.mark.parametrize("k", [0.3, 0.7, 1.3, 2.0])
    def test_soliton_matches_analytic(self, sech_pot, k):
        a = schrodinger_a(sech_pot, k)
        assert abs(a - analytic_soliton_a(k, [1.0])) < 1e-6

    def test_windowed_field_matches_analytic(self):
        w = line_window(soliton_field(1.0))
        a = schrodinger_a(w, 1.3)
        assert abs(a - analytic_soliton_a(1.3, [1.0])) < 1e-6

    def test_invariant_along_flow(self, evolved_soliton):
        f0, f1 = evolved_soliton
        f_half = kdv_evolve(f0, 1e-4, 5000)
        values = [schrodinger_a(line_window(f), 1.3) for f in (f0, f_half, f1)]
        assert max(abs(v - values[0]) for v in values) < 1e-4

    def test_imaginary_axis_real_valued(self, sech_pot):
        a = schrodinger_a(sech_pot, 0.5j)
        assert a.imag == pytest.approx(0.0, abs=1e-12)
        assert a.real == pytest.approx(-1.0 / 3.0, abs=1e-9)

    def test_k_validation(self, sech_pot):
        with pytest.raises(ValueError):
            schrodinger_a(sech_pot, 0.0)
        with pytest.raises(ValueError):
            schrodinger_a(sech_pot, -0.5j)


class TestBoundStates:
    def test_soliton_bound_state(self, sech_pot):
        bk = bound_states(sech_pot, 3.0)
        assert bk.size == 1
        assert bk[0] == pytest.approx(1.0, abs=1e-8)

    def test_two_well_superposition(self):
        fn_a, fn_b = sech2_potential(1.0, -10.0), sech2_potential(0.5, 10.0)
        pot = sample_potential(lambda x: fn_a(x) + fn_b(x), half_width=40.0)
        bk = bound_states(pot, 1.5)
        assert bk.size == 2
        assert np.allclose(bk, [0.5, 1.0], atol=1e-6)

    def test_repulsive_on_average_packet_is_empty(self):
        # positive net area keeps the shallow-well bound state away
        pot = sample_potential(lambda x: 0.05 * np.cos(2.0 * x) * np.exp(-(x**2) / 16.0))
        assert bound_states(pot, 1.0).size == 0

    def test_empty_range(self, sech_pot):
        assert bound_states(sech_pot, 0.01).size == 0


class TestScatteringData:
    def test_modulus_floor_enforced(self):
        k = np.array([0.5, 1.0, 1.5])
        a = np.array([1.0 + 0j, 0.5 + 0j, 1.0 + 0j])
        with pytest.raises(ValueError, match=r"\|a\| dips"):
            ScatteringData(k, a, np.array([]))

    def test_high_k_limit_enforced(self):
        k = np.array([0.5, 1.0, 1.5])
        a = np.array([2.0 + 0j, 2.0 + 0j, 2.0 + 0j])
        with pytest.raises(ValueError, match="high-k limit"):
            ScatteringData(k, a, np.array([]))

    def test_soliton_data_passes(self, sech_pot):
        sd = scattering_data(sech_pot, np.linspace(0.2, 3.0, 15), k_max_bound=1.5)
        assert np.allclose(np.abs(sd.a), 1.0, atol=1e-9)
        assert sd.bound_k.size == 1


class TestActionSpectrum:
    def test_reflectionless_soliton(self, sech_actions):
        assert np.max(np.abs(sech_actions.n_of_k)) < 1e-6
        assert sech_actions.N_l.size == 1
        assert sech_actions.N_l[0] == pytest.approx(1.0, abs=1e-6)

    def test_negative_density_rejected(self):
        with pytest.raises(ValueError, match=r"n\(k\) dips"):
            ActionSpectrum(np.array([1.0]), np.array([-1e-6]), np.array([]))

    def test_oscillating_packet_has_positive_density(self):
        pot = sample_potential(lambda x: 0.05 * np.cos(2.0 * x) * np.exp(-(x**2) / 16.0))
        sd = scattering_data(pot, np.linspace(0.1, 3.0, 30), k_max_bound=1.0)
        spec = action_spectrum(sd)
        assert np.min(spec.n_of_k) > -1e-10
        assert np.max(spec.n_of_k) > 1e-4  # genuine radiation content


class TestHamiltonianFromActions:
    def test_single_soliton_value(self, sech_actions):
        H = hamiltonian_from_actions(sech_actions)
        assert H == pytest.approx(-32.0 / 5.0, rel=1e-4)

    def test_agrees_with_direct_functional(self, sech_actions):
        H = hamiltonian_from_actions(sech_actions)
        H_direct = direct_hamiltonian(soliton_field(1.0))
        assert abs(H - H_direct) / abs(H_direct) < 1e-4

    def test_two_soliton_value(self, two_soliton_run):
        f0, _ = two_soliton_run
        fn_a, fn_b = sech2_potential(1.0, -10.0), sech2_potential(0.5, 10.0)
        pot = sample_potential(lambda x: fn_a(x) + fn_b(x), half_width=40.0)
        sd = scattering_data(pot, np.linspace(0.05, 4.0, 80), k_max_bound=1.5)
        H = hamiltonian_from_actions(action_spectrum(sd))
        assert H == pytest.approx(direct_hamiltonian(f0), rel=1e-4)
        assert H == pytest.approx(-6.6, rel=1e-4)

    def test_unconverged_tail_warns(self):
        k = np.linspace(1.0, 2.0, 11)
        spec = ActionSpectrum(k, np.full(11, 0.5), np.array([]))
        with pytest.warns(UserWarning, match="extend the k grid"):
            hamiltonian_from_actions(spec)
