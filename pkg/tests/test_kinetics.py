import numpy as np
import pytest
from scipy.integrate import solve_ivp

from fluxonium_noise import (
    Dielectric,
    FluxNoise,
    PhenomPowerLaw,
    ValidationError,
    build_rate_matrix,
    decompose_modes,
    diagonalize,
    evolve_populations,
    gamma1_two_level,
    simulate_readout_estimators,
    transition_rates,
)
from fluxonium_noise.kinetics import RateMatrix
from fluxonium_noise.fitting import fit_exponential

from conftest import gibbs


@pytest.fixture(scope="module")
def sol8(paper_params):
    return diagonalize(paper_params.with_phi_ext(0.3 * 2 * np.pi), 8)


@pytest.fixture(scope="module")
def dielectric():
    return Dielectric(tan_delta0=4e-6, epsilon=0.26, t_eff=0.05)


def p_init(n):
    p0 = np.zeros(n)
    p0[1] = 1.0
    return p0


class TestBuildRateMatrix:
    def test_two_level_structure(self, sol_half_flux):
        ch = FluxNoise(a_phi=(0.25e-6) ** 2, alpha=0.62, t_bath=0.05)
        up, down = transition_rates(ch, sol_half_flux, 0, 1)
        rm = build_rate_matrix([ch], sol_half_flux, 2)
        expected = np.array([[-up, down], [up, -down]])
        assert np.allclose(rm.b, expected, rtol=0, atol=0)

    def test_column_sums_vanish(self, sol8, channels_baseline):
        rm = build_rate_matrix(channels_baseline, sol8, 6)
        tol = 1e-12 * np.max(np.abs(rm.b))
        assert np.max(np.abs(rm.b.sum(axis=0))) <= tol

    def test_cold_limit_suppresses_heating(self, sol8, dielectric):
        import dataclasses

        cold = dataclasses.replace(dielectric, t_eff=1e-3)
        rm = build_rate_matrix([cold], sol8, 4)
        upper = np.triu(rm.b, 1)  # downward rates (into lower levels)
        lower = np.tril(rm.b, -1)  # upward (heating) rates
        assert np.max(lower) < 1e-10 * np.max(upper)

    def test_assembly_matches_per_entry_recomputation(self, sol8, channels_baseline):
        n = 6
        rm = build_rate_matrix(channels_baseline, sol8, n)
        expected = np.zeros((n, n))
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                total = 0.0
                for ch in channels_baseline:
                    gamma_ij, _ = transition_rates(ch, sol8, i, j)
                    total += gamma_ij
                expected[j, i] = total
        np.fill_diagonal(expected, -expected.sum(axis=0))
        assert np.allclose(rm.b, expected, rtol=1e-12, atol=0)

    def test_phenom_blocks_multilevel(self, sol8):
        ch = PhenomPowerLaw(a=1e-12, alpha=1.5, beta1=0.3, b=1e-18, gamma=0.2, beta2=2.9, t=0.05)
        with pytest.raises(ValidationError):
            build_rate_matrix([ch], sol8, 4)
        rm = build_rate_matrix([ch], sol8, 2)
        assert rm.n == 2


class TestDecomposeModes:
    def test_two_level_identities(self, sol_half_flux, dielectric):
        rm = build_rate_matrix([dielectric], sol_half_flux, 2)
        modes = decompose_modes(rm, p_init(2))
        assert modes.gamma1_eff == pytest.approx(-np.trace(rm.b), rel=1e-12)
        assert modes.m_metric < 1e-12
        assert modes.gammas[0] == 0.0

    def test_gibbs_stationary_at_common_temperature(self, sol8, dielectric):
        rm = build_rate_matrix([dielectric], sol8, 6)
        modes = decompose_modes(rm, p_init(6))
        expected = gibbs(sol8.energies[:6], 0.05)
        assert np.max(np.abs(modes.stationary - expected)) < 1e-8

    def test_reconstruction(self, sol8, channels_baseline):
        rm = build_rate_matrix(channels_baseline, sol8, 6)
        modes = decompose_modes(rm, p_init(6))
        recon = modes.vectors @ modes.overlaps
        assert np.max(np.abs(recon - p_init(6))) < 1e-10

    def test_nlevel_effective_rate_exceeds_two_level(self, sol8, dielectric):
        # heating through the upper levels shortens the lifetime
        two = gamma1_two_level([dielectric], sol8).total
        rm = build_rate_matrix([dielectric], sol8, 6)
        modes = decompose_modes(rm, p_init(6))
        assert modes.gamma1_eff > two

    def test_near_reducible_spectrum_rejected(self):
        from fluxonium_noise.errors import ConvergenceError

        # two decoupled blocks carry a second zero mode
        b = np.zeros((4, 4))
        b[:2, :2] = [[-10.0, 20.0], [10.0, -20.0]]
        b[2:, 2:] = [[-5.0, 8.0], [5.0, -8.0]]
        with pytest.raises(ConvergenceError):
            decompose_modes(RateMatrix(b=b, temperature=None), np.array([0.0, 1.0, 0.0, 0.0]))

    def test_invalid_p0(self, sol_half_flux, dielectric):
        rm = build_rate_matrix([dielectric], sol_half_flux, 2)
        with pytest.raises(ValidationError):
            decompose_modes(rm, np.array([0.5, 0.4]))


class TestEvolvePopulations:
    def test_initial_condition(self, sol8, channels_baseline):
        rm = build_rate_matrix(channels_baseline, sol8, 6)
        traj = evolve_populations(rm, p_init(6), np.array([0.0, 1e-6]))
        assert np.allclose(traj.populations[:, 0], p_init(6), atol=1e-12)

    def test_long_time_gibbs(self, sol_half_flux, dielectric):
        rm = build_rate_matrix([dielectric], sol_half_flux, 2)
        modes = decompose_modes(rm, p_init(2))
        traj = evolve_populations(modes, p_init(2), np.array([50.0 / modes.gamma1_eff]))
        expected = gibbs(sol_half_flux.energies[:2], 0.05)
        assert np.allclose(traj.populations[:, 0], expected, atol=1e-10)

    def test_probability_conservation_and_positivity(self, sol8, channels_baseline):
        rm = build_rate_matrix(channels_baseline, sol8, 6)
        times = np.geomspace(1e-8, 1e-2, 60)
        traj = evolve_populations(rm, p_init(6), times)
        assert np.max(np.abs(traj.populations.sum(axis=0) - 1.0)) < 1e-10
        assert traj.populations.min() > -1e-12

    def test_against_runge_kutta_oracle(self, sol8, channels_baseline):
        rm = build_rate_matrix(channels_baseline, sol8, 6)
        times = np.geomspace(1e-8, 1e-2, 25)
        traj = evolve_populations(rm, p_init(6), times)
        ref = solve_ivp(
            lambda t, p: rm.b @ p,
            (0.0, times[-1]),
            p_init(6),
            t_eval=times,
            method="LSODA",
            rtol=1e-11,
            atol=1e-13,
        )
        assert ref.success
        assert np.max(np.abs(traj.populations - ref.y)) < 1e-8

    def test_dielectric_leakage_stays_small(self, sol8, dielectric):
        rm = build_rate_matrix([dielectric], sol8, 6)
        modes = decompose_modes(rm, p_init(6))
        times = np.geomspace(1e-3 / modes.gamma1_eff, 3.0 / modes.gamma1_eff, 40)
        traj = evolve_populations(modes, p_init(6), times)
        assert traj.leakage().max() < 0.05

    def test_time_validation(self, sol_half_flux, dielectric):
        rm = build_rate_matrix([dielectric], sol_half_flux, 2)
        with pytest.raises(ValidationError):
            evolve_populations(rm, p_init(2), np.array([1e-3, 1e-6]))


class TestReadoutEstimators:
    def test_two_level_policies_identical(self, sol_half_flux, dielectric):
        rm = build_rate_matrix([dielectric], sol_half_flux, 2)
        modes = decompose_modes(rm, p_init(2))
        times = np.geomspace(1e-3 / modes.gamma1_eff, 3.0 / modes.gamma1_eff, 30)
        traj = evolve_populations(modes, p_init(2), times)
        est = simulate_readout_estimators(traj, gamma1_eff=modes.gamma1_eff)
        assert est.misassignment_error < 1e-9
        assert est.eff_error < 1e-6
        t1s = list(est.t1_by_policy.values())
        assert max(t1s) - min(t1s) < 1e-9 * max(t1s)

    def test_mean_signal_matches_hand_computed_trace(self):
        # small synthetic 3-level generator with known rates
        b = np.array(
            [
                [-10.0, 200.0, 30.0],
                [10.0, -300.0, 70.0],
                [0.0, 100.0, -100.0],
            ]
        )
        rm = RateMatrix(b=b, temperature=None)
        p0 = np.array([0.0, 1.0, 0.0])
        times = np.linspace(0, 0.02, 40)
        traj = evolve_populations(rm, p0, times)
        est = simulate_readout_estimators(traj)
        hand_series = traj.populations[1] + 0.5 * traj.populations[2]
        expected = fit_exponential(times, hand_series).t1
        assert est.t1_by_policy["mean_signal"] == pytest.approx(expected, rel=1e-12)

    def test_requires_excited_initialization(self, sol_half_flux, dielectric):
        rm = build_rate_matrix([dielectric], sol_half_flux, 2)
        traj = evolve_populations(rm, np.array([1.0, 0.0]), np.linspace(0, 1e-3, 20))
        with pytest.raises(ValidationError):
            simulate_readout_estimators(traj)
