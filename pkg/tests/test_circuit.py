import numpy as np
import pytest
from scipy.linalg import eig_banded

from fluxonium_noise import (
    CircuitParams,
    DegeneracyError,
    DomainError,
    ResonatorParams,
    ValidationError,
    diagonalize,
    dispersive_shifts,
    field_dependence,
    flux_sensitivity,
    matrix_element,
    melem_table,
)
from fluxonium_noise.circuit import (
    FieldModelParams,
    conjugate_identity_factor,
    fraunhofer_junction_length,
    x_qp_thermal,
)

def fd_phase_grid_energies(params, n_levels, n_grid=2001, span=8 * np.pi):
    """Independent finite-difference Schrodinger solver on a uniform phase grid.

    Sixth-order central stencil for the kinetic term -4 E_C d^2/dphi^2 keeps
    the discretization error below the 1e-6 relative comparison target.
    """
    phi = np.linspace(-span, span, n_grid)
    h = phi[1] - phi[0]
    v = -params.e_j * np.cos(phi) + 0.5 * params.e_l * (phi - params.phi_ext) ** 2
    k = 4.0 * params.e_c / h**2
    # f'' ~ (-49/18 f0 + 3/2 f+-1 - 3/20 f+-2 + 1/90 f+-3) / h^2
    bands = np.zeros((4, n_grid))
    bands[0] = v + k * 49.0 / 18.0
    bands[1, :] = -k * 3.0 / 2.0
    bands[2, :] = k * 3.0 / 20.0
    bands[3, :] = -k / 90.0
    w = eig_banded(
        bands, lower=True, eigvals_only=True, select="i", select_range=(0, n_levels - 1)
    )
    return w


class TestDiagonalize:
    def test_half_flux_anchor(self, sol_half_flux):
        f01 = sol_half_flux.frequency(0, 1)
        assert f01 == pytest.approx(52e6, rel=0.02)

    def test_quarter_flux_anchor(self, paper_params):
        sol = diagonalize(paper_params.with_phi_ext(np.pi * (1 - 2 * 0.25)), 4)
        assert sol.frequency(0, 1) == pytest.approx(4.9e9, rel=0.03)

    def test_harmonic_limit(self):
        params = CircuitParams(e_c=0.957e9, e_j=0.0, e_l=0.560e9, phi_ext=0.3)
        sol = diagonalize(params, 5)
        f_ho = np.sqrt(8.0 * params.e_c * params.e_l)
        for j in range(1, 5):
            assert sol.frequency(j - 1, j) == pytest.approx(f_ho, rel=1e-9)

    def test_energies_nondecreasing_vectors_orthonormal(self, sol_half_flux):
        assert np.all(np.diff(sol_half_flux.energies) >= 0)
        v = sol_half_flux.vectors
        gram = v.T @ v
        assert np.max(np.abs(gram - np.eye(v.shape[1]))) < 1e-10

    def test_convergence_under_basis_growth(self, paper_params):
        sol_a = diagonalize(paper_params, 10)
        sol_b = diagonalize(paper_params, 10, basis_dim=sol_a.basis_dim + 20)
        rel = np.abs(sol_a.energies - sol_b.energies) / np.maximum(
            np.abs(sol_b.energies), 1.0
        )
        assert np.max(rel) < 1e-10

    def test_periodicity_and_parity(self, paper_params):
        base = diagonalize(paper_params.with_phi_ext(0.6), 6).energies
        shifted = diagonalize(paper_params.with_phi_ext(0.6 + 2 * np.pi), 6).energies
        mirrored = diagonalize(paper_params.with_phi_ext(-0.6), 6).energies
        scale = np.maximum(np.abs(base), base[-1] - base[0])
        assert np.max(np.abs(base - shifted) / scale) < 1e-10
        assert np.max(np.abs(base - mirrored) / scale) < 1e-10

    @pytest.mark.parametrize("phi_frac", [0.0, 0.13, 0.25, 0.37, 0.5])
    def test_phase_grid_oracle(self, paper_params, phi_frac):
        params = paper_params.with_phi_ext(2 * np.pi * phi_frac)
        sol = diagonalize(params, 4)
        ref = fd_phase_grid_energies(params, 4)
        scale = np.maximum(np.abs(ref), ref[3] - ref[0])
        assert np.max(np.abs(sol.energies - ref) / scale) < 1e-6

    def test_nonconvergence_reports_residual(self):
        # an extreme well displacement exceeds the maximum basis size
        from fluxonium_noise import ConvergenceError

        params = CircuitParams(e_c=0.957e9, e_j=6.814e9, e_l=0.560e9, phi_ext=200.0)
        with pytest.raises(ConvergenceError, match="residual"):
            diagonalize(params, 4)

    def test_validation(self, paper_params):
        with pytest.raises(ValidationError):
            diagonalize(paper_params, 1)
        with pytest.raises(ValidationError):
            CircuitParams(e_c=-1.0, e_j=1.0, e_l=1.0, phi_ext=0.0)
        with pytest.raises(ValidationError):
            CircuitParams(e_c=1.0, e_j=1.0, e_l=1.0, phi_ext=np.inf)


class TestMatrixElements:
    def test_conjugate_identity_on_flux_grid(self, paper_params):
        # |n_ij| = (hbar w_ij / 8 E_C) |phi_ij| for all i, j < 6
        worst = 0.0
        for frac in np.linspace(0.02, 0.98, 20):
            sol = diagonalize(paper_params.with_phi_ext(np.pi * frac), 6)
            n_tab = np.abs(melem_table(sol, "n"))
            p_tab = np.abs(melem_table(sol, "phi"))
            for i in range(6):
                for j in range(6):
                    if i == j:
                        continue
                    expected = conjugate_identity_factor(sol, i, j) * p_tab[i, j]
                    if expected > 1e-12:
                        worst = max(worst, abs(n_tab[i, j] - expected) / expected)
        assert worst < 1e-6

    def test_sin_half_phi_vanishes_at_half_flux(self, sol_half_flux, sol_integer_flux):
        mag_half, _ = matrix_element(sol_half_flux, "sin_half_phi", 0, 1)
        mag_zero, _ = matrix_element(sol_integer_flux, "sin_half_phi", 0, 1)
        assert mag_half < 1e-8 * mag_zero

    def test_charge_element_maximal_near_integer_flux(self, paper_params):
        mags = []
        for frac in (0.0, 0.25, 0.5):
            sol = diagonalize(paper_params.with_phi_ext(2 * np.pi * frac), 4)
            mags.append(matrix_element(sol, "n", 0, 1)[0])
        assert mags[0] == max(mags)

    def test_diagonal_real_and_hermitian_symmetry(self, sol_half_flux):
        n_tab = melem_table(sol_half_flux, "n")
        p_tab = melem_table(sol_half_flux, "phi")
        assert np.max(np.abs(p_tab - p_tab.T)) < 1e-12
        # n is i * (real antisymmetric): diagonal zero, conjugate-symmetric
        assert np.max(np.abs(np.diag(n_tab))) < 1e-12
        assert np.max(np.abs(n_tab - n_tab.conj().T)) < 1e-12

    def test_index_bounds(self, sol_half_flux):
        with pytest.raises(ValidationError):
            matrix_element(sol_half_flux, "phi", 0, 6)
        with pytest.raises(ValidationError):
            matrix_element(sol_half_flux, "psi", 0, 1)


class TestFluxSensitivity:
    def test_zero_at_sweet_spots(self, paper_params):
        # 10 Hz per milli-Phi_0 tolerance at the symmetry points
        tol = 10.0 / 1e-3
        assert abs(flux_sensitivity(paper_params)) < tol
        assert abs(flux_sensitivity(paper_params.with_phi_ext(0.0))) < tol

    def test_against_polynomial_fit(self, paper_params):
        params = paper_params.with_phi_ext(np.pi * (1 - 2 * 0.01))
        x0 = params.phi_ext / (2 * np.pi)
        xs = x0 + np.linspace(-2e-4, 2e-4, 5)
        f01 = [diagonalize(params.with_phi_ext(2 * np.pi * x), 2).frequency(0, 1) for x in xs]
        poly = np.polynomial.Polynomial.fit(xs, f01, 3)
        expected = poly.deriv()(x0)
        assert flux_sensitivity(params) == pytest.approx(expected, rel=1e-3)

    def test_richardson_consistent(self, paper_params):
        params = paper_params.with_phi_ext(np.pi * 0.9)
        plain = flux_sensitivity(params)
        rich = flux_sensitivity(params, richardson=True)
        assert rich == pytest.approx(plain, rel=1e-5)


class TestFieldDependence:
    fm = FieldModelParams(
        ej0=6.814e9, b_delta=2.2, b_phi0=857.0, b_c=487.0, gap_delta0=3.45e-23, x_qp0=1e-7
    )

    def test_sinc_center(self):
        fd = field_dependence(self.fm, self.fm.b_delta, 0.05)
        assert fd.e_j == pytest.approx(self.fm.ej0, rel=1e-14)

    def test_junction_length(self):
        length = fraunhofer_junction_length(857.0)
        assert length == pytest.approx(240e-9, rel=0.05)

    def test_delta_x_qp_order(self):
        fd = field_dependence(self.fm, 100.0, 0.05)
        assert 1e-23 < fd.delta_x_qp < 1e-21
        assert fd.gap == pytest.approx(self.fm.gap_delta0 * np.sqrt(1 - (100 / 487) ** 2))

    def test_beyond_critical_field(self):
        with pytest.raises(DomainError):
            field_dependence(self.fm, 487.0, 0.05)

    def test_x_qp_thermal_monotone(self):
        assert x_qp_thermal(3.45e-23, 0.1) > x_qp_thermal(3.45e-23, 0.05)


class TestDispersiveShifts:
    def test_decoupled_limit(self, paper_params):
        res = ResonatorParams(f_res=7.439e9, g=1e-6, q_factor=1e4)
        chi0, chi1 = dispersive_shifts(paper_params, res)
        assert abs(chi0) < 1e-9 and abs(chi1) < 1e-9

    def test_quadratic_in_g(self, paper_params):
        res1 = ResonatorParams(f_res=7.439e9, g=62.3e6, q_factor=1e4)
        res2 = ResonatorParams(f_res=7.439e9, g=124.6e6, q_factor=1e4)
        chi0_1, chi1_1 = dispersive_shifts(paper_params, res1)
        chi0_2, chi1_2 = dispersive_shifts(paper_params, res2)
        assert chi0_2 == pytest.approx(4 * chi0_1, rel=0.05)
        assert chi1_2 == pytest.approx(4 * chi1_1, rel=0.05)

    def test_against_joint_diagonalization(self, paper_params, paper_resonator):
        chi0, chi1 = dispersive_shifts(paper_params, paper_resonator)
        ref0, ref1 = joint_diagonalization_shifts(paper_params, paper_resonator)
        # second-order theory vs exact coupled diagonalization
        assert chi1 - chi0 == pytest.approx(ref1 - ref0, rel=0.05)
        assert chi0 == pytest.approx(ref0, rel=0.05)
        assert chi1 == pytest.approx(ref1, rel=0.05)

    def test_degeneracy_error_names_transition(self, paper_params):
        sol = diagonalize(paper_params, 6)
        f03 = sol.frequency(0, 3)
        res = ResonatorParams(f_res=f03 + 1e5, g=124.6e6, q_factor=1e4)
        with pytest.raises(DegeneracyError, match=r"\|0> <-> \|3>"):
            dispersive_shifts(paper_params, res)


def joint_diagonalization_shifts(params, res, n_qubit=8, n_photon=6):
    """Dispersive shifts from exact diagonalization of the coupled Hamiltonian."""
    sol = diagonalize(params, n_qubit)
    n_tab = melem_table(sol, "n")
    e_q = sol.energies - sol.energies[0]
    dim = n_qubit * n_photon
    h = np.zeros((dim, dim), dtype=complex)
    a = np.diag(np.sqrt(np.arange(1, n_photon)), 1)
    x_ph = a + a.T
    n_ph = np.diag(np.arange(n_photon, dtype=float))
    h += np.kron(np.diag(e_q), np.eye(n_photon))
    h += res.f_res * np.kron(np.eye(n_qubit), n_ph)
    h += res.g * np.kron(n_tab, x_ph)
    evals, evecs = np.linalg.eigh(h)

    def dressed_energy(i_qubit, n_phot):
        target = np.zeros(dim)
        target[i_qubit * n_photon + n_phot] = 1.0
        overlaps = np.abs(evecs.conj().T @ target) ** 2
        return evals[np.argmax(overlaps)]

    shifts = []
    for i in (0, 1):
        f_dressed = dressed_energy(i, 1) - dressed_energy(i, 0)
        shifts.append(f_dressed - res.f_res)
    return shifts
