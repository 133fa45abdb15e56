"""Fluxonium circuit spectrum: Hamiltonian diagonalization and derived quantities.

The circuit Hamiltonian is

    H = 4 E_C n^2 - E_J cos(phi) + (1/2) E_L (phi - phi_ext)^2,

with all energies expressed as frequencies (Hz).  Diagonalization uses the
harmonic-oscillator eigenbasis of the LC part; ``cos(phi)`` and
``sin(phi/2)`` are evaluated as matrix functions through the eigendecomposition
of the truncated ``phi`` operator, so a single mechanism serves both the
Hamiltonian build and every matrix-element kind.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .constants import K_B, PHI_0
from .errors import ConvergenceError, DegeneracyError, DomainError, ValidationError

DEFAULT_BASIS_DIM = 120
MAX_BASIS_DIM = 240
BASIS_GROWTH = 20
BASIS_MARGIN = 40  # basis_dim must exceed the requested level count by this
CONVERGENCE_RTOL = 1e-10
FLUX_DERIVATIVE_STEP = 1e-5  # Phi_0
DISPERSIVE_MIN_DETUNING = 1e6  # Hz

_MELEM_KINDS = ("phi", "n", "sin_half_phi")


@dataclass(frozen=True)
class CircuitParams:
    """Fluxonium energies (Hz = E/h) and external phase bias (rad)."""

    e_c: float
    e_j: float
    e_l: float
    phi_ext: float

    def __post_init__(self):
        if not (self.e_c > 0 and self.e_l > 0):
            raise ValidationError("e_c and e_l must be positive")
        # e_j = 0 is the harmonic-oscillator limit and is allowed
        if self.e_j < 0:
            raise ValidationError("e_j must be nonnegative")
        if not np.isfinite(self.phi_ext):
            raise ValidationError("phi_ext must be finite")

    def with_phi_ext(self, phi_ext: float) -> "CircuitParams":
        return CircuitParams(self.e_c, self.e_j, self.e_l, phi_ext)

    @property
    def phi_zpf(self) -> float:
        """Zero-point phase fluctuation of the LC oscillator."""
        return (8.0 * self.e_c / self.e_l) ** 0.25 / np.sqrt(2.0)

    @property
    def n_zpf(self) -> float:
        """Zero-point Cooper-pair-number fluctuation of the LC oscillator."""
        return (self.e_l / (8.0 * self.e_c)) ** 0.25 / np.sqrt(2.0)

    @property
    def f_osc(self) -> float:
        """LC oscillator frequency sqrt(8 E_C E_L), Hz."""
        return np.sqrt(8.0 * self.e_c * self.e_l)


@dataclass(frozen=True)
class ResonatorParams:
    """Readout resonator: bare frequency, coupling, loaded Q, line impedance."""

    f_res: float
    g: float
    q_factor: float
    z0: float = 50.0

    def __post_init__(self):
        if min(self.f_res, self.g, self.q_factor, self.z0) <= 0:
            raise ValidationError("all resonator parameters must be positive")

    @property
    def omega_res(self) -> float:
        return 2.0 * np.pi * self.f_res

    @property
    def kappa(self) -> float:
        return self.omega_res / self.q_factor


@dataclass(frozen=True)
class FieldModelParams:
    """In-plane magnetic-field response of the junction and superconducting gap.

    ``ej0`` is the zero-field Josephson energy (Hz), ``b_delta`` the field
    offset (G), ``b_phi0`` the one-flux-quantum Fraunhofer period (G),
    ``b_c`` the Ginzburg-Landau critical field (G), ``gap_delta0`` the
    zero-field gap (J) and ``x_qp0`` the residual quasiparticle density.
    """

    ej0: float
    b_delta: float
    b_phi0: float
    b_c: float
    gap_delta0: float
    x_qp0: float = 0.0

    def __post_init__(self):
        if self.b_phi0 <= 0 or self.b_c <= 0:
            raise ValidationError("b_phi0 and b_c must be positive")


@dataclass(frozen=True)
class EigenSolution:
    """Eigenenergies (Hz) and eigenvectors in the truncated oscillator basis."""

    energies: np.ndarray  # (n_levels,)
    vectors: np.ndarray  # (basis_dim, n_levels), unit-norm columns
    basis_dim: int
    params: CircuitParams
    _melem_cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        if self.basis_dim < len(self.energies) + BASIS_MARGIN:
            raise ValidationError(
                f"basis_dim {self.basis_dim} too small for "
                f"{len(self.energies)} levels (needs +{BASIS_MARGIN} margin)"
            )

    @property
    def n_levels(self) -> int:
        return len(self.energies)

    def frequency(self, i: int, j: int) -> float:
        """Transition frequency f_ij = E_j - E_i in Hz (signed)."""
        return self.energies[j] - self.energies[i]


@functools.lru_cache(maxsize=8)
def _ladder_eigensystem(dim: int):
    """Eigendecomposition of Q = a + a^dag in the number basis (cached)."""
    off = np.sqrt(np.arange(1, dim, dtype=float))
    q, w = eigh_tridiagonal(np.zeros(dim), off)
    return q, w


def _phase_matrix_function(params: CircuitParams, dim: int, func) -> np.ndarray:
    """func(phi_hat) in the oscillator basis via eigendecomposition of phi_hat."""
    q, w = _ladder_eigensystem(dim)
    return (w * func(params.phi_zpf * q)) @ w.T


def _hamiltonian(params: CircuitParams, dim: int) -> np.ndarray:
    q, w = _ladder_eigensystem(dim)
    phi_vals = params.phi_zpf * q
    h = (w * (-params.e_j * np.cos(phi_vals) - params.e_l * params.phi_ext * phi_vals)) @ w.T
    diag = params.f_osc * (np.arange(dim) + 0.5) + 0.5 * params.e_l * params.phi_ext**2
    h[np.diag_indices(dim)] += diag
    return h


def _fix_vector_signs(vectors: np.ndarray) -> np.ndarray:
    """Deterministic gauge: largest-magnitude component of each column positive."""
    idx = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[idx, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def diagonalize(
    params: CircuitParams, n_levels: int, basis_dim: int | None = None, check: bool = True
) -> EigenSolution:
    """Diagonalize the fluxonium Hamiltonian to the requested number of levels.

    The basis starts at ``basis_dim`` (default 120) and grows in steps of 20 up
    to 240 until increasing it by a further 20 changes each of the lowest
    max(10, n_levels) energies by less than 1e-10 relative.  ``check=False``
    skips the growth validation (single solve at the starting size), intended
    for iterative explorations that re-validate their final answer.

    Raises
    ------
    ConvergenceError
        if the doubling-check rule is still violated at the maximum basis size;
        the message reports the achieved residual.
    """
    if n_levels < 2:
        raise ValidationError("n_levels must be at least 2")
    start = max(DEFAULT_BASIS_DIM, n_levels + BASIS_MARGIN)
    if basis_dim is not None:
        if basis_dim < n_levels + BASIS_MARGIN:
            raise ValidationError("basis_dim must be at least n_levels + 40")
        start = basis_dim

    if not check:
        evals, evecs = np.linalg.eigh(_hamiltonian(params, start))
        return EigenSolution(
            energies=evals[:n_levels].copy(),
            vectors=_fix_vector_signs(evecs[:, :n_levels]).copy(),
            basis_dim=start,
            params=params,
        )

    n_check = max(10, n_levels)
    residual = np.inf
    dim = start
    while dim <= MAX_BASIS_DIM:
        evals, evecs = np.linalg.eigh(_hamiltonian(params, dim))
        evals_grown = np.linalg.eigvalsh(_hamiltonian(params, dim + BASIS_GROWTH))
        scale = np.maximum(np.abs(evals_grown[:n_check]), 1.0)
        residual = np.max(np.abs(evals[:n_check] - evals_grown[:n_check]) / scale)
        if residual < CONVERGENCE_RTOL:
            return EigenSolution(
                energies=evals[:n_levels].copy(),
                vectors=_fix_vector_signs(evecs[:, :n_levels]).copy(),
                basis_dim=dim,
                params=params,
            )
        dim += BASIS_GROWTH
    raise ConvergenceError(
        f"spectrum not converged at basis_dim={MAX_BASIS_DIM}: "
        f"residual {residual:.3e} exceeds {CONVERGENCE_RTOL:.0e}"
    )


def melem_table(sol: EigenSolution, kind: str) -> np.ndarray:
    """All matrix elements <i|O|j> for the given operator kind.

    Returns an (n, n) array; real for ``phi`` and ``sin_half_phi``, purely
    imaginary (complex dtype) for ``n``.  Tables are cached on the solution.
    """
    if kind not in _MELEM_KINDS:
        raise ValidationError(f"unknown operator kind {kind!r}; use one of {_MELEM_KINDS}")
    if kind in sol._melem_cache:
        return sol._melem_cache[kind]
    dim = sol.basis_dim
    v = sol.vectors
    if kind == "phi":
        op = _phase_matrix_function(sol.params, dim, lambda x: x)
        table = v.T @ op @ v
    elif kind == "sin_half_phi":
        op = _phase_matrix_function(sol.params, dim, lambda x: np.sin(x / 2.0))
        table = v.T @ op @ v
    else:  # n
        lowering = np.diag(np.sqrt(np.arange(1, dim, dtype=float)), 1)
        op = sol.params.n_zpf * (lowering.T - lowering)
        table = 1j * (v.T @ op @ v)
    sol._melem_cache[kind] = table
    return table


def matrix_element(sol: EigenSolution, kind: str, i: int, j: int):
    """Matrix element <i|O|j> for O in {phi, n, sin(phi/2)}.

    Returns ``(magnitude, value)``; the value is real for phase-type operators
    and purely imaginary for the Cooper-pair number operator.
    """
    n = sol.n_levels
    if not (0 <= i < n and 0 <= j < n):
        raise ValidationError(f"level indices ({i}, {j}) out of range for {n} levels")
    value = melem_table(sol, kind)[i, j]
    return abs(value), value


def flux_sensitivity(
    params: CircuitParams,
    i: int = 0,
    j: int = 1,
    step: float = FLUX_DERIVATIVE_STEP,
    richardson: bool = False,
    n_levels: int | None = None,
) -> float:
    """Central-difference derivative of f_ij with respect to Phi_ext/Phi_0 (Hz per Phi_0).

    ``step`` is in units of Phi_0.  With ``richardson`` the two-step Richardson
    extrapolation of the central difference is returned.
    """
    n_levels = n_levels if n_levels is not None else max(i, j) + 1
    n_levels = max(n_levels, 2)

    def f_of_x(x):
        sol = diagonalize(params.with_phi_ext(2.0 * np.pi * x), n_levels)
        return sol.frequency(i, j)

    x0 = params.phi_ext / (2.0 * np.pi)

    def central(h):
        return (f_of_x(x0 + h) - f_of_x(x0 - h)) / (2.0 * h)

    if not richardson:
        return central(step)
    d1 = central(step)
    d2 = central(step / 2.0)
    return (4.0 * d2 - d1) / 3.0


def x_qp_thermal(gap: float, temperature: float) -> float:
    """Thermal-equilibrium quasiparticle density for gap (J) at temperature (K)."""
    ratio = gap / (K_B * temperature)
    return np.sqrt(2.0 * np.pi / ratio) * np.exp(-ratio)


@dataclass(frozen=True)
class FieldDependence:
    e_j: float  # Hz
    gap: float  # J
    delta_x_qp: float


def field_dependence(fm: FieldModelParams, b: float, t: float) -> FieldDependence:
    """Junction energy, gap, and excess quasiparticle density at in-plane field b (G).

    E_J follows the Fraunhofer form ``ej0 * |sinc((b - b_delta)/b_phi0)|`` with
    the normalized sinc, the gap the Ginzburg-Landau suppression
    ``gap_delta0 * sqrt(1 - b^2/b_c^2)``, and ``delta_x_qp`` the change of the
    thermal quasiparticle density caused by the gap suppression.
    """
    e_j = fm.ej0 * abs(np.sinc((b - fm.b_delta) / fm.b_phi0))
    if abs(b) >= fm.b_c:
        raise DomainError(f"|b|={abs(b):g} G is at or beyond the critical field {fm.b_c:g} G")
    gap = fm.gap_delta0 * np.sqrt(1.0 - (b / fm.b_c) ** 2)
    delta_x_qp = x_qp_thermal(gap, t) - x_qp_thermal(fm.gap_delta0, t)
    return FieldDependence(e_j=e_j, gap=gap, delta_x_qp=delta_x_qp)


def fraunhofer_junction_length(
    b_phi0_gauss: float, penetration_depth: float = 50e-9, oxide_thickness: float = 1e-9
) -> float:
    """Effective junction length (m) implied by a Fraunhofer period (G).

    Uses Phi_0 = B_Phi0 * l * (2*lambda + a) with the field converted to tesla.
    """
    b_phi0_tesla = b_phi0_gauss * 1e-4
    return PHI_0 / (b_phi0_tesla * (2.0 * penetration_depth + oxide_thickness))


def dispersive_shifts(
    params: CircuitParams,
    res: ResonatorParams,
    n_levels: int = 12,
) -> tuple[float, float]:
    """Resonator dispersive shifts (chi_0, chi_1) in Hz from second-order theory.

    The shift for qubit state i sums over charge-coupled fluxonium transitions:
    chi_i = sum_j g^2 |n_ij|^2 * 2 f_ij / (f_res^2 - f_ij^2).

    Raises
    ------
    DegeneracyError
        naming the colliding transition if any |f_ij| is within 1 MHz of f_res.
    """
    sol = diagonalize(params, n_levels)
    n_table = melem_table(sol, "n")
    chis = []
    for i in (0, 1):
        shift = 0.0
        for j in range(n_levels):
            if j == i:
                continue
            f_ij = sol.frequency(i, j)
            detuning = abs(res.f_res - abs(f_ij))
            if detuning < DISPERSIVE_MIN_DETUNING:
                raise DegeneracyError(
                    f"resonator degenerate with the |{i}> <-> |{j}> transition "
                    f"(detuning {detuning:.3g} Hz < {DISPERSIVE_MIN_DETUNING:.0g} Hz)"
                )
            shift += res.g**2 * abs(n_table[i, j]) ** 2 * 2.0 * f_ij / (res.f_res**2 - f_ij**2)
        chis.append(shift)
    return chis[0], chis[1]


def conjugate_identity_factor(sol: EigenSolution, i: int, j: int) -> float:
    """The factor hbar*omega_ij / (8 E_C) relating |n_ij| to |phi_ij|."""
    return abs(sol.frequency(i, j)) / (8.0 * sol.params.e_c)


def purcell_mutual_inductance(res: ResonatorParams) -> float:
    """Resonator-feedline mutual inductance (H) implied by the loaded Q."""
    return res.z0 / res.omega_res * np.sqrt(np.pi / (2.0 * res.q_factor))


__all__ = [
    "CircuitParams",
    "ResonatorParams",
    "FieldModelParams",
    "EigenSolution",
    "FieldDependence",
    "diagonalize",
    "matrix_element",
    "melem_table",
    "flux_sensitivity",
    "field_dependence",
    "fraunhofer_junction_length",
    "dispersive_shifts",
    "conjugate_identity_factor",
    "x_qp_thermal",
    "purcell_mutual_inductance",
]
