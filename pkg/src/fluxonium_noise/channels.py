"""Noise channels: symmetrized spectral densities and golden-rule transition rates.

Each channel is an immutable value object exposing

* ``symmetrized_psd(omega, params)`` -- the classical (symmetrized) spectrum
  S(omega) in the channel's natural units (documented per class);
* ``coupling_kind`` -- which circuit operator the noise couples to
  (``phi``, ``n`` or ``sin_half_phi``);
* ``coupling_prefactor(params)`` -- the factor (J per unit of the PSD's
  square-root units) multiplying the dimensionless matrix element to form the
  coupling operator D;
* ``effective_temperature(omega)`` -- the bath temperature fixing detailed
  balance at that frequency.

Downward golden-rule rates use the unsymmetrized spectrum
S~(omega) = 2 S(omega) / (1 + exp(-hbar omega / k_B T)); upward rates follow
from detailed balance.  Channels whose spectra are classical (flux noise, the
phenomenological power law) acquire their quantum asymmetry through the same
rule at the channel's bath temperature.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import k0e

from .circuit import CircuitParams, EigenSolution, ResonatorParams, melem_table
from .constants import (
    ALUMINUM_GAP,
    E_CHARGE,
    HBAR,
    H_PLANCK,
    K_B,
    PHI_0,
    bose_occupation,
    coth,
)
from .errors import DomainError, ValidationError

OMEGA_REF_DEFAULT = 2.0 * np.pi * 6e9  # rad/s, dielectric loss-tangent reference


def _require_params(params, kind):
    if params is None:
        raise ValidationError(f"{kind} spectral density requires circuit params")
    return params


@dataclass(frozen=True)
class AttenuationChain:
    """Attenuator stages between a hot source and the sample, coldest last.

    ``stages`` is an ordered sequence of (attenuation_db, temperature_K)
    pairs; each attenuator acts as a beamsplitter passing 1/A of the incoming
    photons and adding (A-1)/A of its own thermal occupation.
    """

    stages: tuple = ()
    source_temperature: float = 300.0

    def __post_init__(self):
        object.__setattr__(self, "stages", tuple(tuple(s) for s in self.stages))
        for att_db, temp in self.stages:
            if att_db < 0:
                raise ValidationError("attenuation_db must be nonnegative")
            if temp <= 0:
                raise ValidationError("stage temperatures must be positive")
        if self.source_temperature <= 0:
            raise ValidationError("source_temperature must be positive")


def attenuated_photon_number(chain: AttenuationChain, omega):
    """Photon occupation after the chain at angular frequency omega (rad/s).

    Applies n_i = n_{i-1}/A_i + (A_i - 1)/A_i * n_B(T_i, omega) over the
    stages, seeded by the thermal occupation of the source.
    """
    if np.any(np.asarray(omega) <= 0):
        raise DomainError("omega must be positive")
    n = bose_occupation(omega, chain.source_temperature)
    for att_db, temp in chain.stages:
        a = 10.0 ** (att_db / 10.0)
        n = n / a + (a - 1.0) / a * bose_occupation(omega, temp)
    return n


def _occupation_temperature(n, omega):
    """Temperature whose Bose occupation at omega equals n."""
    return HBAR * omega / (K_B * np.log1p(1.0 / n))


@dataclass(frozen=True)
class FluxNoise:
    """1/f^alpha flux noise; S_Phi(omega) = a_phi * (2*pi/omega)**alpha.

    ``a_phi`` is the magnitude at 1 Hz in units of Phi_0^2; the PSD is returned
    in Phi_0^2/Hz.
    """

    a_phi: float
    alpha: float
    t_bath: float

    coupling_kind = "phi"

    def __post_init__(self):
        _check_common(self.a_phi, self.alpha, self.t_bath)

    def symmetrized_psd(self, omega, params=None):
        omega = np.asarray(omega, dtype=float)
        if np.any(omega <= 0):
            raise DomainError("flux-noise PSD diverges at omega <= 0")
        return self.a_phi * (2.0 * np.pi / omega) ** self.alpha

    def coupling_prefactor(self, params: CircuitParams):
        # D = (2*pi*E_L/Phi_0) * phi, with the PSD carrying Phi_0^2 units
        return 2.0 * np.pi * H_PLANCK * params.e_l

    def effective_temperature(self, omega=None):
        return self.t_bath


@dataclass(frozen=True)
class Dielectric:
    """Dielectric (capacitive) loss; S_Q in C^2/Hz per the Johnson-Nyquist form.

    tan(delta_C)(omega) = tan_delta0 * (omega/omega_ref)**epsilon.
    """

    tan_delta0: float
    epsilon: float
    t_eff: float
    omega_ref: float = OMEGA_REF_DEFAULT

    coupling_kind = "n"

    def __post_init__(self):
        if self.tan_delta0 < 0:
            raise ValidationError("tan_delta0 must be nonnegative")
        if self.t_eff <= 0:
            raise ValidationError("t_eff must be positive")

    def loss_tangent(self, omega):
        return self.tan_delta0 * (np.asarray(omega) / self.omega_ref) ** self.epsilon

    def symmetrized_psd(self, omega, params=None):
        params = _require_params(params, "dielectric")
        e_c_joule = H_PLANCK * params.e_c
        x = HBAR * np.asarray(omega) / (2.0 * K_B * self.t_eff)
        return (
            E_CHARGE**2 * HBAR / (2.0 * e_c_joule) * self.loss_tangent(omega) * coth(x)
        )

    def coupling_prefactor(self, params: CircuitParams):
        return 4.0 * H_PLANCK * params.e_c / E_CHARGE

    def effective_temperature(self, omega=None):
        return self.t_eff


@dataclass(frozen=True)
class Inductive:
    """Generic inductive loss with quality factor q_l; PSD in Phi_0^2/Hz."""

    q_l: float
    t_eff: float

    coupling_kind = "phi"

    def __post_init__(self):
        if self.q_l <= 0 or self.t_eff <= 0:
            raise ValidationError("q_l and t_eff must be positive")

    def symmetrized_psd(self, omega, params=None):
        params = _require_params(params, "inductive")
        e_l_joule = H_PLANCK * params.e_l
        x = HBAR * np.asarray(omega) / (2.0 * K_B * self.t_eff)
        return HBAR / (4.0 * np.pi**2 * e_l_joule * self.q_l) * coth(x)

    def coupling_prefactor(self, params: CircuitParams):
        return 2.0 * np.pi * H_PLANCK * params.e_l

    def effective_temperature(self, omega=None):
        return self.t_eff


def _qp_psd_per_ej(omega, gap, t, x_qp):
    """Quasiparticle current-noise PSD divided by the junction energy (E_J in J).

    Normalizing by E_J makes the spectrum reusable for the junction array,
    where the role of E_J is played by E_L.
    """
    omega = np.asarray(omega, dtype=float)
    r_k = H_PLANCK / E_CHARGE**2
    x = HBAR * np.abs(omega) / (2.0 * K_B * t)
    # K0(x)*sinh(x) evaluated without overflow via the scaled Bessel function
    k0_sinh = k0e(x) * 0.5 * -np.expm1(-2.0 * x)
    re_y_per_ej = (
        np.sqrt(2.0 / np.pi)
        * 8.0
        / (r_k * gap)
        * (2.0 * gap / (HBAR * omega)) ** 1.5
        * x_qp
        * np.sqrt(x)
        * k0_sinh
    )
    return HBAR * omega * re_y_per_ej * coth(x)


@dataclass(frozen=True)
class QpJunction:
    """Quasiparticle tunneling across the small junction.

    ``symmetrized_psd`` returns the spectrum normalized by E_J (units of the
    full current-noise PSD divided by joules); the junction energy re-enters
    through the coupling prefactor.
    """

    x_qp: float
    gap: float = ALUMINUM_GAP
    t: float = 0.05

    coupling_kind = "sin_half_phi"

    def __post_init__(self):
        if self.x_qp < 0 or self.gap <= 0 or self.t <= 0:
            raise ValidationError("x_qp >= 0 and gap, t > 0 required")

    def symmetrized_psd(self, omega, params=None):
        return _qp_psd_per_ej(omega, self.gap, self.t, self.x_qp)

    def coupling_prefactor(self, params: CircuitParams):
        return PHI_0 / np.pi * np.sqrt(H_PLANCK * params.e_j)

    def effective_temperature(self, omega=None):
        return self.t


@dataclass(frozen=True)
class QpArray:
    """Quasiparticle tunneling in the junction array (per-junction phase/2 form)."""

    x_qpa: float
    gap: float = ALUMINUM_GAP
    t: float = 0.05

    coupling_kind = "phi"

    def __post_init__(self):
        if self.x_qpa < 0 or self.gap <= 0 or self.t <= 0:
            raise ValidationError("x_qpa >= 0 and gap, t > 0 required")

    def symmetrized_psd(self, omega, params=None):
        return _qp_psd_per_ej(omega, self.gap, self.t, self.x_qpa)

    def coupling_prefactor(self, params: CircuitParams):
        # phi/2 coupling with the array energy E_L standing in for E_J
        return PHI_0 / (2.0 * np.pi) * np.sqrt(H_PLANCK * params.e_l)

    def effective_temperature(self, omega=None):
        return self.t


def purcell_input_impedance(res: ResonatorParams, omega):
    """Impedance seen by the qubit through the quarter-wave readout resonator.

    Evaluates Z_in = Z0 (w^2 M^2 cot(t) + 2j Z0^2) / (2 Z0^2 cot(t) + j w^2 M^2)
    with t = pi*omega/(2*omega_res) and M set by the loaded Q, switching between
    the cot and tan forms to stay well-conditioned near the poles of either.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise DomainError("omega must be positive")
    m = res.z0 / res.omega_res * np.sqrt(np.pi / (2.0 * res.q_factor))
    theta = np.pi * omega / (2.0 * res.omega_res)
    tan = np.tan(theta)
    wm2 = omega**2 * m**2
    z0 = res.z0
    with np.errstate(divide="ignore", invalid="ignore"):
        # cot form, stable where |tan| >= 1
        cot = 1.0 / tan
        z_cot = z0 * (wm2 * cot + 2j * z0**2) / (2.0 * z0**2 * cot + 1j * wm2)
        # tan form, stable where |tan| < 1
        z_tan = z0 * (wm2 + 2j * z0**2 * tan) / (2.0 * z0**2 + 1j * wm2 * tan)
    return np.where(np.abs(tan) >= 1.0, z_cot, z_tan)[()]


@dataclass(frozen=True)
class PurcellChannel:
    """Purcell decay through the readout resonator into the feedline.

    The PSD is the effective voltage noise at the qubit node,
    S_V = hbar*omega * (C_c/C_Sigma)**cc_exponent * Re[Z_in] * coth(...), and
    the coupling is the bare gate-charge operator 2e*n.  ``cc_exponent`` is 1
    as printed in the source expression; 2 restores the conventional square.
    """

    res: ResonatorParams
    t_res: float
    cc_exponent: int = 1

    coupling_kind = "n"

    def __post_init__(self):
        if self.t_res <= 0:
            raise ValidationError("t_res must be positive")
        if self.cc_exponent not in (1, 2):
            raise ValidationError("cc_exponent must be 1 or 2")

    def cc_ratio(self):
        """C_c / C_Sigma implied by the coupling g (independent of E_C)."""
        return (
            HBAR
            * 2.0
            * np.pi
            * self.res.g
            / (2.0 * self.res.omega_res * E_CHARGE)
            * np.sqrt(np.pi / (2.0 * HBAR * self.res.z0))
        )

    def symmetrized_psd(self, omega, params=None):
        omega = np.asarray(omega, dtype=float)
        x = HBAR * omega / (2.0 * K_B * self.t_res)
        re_zin = np.real(purcell_input_impedance(self.res, omega))
        return HBAR * omega * self.cc_ratio() ** self.cc_exponent * re_zin * coth(x)

    def coupling_prefactor(self, params: CircuitParams):
        return 2.0 * E_CHARGE

    def effective_temperature(self, omega=None):
        return self.t_res


@dataclass(frozen=True)
class ChargeLine:
    """Radiative decay to the charge-drive line (V^2/Hz voltage noise)."""

    c_d: float
    chain: AttenuationChain
    z0: float = 50.0

    coupling_kind = "n"

    def __post_init__(self):
        if self.c_d <= 0 or self.z0 <= 0:
            raise ValidationError("c_d and z0 must be positive")

    def symmetrized_psd(self, omega, params=None):
        omega = np.asarray(omega, dtype=float)
        n = attenuated_photon_number(self.chain, omega)
        return self.z0 * HBAR * omega * (2.0 * n + 1.0)

    def coupling_prefactor(self, params: CircuitParams):
        return 4.0 * H_PLANCK * params.e_c * self.c_d / E_CHARGE

    def effective_temperature(self, omega):
        return _occupation_temperature(attenuated_photon_number(self.chain, omega), omega)


@dataclass(frozen=True)
class FluxLine:
    """Radiative decay to the flux-drive line (A^2/Hz current noise)."""

    m_d: float
    chain: AttenuationChain
    z0: float = 50.0
    l_total: float = 1e-7

    coupling_kind = "phi"

    def __post_init__(self):
        if self.m_d <= 0 or self.z0 <= 0 or self.l_total <= 0:
            raise ValidationError("m_d, z0 and l_total must be positive")

    def symmetrized_psd(self, omega, params=None):
        omega = np.asarray(omega, dtype=float)
        n = attenuated_photon_number(self.chain, omega)
        re_y = self.z0 / (self.z0**2 + omega**2 * (self.m_d**2 / self.l_total) ** 2)
        return HBAR * omega * re_y * (2.0 * n + 1.0)

    def coupling_prefactor(self, params: CircuitParams):
        return 2.0 * np.pi * H_PLANCK * params.e_l * self.m_d / PHI_0

    def effective_temperature(self, omega):
        return _occupation_temperature(attenuated_photon_number(self.chain, omega), omega)


@dataclass(frozen=True)
class PhenomPowerLaw:
    """Phenomenological power-law model for the normalized rate Gamma_1/|n01|^2.

    Defines flux and charge noise spectra S_Phi = a*omega^-alpha*T^beta1 and
    S_Q = b*omega^gamma*T^beta2; valid only for two-level evaluation.
    ``symmetrized_psd`` returns the normalized rate itself (1/s).
    """

    a: float
    alpha: float
    beta1: float
    b: float
    gamma: float
    beta2: float
    t: float

    coupling_kind = "n"
    two_level_only = True

    def __post_init__(self):
        if self.a < 0 or self.b < 0:
            raise ValidationError("prefactors must be nonnegative")
        if self.t <= 0:
            raise ValidationError("t must be positive")

    def normalized_rate(self, omega, params: CircuitParams):
        """Gamma_1 / |n01|^2 at angular frequency omega (1/s)."""
        omega = np.asarray(omega, dtype=float)
        if np.any(omega <= 0):
            raise DomainError("omega must be positive")
        e_c = H_PLANCK * params.e_c
        e_l = H_PLANCK * params.e_l
        phi0_bar = PHI_0 / (2.0 * np.pi)
        flux_term = (8.0 * e_c * e_l / (HBAR**2 * phi0_bar)) ** 2 * (
            self.a * omega ** (-self.alpha - 2.0) * self.t**self.beta1
        )
        charge_term = (4.0 * e_c / (E_CHARGE * HBAR)) ** 2 * (
            self.b * omega**self.gamma * self.t**self.beta2
        )
        return flux_term + charge_term

    def symmetrized_psd(self, omega, params=None):
        params = _require_params(params, "phenomenological power-law")
        return self.normalized_rate(omega, params)

    def coupling_prefactor(self, params: CircuitParams):
        raise ValidationError(
            "PhenomPowerLaw has no microscopic coupling operator; "
            "its rates come directly from the normalized-rate form"
        )

    def effective_temperature(self, omega=None):
        return self.t


def _check_common(magnitude, alpha, t):
    if magnitude < 0:
        raise ValidationError("noise magnitude must be nonnegative")
    if not (0.0 < alpha < 3.0):
        raise ValidationError("alpha must lie in (0, 3)")
    if t <= 0:
        raise ValidationError("temperature must be positive")


NoiseChannel = (
    FluxNoise
    | Dielectric
    | Inductive
    | QpJunction
    | QpArray
    | PurcellChannel
    | ChargeLine
    | FluxLine
    | PhenomPowerLaw
)


def _gamma1_pair(channel, params: CircuitParams, omega, melem_sq):
    """Total two-sided rate (2/hbar^2)|D|^2 S(omega); omega may be an array."""
    if isinstance(channel, PhenomPowerLaw):
        return channel.normalized_rate(omega, params) * melem_sq
    pref = channel.coupling_prefactor(params)
    return 2.0 / HBAR**2 * pref**2 * melem_sq * channel.symmetrized_psd(omega, params)


def transition_rates(channel, sol: EigenSolution, i: int, j: int):
    """Golden-rule rates (Gamma_i->j, Gamma_j->i) between levels i and j (1/s).

    The downward rate uses S~(omega) = 2 S(omega)/(1 + exp(-hbar omega/k_B T));
    the upward rate follows from detailed balance at the channel's effective
    temperature.
    """
    if i == j:
        raise ValidationError("transition_rates requires i != j")
    n = sol.n_levels
    if not (0 <= i < n and 0 <= j < n):
        raise ValidationError(f"level indices ({i}, {j}) out of range for {n} levels")
    lo, hi = (i, j) if sol.energies[i] <= sol.energies[j] else (j, i)
    omega = 2.0 * np.pi * (sol.energies[hi] - sol.energies[lo])
    if omega == 0.0:
        raise DomainError(f"levels {i} and {j} are degenerate; golden rule undefined")

    if isinstance(channel, PhenomPowerLaw):
        if {i, j} != {0, 1}:
            raise ValidationError(
                "PhenomPowerLaw is a two-level model; only the (0, 1) transition is defined"
            )
        melem_sq = abs(melem_table(sol, "n")[lo, hi]) ** 2
        total = channel.normalized_rate(omega, sol.params) * melem_sq
    else:
        melem_sq = abs(melem_table(sol, channel.coupling_kind)[lo, hi]) ** 2
        total = _gamma1_pair(channel, sol.params, omega, melem_sq)

    x = HBAR * omega / (K_B * channel.effective_temperature(omega))
    boltz = np.exp(-x)
    down = total / (1.0 + boltz)
    up = down * boltz  # detailed balance holds to machine precision
    if i == hi:
        return down, up
    return up, down


@dataclass(frozen=True)
class Gamma1Breakdown:
    """Two-level depolarization rate with the per-channel contributions."""

    total: float
    per_channel: tuple = field(default_factory=tuple)  # (label, rate) pairs

    def t1(self) -> float:
        return 1.0 / self.total


def channel_label(channel) -> str:
    return type(channel).__name__


def gamma1_two_level(channels, sol: EigenSolution) -> Gamma1Breakdown:
    """Total Gamma_1 = sum over channels of (Gamma_0->1 + Gamma_1->0)."""
    channels = list(channels)
    if not channels:
        raise ValidationError("at least one noise channel is required")
    contributions = []
    for ch in channels:
        up, down = transition_rates(ch, sol, 0, 1)
        contributions.append((channel_label(ch), up + down))
    total = sum(rate for _, rate in contributions)
    return Gamma1Breakdown(total=total, per_channel=tuple(contributions))


def effective_inductive_q(a_phi: float, alpha: float, e_l: float, t: float, omega: float):
    """Inductive Q equivalently describing 1/f^alpha flux noise at omega.

    Implements 1/Q_L = 4 pi^3 E_L (omega/2pi)^(1-alpha) A_Phi / (k_B T Phi_0^2)
    with ``a_phi`` in Phi_0^2 units and ``e_l`` in Hz.
    """
    e_l_joule = H_PLANCK * e_l
    f = omega / (2.0 * np.pi)
    inv_q = 4.0 * np.pi**3 * e_l_joule / (K_B * t) * f ** (1.0 - alpha) * a_phi
    return 1.0 / inv_q


__all__ = [
    "AttenuationChain",
    "FluxNoise",
    "Dielectric",
    "Inductive",
    "QpJunction",
    "QpArray",
    "PurcellChannel",
    "ChargeLine",
    "FluxLine",
    "PhenomPowerLaw",
    "NoiseChannel",
    "Gamma1Breakdown",
    "attenuated_photon_number",
    "purcell_input_impedance",
    "transition_rates",
    "gamma1_two_level",
    "effective_inductive_q",
    "channel_label",
]
