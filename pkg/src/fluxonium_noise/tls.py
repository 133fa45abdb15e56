"""Standard-tunneling-model loss tangents: resonant and relaxation absorption.

The relaxation branch integrates the printed two-level-system response over
the defect density of states in (energy, relaxation-time) variables; its
high-frequency limit is a pure power law in temperature, tan(delta) ~ T^d/omega,
with d the phonon-bath dimension.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.constants import epsilon_0
from scipy.integrate import quad

from .constants import HBAR, K_B, coth
from .errors import DomainError, QuadratureError, ValidationError

__all__ = [
    "TlsEnsemble",
    "PhononBath",
    "AsymptoticLoss",
    "resonant_loss_tangent",
    "tau1_phonon",
    "tau_min",
    "relaxation_loss_tangent",
    "relaxation_loss_asymptotic",
    "sech_coth_moment",
]

# Unit-hypersphere surface areas S_d for d = 0, 1, 2
SPHERE_SURFACE = {0: 2.0, 1: 2.0 * np.pi, 2: 4.0 * np.pi}

ENERGY_CUTOFF_KT = 30.0  # sech^2 suppression < 1e-12 beyond E = 30 k_B T
ASYMPTOTIC_GUARD = 10.0  # validity requires omega * tau_min(2 k_B T) above this

_moment_cache: dict[int, float] = {}


@dataclass(frozen=True)
class TlsEnsemble:
    """TLS bath: density of states P (1/(J m^3)), dipole (C m), host eps_r."""

    p_density: float
    dipole: float
    eps_r: float
    n_c: float = 1.0

    def __post_init__(self):
        if min(self.p_density, abs(self.dipole), self.eps_r, self.n_c) <= 0:
            raise ValidationError("all TLS ensemble parameters must be positive")


@dataclass(frozen=True)
class PhononBath:
    """Phonon environment: elastic dipole (J), sound speed (m/s), d-dim density."""

    gamma_elastic: float
    speed: float
    density_d: float
    dim: int

    def __post_init__(self):
        if self.dim not in (1, 2, 3):
            raise ValidationError("dim must be 1, 2 or 3")
        if min(self.gamma_elastic, self.speed, self.density_d) <= 0:
            raise ValidationError("bath magnitudes must be positive")

    @property
    def xi(self) -> float:
        """Rate prefactor: tau1^-1 = xi * E^(d-2) * Delta_0^2 * coth(E/2kT)."""
        d = self.dim
        return (
            self.gamma_elastic**2
            / self.speed ** (d + 2)
            * np.pi
            * SPHERE_SURFACE[d - 1]
            / (2.0 * np.pi) ** d
            / (HBAR ** (d + 1) * self.density_d)
        )


def resonant_loss_tangent(ens: TlsEnsemble, omega, n_bar, t):
    """Loss tangent from resonant TLS absorption with photon-number saturation."""
    if t <= 0 or np.any(np.asarray(omega) <= 0) or np.any(np.asarray(n_bar) < 0):
        raise DomainError("omega, t must be positive and n_bar nonnegative")
    x = HBAR * np.asarray(omega) / (2.0 * K_B * t)
    return (
        np.pi
        * ens.p_density
        * ens.dipole**2
        / (3.0 * epsilon_0 * ens.eps_r)
        * np.tanh(x)
        / np.sqrt(1.0 + np.asarray(n_bar) / ens.n_c)
    )


def tau1_phonon(bath: PhononBath, energy, delta0, t):
    """Phonon-limited TLS relaxation time (s) at energy E, tunneling Delta_0 (J)."""
    energy = np.asarray(energy, dtype=float)
    delta0 = np.asarray(delta0, dtype=float)
    # group as (delta0/E)^2 * E^d to avoid overflow of E^(d-2) at small E
    rate = bath.xi * (delta0 / energy) ** 2 * energy**bath.dim * coth(
        energy / (2.0 * K_B * t)
    )
    return 1.0 / rate


def tau_min(bath: PhononBath, energy, t):
    """Fastest relaxation time at energy E (Delta_0 = E)."""
    energy = np.asarray(energy, dtype=float)
    with np.errstate(divide="ignore"):
        return 1.0 / (bath.xi * energy**bath.dim * coth(energy / (2.0 * K_B * t)))


def _shell_response(omega, tm):
    """tau_min times the u-integral of sqrt(1-u)/(u^2 + (omega tau_min)^2).

    The substitution u = tau_min/tau maps tau in [tau_min, inf) onto u in
    (0, 1] with a bounded integrand.  Deep in the fast-oscillation regime the
    closed-form limit 2/(3 omega^2 tau_min) avoids the inf * 0 indeterminacy
    of energies where tau_min diverges.
    """
    a = omega * tm
    if not np.isfinite(a) or a > 1e6:
        return 2.0 / (3.0 * omega**2 * tm)
    points = (a,) if 0.0 < a < 1.0 else None
    val, _ = quad(
        lambda u: np.sqrt(1.0 - u) / (u * u + a * a),
        0.0,
        1.0,
        points=points,
        limit=200,
        epsrel=1e-9,
        epsabs=0.0,
    )
    return tm * val


def relaxation_loss_tangent(ens: TlsEnsemble, bath: PhononBath, omega, t, rel_tol=1e-4):
    """TLS relaxation-absorption loss tangent by double quadrature.

    Integrates sqrt(1 - tau_min/tau) sech^2(E/2kT) / (1 + omega^2 tau^2) over
    the defect distribution with prefactor P p^2 omega / (6 eps0 eps_r k_B T).
    The energy integral is cut off at 30 k_B T.
    """
    if omega <= 0 or t <= 0:
        raise DomainError("omega and t must be positive")
    kt = K_B * t

    def shell(energy):
        tm = float(tau_min(bath, energy, t))
        sech = 1.0 / np.cosh(energy / (2.0 * kt))
        return _shell_response(omega, tm) * sech * sech

    val, err = quad(
        shell,
        0.0,
        ENERGY_CUTOFF_KT * kt,
        limit=300,
        epsrel=max(rel_tol / 10.0, 1e-12),
        epsabs=0.0,
    )
    if val != 0.0 and err / abs(val) > rel_tol:
        raise QuadratureError(
            f"relaxation-loss quadrature reached relative error {err / abs(val):.2e} "
            f"(> {rel_tol:g}); estimate {val:.6e}",
            achieved=err / abs(val),
        )
    prefactor = ens.p_density * ens.dipole**2 * omega / (6.0 * epsilon_0 * ens.eps_r * kt)
    return prefactor * val


def sech_coth_moment(d: int) -> float:
    """I_d = integral of u^d sech^2(u) coth(u) du over (0, inf), cached per d."""
    if d not in _moment_cache:
        val, _ = quad(
            lambda u: u**d / np.cosh(u) ** 2 * coth(u), 0.0, 60.0, limit=200, epsrel=1e-12
        )
        _moment_cache[d] = val
    return _moment_cache[d]


@dataclass(frozen=True)
class AsymptoticLoss:
    value: float
    valid: bool
    omega_tau_min: float

    def __float__(self):
        return self.value


def relaxation_loss_asymptotic(ens: TlsEnsemble, bath: PhononBath, omega, t) -> AsymptoticLoss:
    """High-frequency limit of the relaxation loss: proportional to T^d / omega.

    Evaluates (2 P p^2 / 9 eps0 eps_r) * xi * I_d * (2 k_B T)^d / omega.  The
    factor 2 is required for consistency with the high-frequency limit of the
    relaxation integral.  Outside the validity region
    omega * tau_min(2 k_B T) > 10 the result carries ``valid=False``.
    """
    if omega <= 0 or t <= 0:
        raise DomainError("omega and t must be positive")
    d = bath.dim
    wtm = omega * tau_min(bath, 2.0 * K_B * t, t)
    value = (
        2.0
        * ens.p_density
        * ens.dipole**2
        / (9.0 * epsilon_0 * ens.eps_r)
        * bath.xi
        * sech_coth_moment(d)
        * (2.0 * K_B * t) ** d
        / omega
    )
    return AsymptoticLoss(value=value, valid=bool(wtm > ASYMPTOTIC_GUARD), omega_tau_min=wtm)
