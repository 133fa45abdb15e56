"""Physical constants and thermal-factor helpers.

All circuit energies in this package are stored as frequencies (Hz, meaning
E/h); conversions to joules happen here or at the point of use.  Temperatures
are kelvin, angular frequencies rad/s.
"""

import numpy as np
from scipy.constants import e as E_CHARGE  # noqa: F401  (re-exported)
from scipy.constants import h as H_PLANCK
from scipy.constants import hbar as HBAR
from scipy.constants import k as K_B
from scipy.constants import physical_constants

PHI_0 = physical_constants["mag. flux quantum"][0]  # Wb
PHI_0_BAR = PHI_0 / (2.0 * np.pi)  # reduced flux quantum, Wb

# BCS gap of thin-film aluminum used as the default for quasiparticle channels.
ALUMINUM_GAP = 2.09e-23  # J


def thermal_ratio(omega, temperature):
    """hbar*omega / (k_B*T) for angular frequency omega (rad/s) and T (K)."""
    return HBAR * np.asarray(omega) / (K_B * temperature)


def coth(x):
    """Numerically safe coth; x may be an array, |x| must be > 0."""
    x = np.asarray(x, dtype=float)
    return 1.0 / np.tanh(x)


def bose_occupation(omega, temperature):
    """Bose-Einstein occupation n_B at angular frequency omega and temperature T."""
    x = thermal_ratio(omega, temperature)
    return 1.0 / np.expm1(x)
