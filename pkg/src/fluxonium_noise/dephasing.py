"""Spin-echo dephasing under 1/f^alpha flux noise and spin-locking conversion.

The echo coherence function for a power-law flux-noise spectrum is

    chi(t) = t^(1+alpha) * slope^2 * A_Phi * z(alpha),
    z(alpha) = (-2^(1-alpha)) * (-2 + 2^alpha) * Gamma(-1-alpha) * sin(pi*alpha/2),

valid for 0 < alpha < 3, with removable singularities at alpha = 1 (the
Gaussian limit, z(1) = ln 2) and alpha = 2.  ``slope`` is |d(omega_01)/dPhi|
in rad/s per Phi_0 and ``a_phi`` the noise magnitude in Phi_0^2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import gamma as gamma_fn

from .errors import DomainError, ValidationError
from .fitting import least_squares_fit

__all__ = [
    "EchoModel",
    "EchoDataset",
    "EchoTraceFit",
    "FluxNoiseExtraction",
    "z_alpha",
    "echo_coherence",
    "echo_envelope",
    "fit_echo_trace",
    "extract_flux_noise_from_echo",
    "spinlock_flux_psd",
]

RELATIVE_ERROR_REJECTION = 0.3


def z_alpha(alpha):
    """Echo prefactor z(alpha), continuous on (0, 3).

    The poles of Gamma(-1-alpha) at alpha = 1, 2 cancel against the zeros of
    the remaining factors; the function is evaluated in a regrouped form that
    is uniformly stable: the pole at alpha = 1 is removed through
    expm1((alpha-1) ln 2)/(alpha-1) after pulling three recurrence steps out of
    the gamma function, and the alpha = 2 pole through the reflection formula.
    """
    alpha = np.asarray(alpha, dtype=float)
    if np.any(alpha <= 0) or np.any(alpha >= 3):
        raise DomainError("alpha must lie in (0, 3)")
    scalar = alpha.ndim == 0
    alpha = np.atleast_1d(alpha)
    s = alpha - 1.0
    # (2 - 2^alpha)/(1 - alpha), regular everywhere, -> 2 ln 2 at alpha = 1
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = np.where(s != 0.0, 2.0 * np.expm1(s * np.log(2.0)) / np.where(s == 0, 1, s), 2.0 * np.log(2.0))
    out = np.empty_like(alpha)
    low = alpha <= 1.5
    # Gamma(-1-a) = Gamma(2-a) / ((1-a)(-a)(-1-a)); the (1-a) is folded into `ratio`
    out[low] = (
        2.0 ** (1.0 - alpha[low])
        * ratio[low]
        * gamma_fn(2.0 - alpha[low])
        * np.sin(np.pi * alpha[low] / 2.0)
        / (alpha[low] * (1.0 + alpha[low]))
    )
    hi = ~low
    # Gamma(2-a) sin(pi a/2) = -pi / (2 cos(pi a/2) Gamma(a-1)), regular for a > 1
    out[hi] = (
        2.0 ** (1.0 - alpha[hi])
        * ratio[hi]
        * (-np.pi / (2.0 * np.cos(np.pi * alpha[hi] / 2.0) * gamma_fn(alpha[hi] - 1.0)))
        / (alpha[hi] * (1.0 + alpha[hi]))
    )
    return float(out[0]) if scalar else out


@dataclass(frozen=True)
class EchoModel:
    """Parameters of a spin-echo decay trace.

    ``a_phi``: flux-noise magnitude at 1 Hz (Phi_0^2); ``slope``:
    |d omega_01/d Phi| (rad/s per Phi_0); ``t1``/``t_phi_exp``: the exponential
    decay contributions (s).
    """

    a_phi: float
    alpha: float
    slope: float
    t1: float
    t_phi_exp: float = np.inf

    def __post_init__(self):
        if not (0.0 < self.alpha < 3.0):
            raise ValidationError("alpha must lie in (0, 3)")
        if self.t1 <= 0 or self.t_phi_exp <= 0:
            raise ValidationError("decay times must be positive")
        if self.a_phi < 0 or self.slope < 0:
            raise ValidationError("a_phi and slope must be nonnegative")

    @property
    def gamma_tilde(self) -> float:
        """Stretched-decay rate: chi(t) = (gamma_tilde)^2 * t^(1+alpha)."""
        return self.slope * np.sqrt(self.a_phi * z_alpha(self.alpha))

    @property
    def t_phi_echo(self) -> float:
        """Characteristic echo dephasing time, chi(t_phi_echo) = 1."""
        return self.gamma_tilde ** (-2.0 / (1.0 + self.alpha))


def echo_coherence(model: EchoModel, t):
    """Coherence exponent chi(t) >= 0 of the flux-noise echo decay."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("t must be nonnegative")
    return t ** (1.0 + model.alpha) * model.slope**2 * model.a_phi * z_alpha(model.alpha)


def echo_envelope(model: EchoModel, t, amplitude=1.0, offset=0.0):
    """Full echo decay A*exp(-t/2T1 - t/T_phi_exp - chi(t)) + C."""
    t = np.asarray(t, dtype=float)
    decay = -t / (2.0 * model.t1) - t / model.t_phi_exp - echo_coherence(model, t)
    return amplitude * np.exp(decay) + offset


@dataclass(frozen=True)
class EchoTraceFit:
    amplitude: float
    t_phi_echo: float
    offset: float
    t_phi_exp: float
    gamma_tilde: float
    sigmas: dict
    rejected: bool
    residual_norm: float


def fit_echo_trace(times, values, t1, alpha, t_phi_exp=None) -> EchoTraceFit:
    """Fit a spin-echo trace to A exp[-t/2T1 - t/T_exp - (t/T_phi^E)^(1+alpha)] + C.

    ``t1`` and ``alpha`` are held fixed.  ``t_phi_exp`` may be a number (held
    fixed), or None to fit it as a free parameter.  Fits whose relative
    parameter error exceeds 0.3 are flagged ``rejected`` rather than raised.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if times.size < 8:
        raise ValidationError("need at least 8 time points")
    if t1 <= 0:
        raise ValidationError("t1 must be positive")

    free_exp = t_phi_exp is None
    span = times.max() - times.min()
    c0 = float(values[-3:].mean())
    a0 = float(values[:3].mean() - c0)
    t_phi0 = max(span / 3.0, times[times > 0].min() if np.any(times > 0) else span)

    def unpack(p):
        amp, log_tphi, off = p[0], p[1], p[2]
        texp = np.exp(np.clip(p[3], -700.0, 700.0)) if free_exp else t_phi_exp
        return amp, np.exp(np.clip(log_tphi, -700.0, 700.0)), off, texp

    def residuals(p):
        amp, tphi, off, texp = unpack(p)
        chi = (times / tphi) ** (1.0 + alpha)
        return amp * np.exp(-times / (2.0 * t1) - times / texp - chi) + off - values

    p0 = [a0 if a0 != 0 else 1.0, np.log(t_phi0), c0]
    if free_exp:
        p0.append(np.log(10.0 * t_phi0))
    popt, sigma, cost = least_squares_fit(residuals, np.asarray(p0), n_starts=3, seed=7)
    amp, tphi, off, texp = unpack(popt)

    # convert log-parameter sigmas to absolute ones
    sig = {
        "amplitude": sigma[0],
        "t_phi_echo": sigma[1] * tphi,
        "offset": sigma[2],
    }
    if free_exp:
        sig["t_phi_exp"] = sigma[3] * texp
    rel_errors = [
        abs(sig["amplitude"] / amp) if amp != 0 else np.inf,
        abs(sig["t_phi_echo"] / tphi),
    ]
    if free_exp:
        rel_errors.append(abs(sig["t_phi_exp"] / texp))
    rejected = any(not np.isfinite(r) or r > RELATIVE_ERROR_REJECTION for r in rel_errors)
    gamma_tilde = tphi ** (-(1.0 + alpha) / 2.0)
    return EchoTraceFit(
        amplitude=amp,
        t_phi_echo=tphi,
        offset=off,
        t_phi_exp=texp,
        gamma_tilde=gamma_tilde,
        sigmas=sig,
        rejected=rejected,
        residual_norm=float(np.sqrt(2.0 * cost)),
    )


@dataclass(frozen=True)
class EchoDataset:
    """Echo dephasing records: flux-noise susceptibility vs stretched rate.

    ``slopes`` are |d omega_01/d Phi| (rad/s per Phi_0), ``gamma_tildes`` the
    fitted stretched-decay rates (at exponent ``alpha``) and ``sigmas`` their
    uncertainties.  Raw traces (times, values, t1 per record) may be attached
    to allow refitting under a different exponential component.
    """

    slopes: np.ndarray
    gamma_tildes: np.ndarray
    alpha: float = 1.0  # exponent at which the records were fitted
    sigmas: np.ndarray | None = None
    temperature: float | None = None
    traces: tuple | None = None  # optional ((times, values, t1), ...)

    def __post_init__(self):
        object.__setattr__(self, "slopes", np.asarray(self.slopes, dtype=float))
        object.__setattr__(self, "gamma_tildes", np.asarray(self.gamma_tildes, dtype=float))
        if np.any(self.slopes < 0):
            raise ValidationError("slopes must be nonnegative")
        if not (0.0 < self.alpha < 3.0):
            raise ValidationError("alpha must lie in (0, 3)")

    def t_phi_echo(self) -> np.ndarray:
        """Characteristic echo times implied by the stored rates."""
        return self.gamma_tildes ** (-2.0 / (1.0 + self.alpha))

    def gamma_tildes_at(self, alpha: float) -> np.ndarray:
        """Stretched rates re-expressed under a different assumed exponent.

        The characteristic time T_phi^E (where the stretched term reaches 1)
        is what a trace fit pins down; changing the assumed exponent converts
        it to gamma_tilde = (1/T_phi^E)^((1+alpha)/2).
        """
        if alpha == self.alpha:
            return self.gamma_tildes
        return self.t_phi_echo() ** (-(1.0 + alpha) / 2.0)


@dataclass(frozen=True)
class FluxNoiseExtraction:
    a_phi: float
    t_phi_exp: float
    r_squared: float
    line_slope: float
    line_intercept: float


def _linear_r2(x, y):
    # the model form gamma_tilde = slope * sqrt(A z) is a line through the origin
    slope = np.sum(x * y) / np.sum(x * x)
    fitted = slope * x
    ss_res = np.sum((y - fitted) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return slope, 0.0, r2


def extract_flux_noise_from_echo(
    ds: EchoDataset, alpha, t_phi_exp: float | None = None, scan_points: int = 25
) -> FluxNoiseExtraction:
    """Flux-noise magnitude from the slope of gamma_tilde vs flux sensitivity.

    The stretched rates follow gamma_tilde = |d omega/d Phi| sqrt(A_Phi
    z(alpha)), so the line slope k gives A_Phi = k^2 / z(alpha).  When
    ``alpha`` differs from the exponent the records were fitted at, the rates
    are converted through the characteristic echo times, which is how one
    dataset yields magnitudes under different assumed exponents.  When
    ``t_phi_exp`` is None and raw traces are attached, the exponential
    component is scanned to maximize the R^2 of the linear fit (the procedure
    used when no independent half-flux dephasing measurement pins it).
    """
    slopes = ds.slopes
    if slopes.size < 4:
        raise ValidationError("need at least 4 susceptibility points")
    if np.ptp(slopes) <= 0:
        raise ValidationError("slopes are degenerate; the linear fit is undefined")

    if t_phi_exp is None and ds.traces is not None:
        # scan the exponential component for the most linear gamma_tilde(slope)
        t1_min = min(t1 for _, _, t1 in ds.traces)
        candidates = np.geomspace(0.1 * t1_min, 100.0 * t1_min, scan_points)
        best = None
        for texp in candidates:
            gamma_tildes = _refit_traces(ds, ds.alpha, texp)
            k, intercept, r2 = _linear_r2(slopes, _convert(gamma_tildes, ds.alpha, alpha))
            if best is None or r2 > best[0]:
                best = (r2, texp, k, intercept)
        r2, texp, k, intercept = best
        return FluxNoiseExtraction(
            a_phi=k**2 / z_alpha(alpha),
            t_phi_exp=texp,
            r_squared=r2,
            line_slope=k,
            line_intercept=intercept,
        )

    if t_phi_exp is not None and ds.traces is not None:
        gamma_tildes = _convert(_refit_traces(ds, ds.alpha, t_phi_exp), ds.alpha, alpha)
    else:
        # records carry their own fixed exponential component
        gamma_tildes = ds.gamma_tildes_at(alpha)
    k, intercept, r2 = _linear_r2(slopes, gamma_tildes)
    return FluxNoiseExtraction(
        a_phi=k**2 / z_alpha(alpha),
        t_phi_exp=t_phi_exp if t_phi_exp is not None else np.inf,
        r_squared=r2,
        line_slope=k,
        line_intercept=intercept,
    )


def _convert(gamma_tildes, alpha_from, alpha_to):
    if alpha_from == alpha_to:
        return gamma_tildes
    return gamma_tildes ** ((1.0 + alpha_to) / (1.0 + alpha_from))


def _refit_traces(ds: EchoDataset, alpha, t_phi_exp):
    return np.array(
        [
            fit_echo_trace(times, values, t1, alpha, t_phi_exp=t_phi_exp).gamma_tilde
            for times, values, t1 in ds.traces
        ]
    )


def spinlock_flux_psd(gamma_1rho: float, gamma_1: float, slope: float) -> float:
    """Flux-noise PSD at the locking frequency from driven-relaxation rates.

    Gamma_nu = Gamma_1rho - Gamma_1/2 and S_Phi = 2 Gamma_nu / slope^2, with
    ``slope`` in rad/s per Phi_0, so the PSD carries Phi_0^2/Hz units.
    """
    gamma_nu = gamma_1rho - gamma_1 / 2.0
    if gamma_nu < 0:
        raise DomainError(
            f"negative Rabi-noise rate: gamma_1rho={gamma_1rho:g} < gamma_1/2={gamma_1 / 2:g}"
        )
    return 2.0 * gamma_nu / slope**2
