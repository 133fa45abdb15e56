import numpy as np
import pytest
from scipy.integrate import quad

from fluxonium_noise import (
    DomainError,
    EchoModel,
    echo_coherence,
    extract_flux_noise_from_echo,
    fit_echo_trace,
    flux_sensitivity,
    spinlock_flux_psd,
    z_alpha,
)
from fluxonium_noise.config import PAPER_CIRCUIT
from fluxonium_noise.dephasing import EchoDataset, echo_envelope
from fluxonium_noise.sweeps import generate_synthetic_echo


def chi_filter_integral(alpha, slope, a_phi, t):
    """Quadrature oracle for the echo coherence function.

    Evaluates the filter-function integral chi = (t^2 slope^2 / 2 pi)
    int S(w) |g_E| dw with the spin-echo filter sin^4(wt/4)/(wt/4)^2 and the
    bilateral power-law spectrum S(w) = 2 pi A w^-alpha (normalized so that
    the alpha = 1 case carries magnitude A at 1 Hz).
    """

    def integrand(w):
        x = w * t / 4.0
        return w ** (-alpha) * np.sin(x) ** 4 / x**2

    val = 0.0
    breaks = [0.0, 4.0 / t, 40.0 / t, 400.0 / t]
    for a, b in zip(breaks[:-1], breaks[1:]):
        part, _ = quad(integrand, a, b, limit=600)
        val += part
    # far tail: sin^4 averages to 3/8, leaving an elementary integral
    w_tail = breaks[-1]
    val += (3.0 / 8.0) * (16.0 / t**2) * w_tail ** (-alpha - 1.0) / (alpha + 1.0)
    return t**2 * slope**2 * a_phi * val


class TestZAlpha:
    def test_gaussian_limit(self):
        assert z_alpha(1.0) == pytest.approx(np.log(2.0), abs=1e-6)

    def test_continuity_at_removable_singularities(self):
        for a0 in (1.0, 2.0):
            center = z_alpha(a0)
            for eps in (1e-7, 1e-5, 1e-3):
                assert z_alpha(a0 - eps) == pytest.approx(center, rel=1e-2 * max(eps * 1e3, 1))
                assert z_alpha(a0 + eps) == pytest.approx(center, rel=1e-2 * max(eps * 1e3, 1))
        # tight continuity right at the patch boundaries
        assert z_alpha(1.0 + 1e-9) == pytest.approx(z_alpha(1.0), rel=1e-6)
        assert z_alpha(2.0 + 1e-9) == pytest.approx(z_alpha(2.0), rel=1e-6)

    def test_positive_on_domain(self):
        alphas = np.linspace(0.05, 2.95, 120)
        assert np.all(z_alpha(alphas) > 0)

    def test_domain(self):
        with pytest.raises(DomainError):
            z_alpha(0.0)
        with pytest.raises(DomainError):
            z_alpha(3.0)


class TestEchoCoherence:
    @pytest.mark.parametrize("alpha", [0.5, 0.62, 1.0, 1.3])
    def test_closed_form_vs_quadrature(self, alpha):
        slope = 2 * np.pi * 19e9
        a_phi = (0.25e-6) ** 2
        model = EchoModel(a_phi=a_phi, alpha=alpha, slope=slope, t1=1.0)
        for t in (5e-7, 3e-6):
            closed = echo_coherence(model, t)
            oracle = chi_filter_integral(alpha, slope, a_phi, t)
            assert closed == pytest.approx(oracle, rel=5e-3)

    def test_zero_time(self):
        model = EchoModel(a_phi=1e-12, alpha=0.62, slope=1e11, t1=1.0)
        assert echo_coherence(model, 0.0) == 0.0

    def test_monotone_increasing(self):
        model = EchoModel(a_phi=1e-12, alpha=0.62, slope=1e11, t1=1.0)
        ts = np.linspace(0, 1e-5, 50)
        chi = echo_coherence(model, ts)
        assert np.all(np.diff(chi) > 0)

    def test_gaussian_form_at_alpha_one(self):
        model = EchoModel(a_phi=(3.7e-6) ** 2, alpha=1.0, slope=2 * np.pi * 19e9, t1=1.0)
        t = 1e-6
        expected = t**2 * model.slope**2 * model.a_phi * np.log(2.0)
        assert echo_coherence(model, t) == pytest.approx(expected, rel=1e-12)


class TestFitEchoTrace:
    def test_noiseless_recovery(self):
        model = EchoModel(
            a_phi=(0.25e-6) ** 2, alpha=0.62, slope=2 * np.pi * 15e9, t1=100e-6, t_phi_exp=71e-6
        )
        times = np.linspace(0, 3 * model.t_phi_echo, 41)
        values = echo_envelope(model, times, amplitude=0.9, offset=0.05)
        fit = fit_echo_trace(times, values, t1=100e-6, alpha=0.62, t_phi_exp=71e-6)
        assert not fit.rejected
        assert fit.t_phi_echo == pytest.approx(model.t_phi_echo, rel=1e-6)
        assert fit.amplitude == pytest.approx(0.9, rel=1e-6)
        assert fit.offset == pytest.approx(0.05, abs=1e-7)

    def test_free_exponential_component(self):
        model = EchoModel(
            a_phi=(0.25e-6) ** 2, alpha=0.62, slope=2 * np.pi * 10e9, t1=80e-6, t_phi_exp=30e-6
        )
        times = np.linspace(0, 3 * model.t_phi_echo, 61)
        values = echo_envelope(model, times)
        fit = fit_echo_trace(times, values, t1=80e-6, alpha=0.62, t_phi_exp=None)
        assert fit.t_phi_echo == pytest.approx(model.t_phi_echo, rel=0.01)
        assert fit.t_phi_exp == pytest.approx(30e-6, rel=0.05)

    def test_pure_stretched_decay(self):
        # t_phi_exp -> infinity leaves the Gaussian-like component only
        model = EchoModel(a_phi=(0.3e-6) ** 2, alpha=1.0, slope=2 * np.pi * 12e9, t1=1.0)
        times = np.linspace(0, 3 * model.t_phi_echo, 41)
        values = echo_envelope(model, times)
        fit = fit_echo_trace(times, values, t1=1.0, alpha=1.0, t_phi_exp=1e6)
        assert fit.t_phi_echo == pytest.approx(model.t_phi_echo, rel=0.01)

    def test_degenerate_trace_flagged(self):
        times = np.linspace(0, 1e-5, 20)
        values = np.full_like(times, 0.5)
        fit = fit_echo_trace(times, values, t1=1e-4, alpha=0.62, t_phi_exp=1e-4)
        assert fit.rejected

    def test_too_few_points(self):
        from fluxonium_noise.errors import ValidationError

        with pytest.raises(ValidationError):
            fit_echo_trace(np.linspace(0, 1, 5), np.ones(5), t1=1.0, alpha=1.0)


@pytest.fixture(scope="module")
def device_echo_dataset():
    """Synthetic echo dataset over the device's measured susceptibility band."""
    dphis = np.linspace(1e-3, 15e-3, 8)
    slopes = 2 * np.pi * np.array(
        [
            abs(flux_sensitivity(PAPER_CIRCUIT.with_phi_ext(2 * np.pi * (0.5 - d))))
            for d in dphis
        ]
    )
    template = EchoModel(
        a_phi=(0.25e-6) ** 2, alpha=0.62, slope=slopes[0], t1=150e-6, t_phi_exp=71e-6
    )
    return generate_synthetic_echo(template, slopes)


class TestExtractFluxNoise:
    def test_recovery_at_generating_exponent(self, device_echo_dataset):
        res = extract_flux_noise_from_echo(device_echo_dataset, 0.62, t_phi_exp=71e-6)
        assert res.a_phi == pytest.approx((0.25e-6) ** 2, rel=0.05)

    def test_refit_at_unity_exponent(self, device_echo_dataset):
        res = extract_flux_noise_from_echo(device_echo_dataset, 1.0)
        assert res.a_phi == pytest.approx((3.7e-6) ** 2, rel=0.10)

    def test_scan_chooses_exponential_component(self, device_echo_dataset):
        res = extract_flux_noise_from_echo(device_echo_dataset, 0.62, t_phi_exp=None)
        assert res.a_phi == pytest.approx((0.25e-6) ** 2, rel=0.05)
        assert res.r_squared > 0.999

    def test_slope_scale_equivariance(self):
        # regenerating gamma_tilde consistently under slope -> k*slope leaves A
        model = EchoModel(a_phi=(0.3e-6) ** 2, alpha=0.8, slope=1.0, t1=1.0)
        slopes = 2 * np.pi * np.geomspace(5e9, 30e9, 6)

        def dataset(scale):
            import dataclasses

            gts = [
                dataclasses.replace(model, slope=scale * s).gamma_tilde for s in slopes
            ]
            return EchoDataset(slopes=scale * slopes, gamma_tildes=np.array(gts), alpha=0.8)

        a1 = extract_flux_noise_from_echo(dataset(1.0), 0.8).a_phi
        a3 = extract_flux_noise_from_echo(dataset(3.0), 0.8).a_phi
        assert a3 == pytest.approx(a1, rel=1e-12)
        assert a1 == pytest.approx((0.3e-6) ** 2, rel=1e-10)

    def test_rate_scaling_by_k_scales_a_by_k_squared(self, device_echo_dataset):
        ds = device_echo_dataset
        base = extract_flux_noise_from_echo(
            EchoDataset(slopes=ds.slopes, gamma_tildes=ds.gamma_tildes, alpha=0.62), 0.62
        )
        scaled = extract_flux_noise_from_echo(
            EchoDataset(slopes=ds.slopes, gamma_tildes=3.0 * ds.gamma_tildes, alpha=0.62), 0.62
        )
        assert scaled.a_phi == pytest.approx(9.0 * base.a_phi, rel=1e-12)

    def test_degenerate_slopes_rejected(self):
        from fluxonium_noise.errors import ValidationError

        with pytest.raises(ValidationError):
            extract_flux_noise_from_echo(
                EchoDataset(slopes=np.full(5, 1e11), gamma_tildes=np.full(5, 1e5), alpha=1.0),
                1.0,
            )


class TestSpinLocking:
    def test_zero_rabi_noise(self):
        assert spinlock_flux_psd(50.0, 100.0, 1e11) == 0.0

    def test_slope_scaling(self):
        s1 = spinlock_flux_psd(300.0, 100.0, 1e11)
        s2 = spinlock_flux_psd(300.0, 100.0, 2e11)
        assert s2 == pytest.approx(s1 / 4.0, rel=1e-12)

    def test_round_trip(self):
        slope = 2 * np.pi * 19e9
        s_phi = (0.25e-6) ** 2 * (2 * np.pi / (2 * np.pi * 10e6)) ** 0.62
        gamma_nu = s_phi * slope**2 / 2.0
        gamma_1 = 80.0
        recovered = spinlock_flux_psd(gamma_nu + gamma_1 / 2.0, gamma_1, slope)
        assert recovered == pytest.approx(s_phi, rel=1e-12)

    def test_negative_rate_rejected(self):
        with pytest.raises(DomainError):
            spinlock_flux_psd(10.0, 100.0, 1e11)
