import numpy as np
import pytest

from waverom.pulse import Pulse, SourceSamples, discrete_sources


def test_pulse_is_even_with_nonnegative_spectrum():
    pulse = Pulse()
    t = np.linspace(-5, 5, 301)
    assert np.allclose(pulse.value(t), pulse.value(-t))
    w = np.linspace(-30, 30, 2001)
    assert np.all(pulse.spectrum(w) >= 0)
    assert np.allclose(pulse.spectrum(w), pulse.spectrum(-w))


def test_default_bandwidth_is_quarter_of_carrier():
    pulse = Pulse()
    assert pulse.bandwidth == pytest.approx(0.25 * pulse.omega_c)


def test_spectrum_matches_quadrature_transform():
    pulse = Pulse()
    t = np.linspace(-12, 12, 20001)
    for w in (0.7 * pulse.omega_c, pulse.omega_c, 1.3 * pulse.omega_c):
        fhat = np.trapezoid(pulse.value(t) * np.cos(w * t), t)
        assert fhat == pytest.approx(pulse.spectrum(w), rel=1e-8, abs=1e-12)


def test_derivative_matches_finite_difference():
    pulse = Pulse()
    t = np.linspace(-3, 3, 41)
    eps = 1e-6
    fd = (pulse.value(t + eps) - pulse.value(t - eps)) / (2 * eps)
    assert np.allclose(pulse.derivative(t), fd, atol=1e-6)


def test_full_samples_track_the_pulse_derivative():
    pulse = Pulse()
    src = discrete_sources(pulse, dt=0.02)
    k = np.arange(1, src.full_steps + 1)
    exact = pulse.derivative(k * src.dt)
    scale = np.max(np.abs(exact))
    assert np.max(np.abs(src.full - exact)) < 5e-3 * scale


def test_signal_lookup_is_odd():
    src = discrete_sources(Pulse(), dt=0.04)
    k = np.arange(-src.full_steps - 3, src.full_steps + 4)
    v = SourceSamples.signal(src.full, k)
    assert np.allclose(v, -v[::-1])
    assert v[len(k) // 2] == 0.0


def test_data_law_squares_the_half_pulse_law():
    """Leapfrog even-extended full run equals cos * (half law)^2 exactly."""
    rng = np.random.default_rng(3)
    dt = 0.05
    src = discrete_sources(Pulse(), dt=dt)
    theta = rng.uniform(0.0, (2 / dt) ** 2 * 0.8, 40)
    om = np.arccos(1 - dt**2 * theta / 2)

    def run(onesided, k_pos):
        w_prev = np.zeros_like(theta)
        w = np.zeros_like(theta)
        K = len(onesided)
        hist = {}
        for k in range(-K - 1, k_pos):
            amp = SourceSamples.signal(onesided, np.array([k]))[0]
            w_next = (2 - dt**2 * theta) * w - w_prev + dt**2 * amp
            w_prev, w = w, w_next
            hist[k + 1] = w.copy()
        return hist

    kk = np.arange(1, src.half_steps + 1)
    law_half = -(dt**2 / np.sin(om)) * 2 * np.sum(
        src.half[None, :] * np.sin(np.outer(om, kk)), axis=1)
    hist = run(src.full, 61)
    for j in (0, 20, 60):
        we = hist[j] + (hist[-j] if -j in hist else 0.0)
        expect = np.cos(j * om) * law_half**2
        assert np.max(np.abs(we - expect)) < 1e-12 * np.max(np.abs(expect))
