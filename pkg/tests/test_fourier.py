import numpy as np
import pytest
from scipy import integrate

from app.core.exceptions import DimensionError, ParameterError, SamplingError
from app.services.fourier import from_function, sawtooth, sliding_fourier, square


def test_from_function_rejects_small_grid():
    with pytest.raises(ParameterError):
        from_function(lambda t: np.eye(2), 1.0, 1)


def test_from_function_rejects_non_finite_samples():
    with pytest.raises(SamplingError):
        from_function(lambda t: np.array([[np.inf if t > 0.5 else 1.0]]), 1.0, 4)


def test_from_function_rejects_changing_shape():
    with pytest.raises(DimensionError):
        from_function(lambda t: np.eye(2) if t < 0.5 else np.eye(3), 1.0, 4)


def test_from_function_rejects_bad_period():
    with pytest.raises(ParameterError):
        from_function(lambda t: np.eye(2), 0.0, 4)


def test_sliding_fourier_on_periodic_signal():
    period = 2.0
    times = np.linspace(0.0, 3 * period, 601)
    omega = 2 * np.pi / period
    samples = 1.0 + np.cos(omega * times)
    trajectory = sliding_fourier(samples, times, period, [0, 1, 2])
    assert trajectory.times[0] == pytest.approx(period)
    assert np.allclose(trajectory.values[0, 0], 1.0, atol=1e-10)
    assert np.allclose(trajectory.values[0, 1], 0.5, atol=1e-10)
    assert np.allclose(trajectory.values[0, 2], 0.0, atol=1e-10)


def test_sliding_fourier_on_growing_signal():
    period, alpha = 1.0, 0.7
    omega = 2 * np.pi / period
    times = np.linspace(0.0, 3 * period, 30001)
    trajectory = sliding_fourier(np.exp(alpha * times) * np.cos(omega * times), times, period, [0, 1, 2])

    def oracle(k, t):
        def part(fn):
            return integrate.quad(lambda s: np.exp(alpha * s) * np.cos(omega * s) * fn(k * omega * s), t - period, t)[0]

        return (part(np.cos) - 1j * part(np.sin)) / period

    for k in (0, 1, 2):
        phasors = trajectory.phasor(k)
        for index in range(0, trajectory.times.size, 2500):
            t = trajectory.times[index]
            assert abs(phasors[index] - oracle(k, t)) < 1e-6


def test_sliding_fourier_needs_uniform_samples():
    times = np.array([0.0, 0.1, 0.3, 0.4, 1.2])
    with pytest.raises(SamplingError):
        sliding_fourier(np.ones(5), times, 1.0, [0])


def test_sliding_fourier_needs_a_full_period():
    times = np.linspace(0.0, 0.5, 51)
    with pytest.raises(SamplingError):
        sliding_fourier(np.ones(51), times, 1.0, [0])


def test_square_wave_values():
    assert square(0.0) == 0.0
    assert square(np.pi / 2) == 1.0
    assert square(3 * np.pi / 2) == -1.0
    assert square(np.pi) == 0.0


def test_triangle_wave_values():
    assert sawtooth(0.0, 0.5) == pytest.approx(-1.0)
    assert sawtooth(np.pi, 0.5) == pytest.approx(1.0)
    assert sawtooth(np.pi / 2, 0.5) == pytest.approx(0.0, abs=1e-12)
