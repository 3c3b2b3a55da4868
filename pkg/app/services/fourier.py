import logging
from typing import Callable, Sequence

import numpy as np
from scipy import signal
from scipy.integrate import cumulative_trapezoid

from app.core.exceptions import DimensionError, ParameterError, SamplingError
from app.core.phasor_array import PhasorArray, check_period
from app.models import PhasorTrajectory

logger = logging.getLogger(__name__)


def from_function(sampler: Callable[[float], np.ndarray], period: float, grid_exponent: int) -> PhasorArray:
    """Sample one period on a 2**grid_exponent grid and keep harmonics up to 2**(grid_exponent-1) - 1."""
    period = check_period(period)
    if grid_exponent < 2:
        raise ParameterError(f"grid exponent must be at least 2, got {grid_exponent}")
    count = 2**grid_exponent
    times = period * np.arange(count) / count

    samples = []
    for t in times:
        value = np.atleast_2d(np.asarray(sampler(t)))
        if samples and value.shape != samples[0].shape:
            raise DimensionError(f"sampler returned {value.shape} at t={t:g}, expected {samples[0].shape}")
        samples.append(value)
    stacked = np.stack(samples)
    if not np.all(np.isfinite(stacked)):
        raise SamplingError("sampler returned non-finite values")
    real = np.isrealobj(stacked) or not np.any(stacked.imag)
    return PhasorArray.from_samples(stacked, real=real)


def sliding_fourier(samples, times, period: float, k_set: Sequence[int]) -> PhasorTrajectory:
    """
    Time-varying phasors X_k(t) = 1/T * integral_{t-T}^{t} x(s) exp(-j k w s) ds.

    The integral runs over the trailing window by trapezoidal quadrature, so
    only instants at least one period after the first sample are returned.
    """
    period = check_period(period)
    x = np.asarray(samples)
    times = np.asarray(times, dtype=float)
    if x.ndim == 1:
        x = x[:, np.newaxis]
    if times.ndim != 1 or x.shape[0] != times.size or times.size < 2:
        raise DimensionError("samples and times must share their first dimension")

    steps = np.diff(times)
    if np.any(steps <= 0) or not np.allclose(steps, steps[0], rtol=1e-9, atol=0.0):
        raise SamplingError("sliding Fourier decomposition needs uniform, increasing sample times")
    window = int(round(period / steps[0]))
    if times[-1] - times[0] < period - 0.5 * steps[0] or window >= times.size:
        raise SamplingError(f"sample span {times[-1] - times[0]:g} is shorter than one period {period:g}")

    omega = 2.0 * np.pi / period
    values = []
    for k in k_set:
        weighted = x * np.exp(-1j * k * omega * times)[:, np.newaxis]
        running = cumulative_trapezoid(weighted, times, axis=0, initial=0)
        values.append((running[window:] - running[:-window]) / period)
    stacked = np.stack(values)  # (k, time, component)
    logger.debug("sliding Fourier decomposition over %d windows", stacked.shape[1])
    return PhasorTrajectory(k_set=list(k_set), times=times[window:], values=stacked.transpose(2, 0, 1))


def sawtooth(x, width: float = 1.0) -> np.ndarray:
    """Sawtooth of period 2*pi rising from -1 to 1; width 0.5 gives a triangle."""
    return signal.sawtooth(np.asarray(x, dtype=float), width)


def square(x) -> np.ndarray:
    """Square wave of period 2*pi, +1 on (0, pi) and -1 on (pi, 2*pi), 0 at the jumps."""
    values = np.sin(np.asarray(x, dtype=float))
    return np.where(np.abs(values) < 1e-12, 0.0, np.sign(values))
