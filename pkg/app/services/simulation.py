import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional, Union

import numpy as np
from scipy.linalg import expm

from app.core.config import get_settings
from app.core.exceptions import DimensionError, ParameterError
from app.core.phasor_array import PhasorArray, check_period
from app.models import HarmonicResponse, TimeResponse
from app.services.operators import fourier_column, harmonic_state_matrix, toeplitz_block

logger = logging.getLogger(__name__)

InputSignal = Union[PhasorArray, Callable[[float], np.ndarray]]


@dataclass(frozen=True)
class PeriodicStateSpace:
    a: PhasorArray
    b: PhasorArray
    c: PhasorArray
    d: PhasorArray
    period: float

    @classmethod
    def create(
        cls,
        a: PhasorArray,
        b: PhasorArray,
        c: Optional[PhasorArray] = None,
        d: Optional[PhasorArray] = None,
        period: float = 1.0,
    ) -> "PeriodicStateSpace":
        if not a.is_square:
            raise DimensionError(f"A must be square, got {a.shape}")
        n = a.rows
        if b.rows != n:
            raise DimensionError(f"B must have {n} rows, got {b.shape}")
        c = PhasorArray.eye(n) if c is None else c
        d = PhasorArray.zeros(c.rows, b.cols) if d is None else d
        if c.cols != n:
            raise DimensionError(f"C must have {n} columns, got {c.shape}")
        if d.shape != (c.rows, b.cols):
            raise DimensionError(f"D must be {(c.rows, b.cols)}, got {d.shape}")
        return cls(a, b, c, d, check_period(period))

    @property
    def states(self) -> int:
        return self.a.rows

    @property
    def inputs(self) -> int:
        return self.b.cols

    @property
    def outputs(self) -> int:
        return self.c.rows

    @property
    def is_real(self) -> bool:
        return all(x.is_real for x in (self.a, self.b, self.c, self.d))


def feedback(system: PeriodicStateSpace, gain: PhasorArray) -> PeriodicStateSpace:
    """Close the loop u = -K x + v."""
    if gain.shape != (system.inputs, system.states):
        raise DimensionError(f"gain must be {(system.inputs, system.states)}, got {gain.shape}")
    return PeriodicStateSpace(
        system.a - system.b @ gain,
        system.b,
        system.c - system.d @ gain,
        system.d,
        system.period,
    )


def _check_times(times) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or times.size == 0:
        raise ParameterError("simulation needs a non-empty one-dimensional time grid")
    if np.any(np.diff(times) <= 0):
        raise ParameterError("simulation times must be strictly increasing")
    return times


def _check_state(system: PeriodicStateSpace, x0) -> np.ndarray:
    if x0 is None:
        return np.zeros(system.states)
    x0 = np.asarray(x0).reshape(-1)
    if x0.size != system.states:
        raise DimensionError(f"initial state must have {system.states} entries, got {x0.size}")
    return x0


def _input_function(system: PeriodicStateSpace, u: Optional[InputSignal]) -> Callable[[np.ndarray], np.ndarray]:
    p = system.inputs
    if u is None:
        return lambda t: np.zeros((np.size(t), p))
    if isinstance(u, PhasorArray):
        if 1 not in u.shape or u.rows * u.cols != p:
            raise DimensionError(f"input signal must be {p}x1 or 1x{p}, got {u.shape}")
        return lambda t: u.eval_time(system.period, np.atleast_1d(t)).reshape(-1, p)

    def sampled(t: np.ndarray) -> np.ndarray:
        values = np.array([np.atleast_1d(np.asarray(u(s))).reshape(-1) for s in np.atleast_1d(t)])
        if values.shape[1] != p:
            raise DimensionError(f"input callable must return {p} values, got {values.shape[1]}")
        return values

    return sampled


def _rk4(system: PeriodicStateSpace, x0: np.ndarray, times: np.ndarray, u_fn, step: Optional[float]) -> np.ndarray:
    settings = get_settings()
    period = system.period
    step = period / settings.steps_per_period if step is None else step
    if step <= 0:
        raise ParameterError(f"integration step must be positive, got {step}")

    real = system.is_real and np.isrealobj(x0) and np.isrealobj(u_fn(times[:1]))
    dtype = float if real else complex
    states = np.zeros((times.size, system.states), dtype=dtype)
    states[0] = x0
    x = states[0].copy()
    for i in range(times.size - 1):
        span = times[i + 1] - times[i]
        count = max(1, math.ceil(span / step - 1e-9))
        dt = span / count
        # matrices on the half-step grid t_i + j dt / 2, j = 0..2 count
        grid = times[i] + 0.5 * dt * np.arange(2 * count + 1)
        a_half = system.a.eval_time(period, grid)
        forcing = np.einsum("tij,tj->ti", system.b.eval_time(period, grid), u_fn(grid))

        def rhs(j: int, value: np.ndarray) -> np.ndarray:
            return a_half[j] @ value + forcing[j]

        for s in range(count):
            j = 2 * s
            k1 = rhs(j, x)
            k2 = rhs(j + 1, x + 0.5 * dt * k1)
            k3 = rhs(j + 1, x + 0.5 * dt * k2)
            k4 = rhs(j + 2, x + dt * k3)
            x = x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        states[i + 1] = x
    return states


def _response(system: PeriodicStateSpace, x0, times, u, step: Optional[float]) -> TimeResponse:
    times = _check_times(times)
    x0 = _check_state(system, x0)
    u_fn = _input_function(system, u)
    states = _rk4(system, x0, times, u_fn, step)
    inputs = u_fn(times)
    if np.isrealobj(states):
        inputs = inputs.real
    outputs = np.einsum("tij,tj->ti", system.c.eval_time(system.period, times), states)
    outputs = outputs + np.einsum("tij,tj->ti", system.d.eval_time(system.period, times), inputs)
    logger.debug("simulated %d samples over [%g, %g]", times.size, times[0], times[-1])
    return TimeResponse(time=times, states=states, outputs=outputs, inputs=inputs)


def simulate_initial(system: PeriodicStateSpace, x0, times, step: Optional[float] = None) -> TimeResponse:
    return _response(system, x0, times, None, step)


def simulate_forced(
    system: PeriodicStateSpace, times, u: InputSignal, x0=None, step: Optional[float] = None
) -> TimeResponse:
    return _response(system, x0, times, u, step)


def step_response(system: PeriodicStateSpace, times, x0=None, step: Optional[float] = None) -> TimeResponse:
    ones = PhasorArray.constant(np.ones((system.inputs, 1)))
    return _response(system, x0, times, ones, step)


def simulate_harmonic(
    system: PeriodicStateSpace,
    h: int,
    times,
    x0=None,
    phasors: Optional[Union[PhasorArray, np.ndarray]] = None,
    u: Optional[PhasorArray] = None,
) -> HarmonicResponse:
    """
    Integrate dX/dt = (A - N) X + B U for the truncated phasor vector X.

    The initial vector is either a Fourier column ``phasors`` or a state x0
    placed on the k = 0 harmonic. Each step applies the exponential of the
    augmented matrix [[A - N, B U], [0, 0]], so a constant periodic input is
    integrated exactly.
    """
    times = _check_times(times)
    n, size = system.states, 2 * h + 1
    matrix = harmonic_state_matrix(system.a, h, system.period)

    if phasors is not None:
        if isinstance(phasors, PhasorArray):
            if phasors.shape != (n, 1):
                raise DimensionError(f"initial phasors must be {n}x1, got {phasors.shape}")
            start = fourier_column(phasors, h).data[:, 0]
            real_start = phasors.is_real
        else:
            start = np.asarray(phasors, dtype=complex).reshape(-1)
            if start.size != n * size:
                raise DimensionError(f"initial phasor vector must have {n * size} entries, got {start.size}")
            real_start = False
    else:
        start = np.zeros(n * size, dtype=complex)
        initial = _check_state(system, x0)
        start[np.arange(n) * size + h] = initial
        real_start = np.isrealobj(initial)

    drive = np.zeros(n * size, dtype=complex)
    if u is not None:
        if 1 not in u.shape or u.rows * u.cols != system.inputs:
            raise DimensionError(f"input signal must be {system.inputs}x1 or 1x{system.inputs}, got {u.shape}")
        column = PhasorArray(u.coeffs.reshape(system.inputs, 1, -1), real=u.is_real)
        drive = toeplitz_block(system.b, h).data @ fourier_column(column, h).data[:, 0]

    augmented = np.zeros((n * size + 1, n * size + 1), dtype=complex)
    augmented[:-1, :-1] = matrix
    augmented[:-1, -1] = drive
    propagators = {}

    trajectory = np.zeros((times.size, n * size), dtype=complex)
    trajectory[0] = start
    current = np.append(start, 1.0)
    for i in range(times.size - 1):
        span = float(times[i + 1] - times[i])
        key = round(span, 12)
        if key not in propagators:
            propagators[key] = expm(augmented * span)
        current = propagators[key] @ current
        trajectory[i + 1] = current[:-1]

    omega = 2.0 * np.pi / system.period
    rotation = np.exp(1j * omega * np.multiply.outer(times, np.arange(-h, h + 1)))
    states = np.einsum("tik,tk->ti", trajectory.reshape(times.size, n, size), rotation)
    if system.is_real and (u is None or u.is_real) and real_start:
        states = states.real
    return HarmonicResponse(time=times, phasors=trajectory, states=states, h=h)
