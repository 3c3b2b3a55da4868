"""Reference LTP plant and LQR data used by the CLI, the HTTP API and the tests."""
import numpy as np

from app.core.phasor_array import PhasorArray
from app.models import SliceMode
from app.services.fourier import from_function, sawtooth, square

PERIOD = 1.0
GRID_EXPONENT = 6


def plant_sampler(t: float, period: float = PERIOD) -> np.ndarray:
    x = 2.0 * np.pi * t / period
    return np.array(
        [
            [1.0 + sawtooth(x, 0.5) + 0.5, 1.0 + np.cos(x)],
            [1.0 - np.sin(2.0 * x), -0.5 + square(x) / 2.0],
        ]
    )


def plant_matrix(period: float = PERIOD, grid_exponent: int = GRID_EXPONENT) -> PhasorArray:
    return from_function(lambda t: plant_sampler(t, period), period, grid_exponent)


def plant_slices() -> PhasorArray:
    """The same plant from its first three closed-form harmonics."""
    a0 = [[1.5, 1.0], [1.0, -0.5]]
    a1 = [[-4.0 / np.pi**2, 0.5], [0.0, 1.0 / (1j * np.pi)]]
    a2 = [[0.0, 0.0], [0.5j, 0.0]]
    a3 = [[4.0 / (3.0 * np.pi) ** 2, 0.0], [0.0, 1.0 / (3j * np.pi)]]
    return PhasorArray.from_slices([a0, a1, a2, a3], SliceMode.DC_AND_POSITIVE)


def input_matrix() -> PhasorArray:
    return PhasorArray.vstack([PhasorArray.constant([[1.0]]), PhasorArray.sin()])


def state_weight() -> PhasorArray:
    return PhasorArray.constant(10.0 * np.eye(2))


def input_weight() -> PhasorArray:
    return PhasorArray.eye(1)


def initial_gain() -> PhasorArray:
    return PhasorArray.constant([[10.0, 10.0]])
