from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional

import numpy as np


class SliceMode(str, Enum):
    FULL = "full"
    DC_AND_POSITIVE = "dc_and_positive"


class ReduceMethod(str, Enum):
    ABSOLUTE = "absolute"
    RELATIVE = "relative"


class FloquetMode(str, Enum):
    FUNDAMENTAL = "fundamental"
    ALL = "all"


class MatrixKind(str, Enum):
    TOEPLITZ_BLOCK = "toeplitz_block"
    FOURIER_COLUMN = "fourier_column"
    DIAGONAL = "diagonal"
    GENERAL = "general"


class VariableKind(str, Enum):
    DC = "dc"
    REAL = "re"
    IMAG = "im"


@dataclass(frozen=True)
class PhasorTrajectory:
    k_set: List[int]
    times: np.ndarray
    values: np.ndarray  # (component, k index, time index)

    def phasor(self, k: int, component: int = 0) -> np.ndarray:
        return self.values[component, self.k_set.index(k)]


@dataclass(frozen=True)
class FloquetResult:
    fundamental: np.ndarray
    all_eigen: np.ndarray
    concentration: np.ndarray
    h: int
    period: float
    mode: FloquetMode = FloquetMode.FUNDAMENTAL

    @property
    def omega(self) -> float:
        return 2.0 * np.pi / self.period

    @property
    def exponents(self) -> np.ndarray:
        if self.mode == FloquetMode.ALL:
            return self.all_eigen
        return self.fundamental

    @property
    def worst(self) -> complex:
        return complex(self.fundamental[np.argmax(self.fundamental.real)])


@dataclass
class SolveReport:
    iterations: int = 0
    residual_norm: float = float("inf")
    final_h: int = 0
    output_h: int = 0
    converged: bool = False
    history: List[float] = field(default_factory=list)
    trace_history: List[float] = field(default_factory=list)


@dataclass(frozen=True)
class TimeResponse:
    time: np.ndarray
    states: np.ndarray  # (len(time), n)
    outputs: np.ndarray  # (len(time), q)
    inputs: Optional[np.ndarray] = None  # (len(time), p)


@dataclass(frozen=True)
class HarmonicResponse:
    time: np.ndarray
    phasors: np.ndarray  # (len(time), (2h+1)n), Toeplitz-block ordering
    states: np.ndarray  # reconstructed x(t), (len(time), n)
    h: int


@dataclass(frozen=True)
class DecisionVariable:
    index: int
    kind: VariableKind
    k: int
    i: int
    j: int
