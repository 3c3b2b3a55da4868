"""
Periodic matrices stored as truncated Fourier series.

A T-periodic n x m matrix A(t) = sum_{k=-h..h} A_k exp(j k w t) is held in a
single complex array of shape (n, m, 2h+1). Slice k + h holds A_k, so the DC
term is always the central slice. Instances are immutable.
"""
import math
from numbers import Number
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from pydantic import ValidationError

from app.core.config import get_settings
from app.core.exceptions import (
    DimensionError,
    ParameterError,
    SamplingError,
    SchemaError,
    SingularMatrixError,
)
from app.models import ReduceMethod, SliceMode
from app.schemas import PhasorArrayDocument

Operand = Union["PhasorArray", Number, np.ndarray]


def _symmetrize(coeffs: np.ndarray) -> np.ndarray:
    return 0.5 * (coeffs + np.conj(coeffs[:, :, ::-1]))


def _is_conjugate_symmetric(coeffs: np.ndarray, tol: float) -> bool:
    return bool(np.max(np.abs(coeffs - np.conj(coeffs[:, :, ::-1]))) <= tol)


def check_period(period: float) -> float:
    if not period > 0:
        raise ParameterError(f"period must be positive, got {period}")
    return float(period)


class PhasorArray:
    __slots__ = ("_coeffs", "_real")
    __array_ufunc__ = None

    def __init__(self, coeffs: np.ndarray, real: Optional[bool] = None):
        c = np.array(coeffs, dtype=complex)
        if c.ndim == 2:
            c = c[:, :, np.newaxis]
        if c.ndim != 3 or c.shape[0] < 1 or c.shape[1] < 1 or c.shape[2] % 2 == 0:
            raise DimensionError(f"coefficients must have shape (n, m, 2h+1), got {c.shape}")
        if real is None:
            real = _is_conjugate_symmetric(c, get_settings().real_tolerance)
        if real:
            c = _symmetrize(c)
        c.setflags(write=False)
        self._coeffs = c
        self._real = bool(real)

    # construction

    @classmethod
    def from_slices(cls, slices: Sequence, mode: SliceMode = SliceMode.FULL) -> "PhasorArray":
        mode = SliceMode(mode)
        mats = [np.atleast_2d(np.asarray(s, dtype=complex)) for s in slices]
        if not mats:
            raise DimensionError("at least one slice is required")
        shape = mats[0].shape
        if any(m.shape != shape or m.ndim != 2 for m in mats):
            raise DimensionError("all slices must share the same matrix dimensions")
        if mode == SliceMode.FULL:
            if len(mats) % 2 == 0:
                raise DimensionError("full mode needs an odd number of slices ordered k=-h..h")
            return cls(np.stack(mats, axis=2))
        if np.any(np.abs(mats[0].imag) > get_settings().real_tolerance):
            raise DimensionError("dcAndPositive mode needs a real DC slice")
        negative = [np.conj(m) for m in reversed(mats[1:])]
        return cls(np.stack(negative + mats, axis=2), real=True)

    @classmethod
    def from_samples(cls, samples: np.ndarray, real: Optional[bool] = None) -> "PhasorArray":
        """Harmonics of one period of uniform samples, shape (M, n, m)."""
        samples = np.asarray(samples)
        if samples.ndim == 1:
            samples = samples[:, np.newaxis, np.newaxis]
        if samples.ndim != 3 or samples.shape[0] < 1:
            raise DimensionError(f"samples must have shape (M, n, m), got {samples.shape}")
        if not np.all(np.isfinite(samples)):
            raise SamplingError("samples contain non-finite values")
        count = samples.shape[0]
        h = (count - 1) // 2
        spectrum = np.fft.fft(samples, axis=0) / count
        coeffs = np.moveaxis(spectrum[np.arange(-h, h + 1) % count], 0, 2)
        if real is None:
            real = np.isrealobj(samples) or not np.any(samples.imag)
        return cls(coeffs, real=real)

    @classmethod
    def constant(cls, matrix) -> "PhasorArray":
        return cls(np.atleast_2d(np.asarray(matrix, dtype=complex)))

    @classmethod
    def zeros(cls, n: int, m: Optional[int] = None, h: int = 0) -> "PhasorArray":
        return cls(np.zeros((n, n if m is None else m, 2 * h + 1)), real=True)

    @classmethod
    def eye(cls, n: int) -> "PhasorArray":
        return cls(np.eye(n), real=True)

    @classmethod
    def cos(cls) -> "PhasorArray":
        return cls.from_slices([[0.0], [0.5]], SliceMode.DC_AND_POSITIVE)

    @classmethod
    def sin(cls) -> "PhasorArray":
        return cls.from_slices([[0.0], [-0.5j]], SliceMode.DC_AND_POSITIVE)

    @classmethod
    def random(
        cls,
        n: int,
        m: Optional[int] = None,
        h: int = 1,
        decay: float = 0.5,
        rng: Union[None, int, np.random.Generator] = None,
        real: bool = True,
    ) -> "PhasorArray":
        rng = np.random.default_rng(rng)
        m = n if m is None else m
        shape = (n, m, 2 * h + 1)
        weights = decay ** np.abs(np.arange(-h, h + 1))
        coeffs = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * weights
        return cls(coeffs, real=real)

    @staticmethod
    def vstack(blocks: Iterable[Operand]) -> "PhasorArray":
        arrays = [_as_phasor(b) for b in blocks]
        h = max(a.h for a in arrays)
        stacked = np.concatenate([a._padded(h) for a in arrays], axis=0)
        return PhasorArray(stacked, real=all(a.is_real for a in arrays))

    @staticmethod
    def hstack(blocks: Iterable[Operand]) -> "PhasorArray":
        arrays = [_as_phasor(b) for b in blocks]
        h = max(a.h for a in arrays)
        stacked = np.concatenate([a._padded(h) for a in arrays], axis=1)
        return PhasorArray(stacked, real=all(a.is_real for a in arrays))

    # structure

    @property
    def coeffs(self) -> np.ndarray:
        return self._coeffs

    @property
    def rows(self) -> int:
        return self._coeffs.shape[0]

    @property
    def cols(self) -> int:
        return self._coeffs.shape[1]

    @property
    def shape(self) -> tuple:
        return self._coeffs.shape[:2]

    @property
    def h(self) -> int:
        return self._coeffs.shape[2] // 2

    @property
    def is_real(self) -> bool:
        return self._real

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    @property
    def dc(self) -> np.ndarray:
        return self.phasor(0)

    def phasor(self, k: int) -> np.ndarray:
        if abs(k) > self.h:
            return np.zeros(self.shape, dtype=complex)
        return self._coeffs[:, :, k + self.h]

    def harmonics(self) -> np.ndarray:
        return np.arange(-self.h, self.h + 1)

    def slice_magnitudes(self) -> np.ndarray:
        return np.abs(self._coeffs).max(axis=(0, 1))

    def slice_energy(self) -> np.ndarray:
        return (np.abs(self._coeffs) ** 2).sum(axis=(0, 1))

    def max_magnitude(self) -> float:
        return float(np.abs(self._coeffs).max())

    def describe(self) -> str:
        kind = "real-valued" if self._real else "complex-valued"
        return f"{self.rows}x{self.cols} {kind} periodic matrix with {self.h} harmonics"

    def __repr__(self) -> str:
        return f"<PhasorArray {self.rows}x{self.cols}x{2 * self.h + 1}: {self.describe()}>"

    def _padded(self, h: int) -> np.ndarray:
        if h == self.h:
            return self._coeffs
        if h < self.h:
            return self._coeffs[:, :, self.h - h : self.h + h + 1]
        pad = h - self.h
        return np.pad(self._coeffs, ((0, 0), (0, 0), (pad, pad)))

    # arithmetic

    def _coerce(self, other: Operand) -> "PhasorArray":
        if isinstance(other, PhasorArray):
            return other
        value = np.asarray(other, dtype=complex)
        if value.ndim == 0:
            value = np.full(self.shape, value)
        return PhasorArray.constant(value)

    def __add__(self, other: Operand) -> "PhasorArray":
        if not isinstance(other, (PhasorArray, Number, np.ndarray)):
            return NotImplemented
        other = self._coerce(other)
        if other.shape != self.shape:
            raise DimensionError(f"cannot add {self.shape} and {other.shape} periodic matrices")
        h = max(self.h, other.h)
        return PhasorArray(self._padded(h) + other._padded(h), real=self._real and other._real)

    __radd__ = __add__

    def __neg__(self) -> "PhasorArray":
        return PhasorArray(-self._coeffs, real=self._real)

    def __sub__(self, other: Operand) -> "PhasorArray":
        if not isinstance(other, (PhasorArray, Number, np.ndarray)):
            return NotImplemented
        return self + (-self._coerce(other))

    def __rsub__(self, other: Operand) -> "PhasorArray":
        return (-self) + other

    def __mul__(self, other: Operand) -> "PhasorArray":
        if isinstance(other, PhasorArray):
            if other.shape == (1, 1):
                return self._scale_by_signal(other)
            if self.shape == (1, 1):
                return other._scale_by_signal(self)
            raise DimensionError("'*' between periodic matrices needs a 1x1 operand; use '@'")
        if isinstance(other, Number):
            real = self._real and complex(other).imag == 0
            return PhasorArray(self._coeffs * other, real=real)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, other: Number) -> "PhasorArray":
        if not isinstance(other, Number):
            return NotImplemented
        return self * (1.0 / other)

    def _scale_by_signal(self, signal: "PhasorArray") -> "PhasorArray":
        lifted = PhasorArray(
            signal._coeffs[0, 0][np.newaxis, np.newaxis, :] * np.eye(self.rows)[:, :, np.newaxis],
            real=signal._real,
        )
        return lifted @ self

    def __matmul__(self, other: Operand) -> "PhasorArray":
        if not isinstance(other, (PhasorArray, np.ndarray)):
            return NotImplemented
        other = other if isinstance(other, PhasorArray) else PhasorArray.constant(other)
        return self.mul(other)

    def __rmatmul__(self, other: np.ndarray) -> "PhasorArray":
        return PhasorArray.constant(other).mul(self)

    def mul(self, other: "PhasorArray") -> "PhasorArray":
        """Time-domain product A(t) B(t): exact convolution D_k = sum_{i+j=k} A_i B_j, order h_A + h_B."""
        if self.cols != other.rows:
            raise DimensionError(f"inner dimensions differ: {self.shape} @ {other.shape}")
        a, b = self._coeffs, other._coeffs
        h = self.h + other.h
        out = np.zeros((self.rows, other.cols, 2 * h + 1), dtype=complex)
        if a.shape[2] <= b.shape[2]:
            width = b.shape[2]
            for s in range(a.shape[2]):
                out[:, :, s : s + width] += np.einsum("ij,jlk->ilk", a[:, :, s], b)
        else:
            width = a.shape[2]
            for s in range(b.shape[2]):
                out[:, :, s : s + width] += np.einsum("ijk,jl->ilk", a, b[:, :, s])
        return PhasorArray(out, real=self._real and other._real)

    def inverse(
        self,
        grid_exponent: Optional[int] = None,
        threshold: Optional[float] = None,
        condition_limit: Optional[float] = None,
    ) -> "PhasorArray":
        """Pointwise inverse A(t)^-1, rebuilt from an FFT of inverted samples."""
        if not self.is_square:
            raise DimensionError(f"cannot invert a non-square {self.shape} periodic matrix")
        settings = get_settings()
        if grid_exponent is None:
            grid_exponent = max(settings.inverse_min_grid_exponent, math.ceil(math.log2(4 * self.h + 1)) + 1)
        threshold = settings.inverse_threshold if threshold is None else threshold
        condition_limit = settings.inverse_condition_limit if condition_limit is None else condition_limit

        count = 2**grid_exponent
        samples = self.eval_phase(2.0 * np.pi * np.arange(count) / count)
        # smallest singular value against the largest over the whole period
        singular = np.linalg.svd(samples, compute_uv=False)
        with np.errstate(divide="ignore", invalid="ignore"):
            conditions = singular.max() / singular[:, -1]
        worst = int(np.argmax(np.where(np.isfinite(conditions), conditions, np.inf)))
        if not np.isfinite(conditions[worst]) or conditions[worst] > condition_limit:
            phase = worst / count
            raise SingularMatrixError(
                f"A(t) is singular or ill-conditioned at t = {phase:.6g} T (condition {conditions[worst]:.3g})",
                phase=phase,
            )
        inverse = PhasorArray.from_samples(np.linalg.inv(samples), real=self._real)
        return inverse.neglect(threshold, ReduceMethod.ABSOLUTE)

    @property
    def T(self) -> "PhasorArray":
        return self.transpose()

    @property
    def H(self) -> "PhasorArray":
        return self.hermitian()

    def transpose(self) -> "PhasorArray":
        return PhasorArray(self._coeffs.transpose(1, 0, 2), real=self._real)

    def hermitian(self) -> "PhasorArray":
        return PhasorArray(np.conj(self._coeffs[:, :, ::-1]).transpose(1, 0, 2), real=self._real)

    def derivative(self, period: float) -> "PhasorArray":
        omega = 2.0 * np.pi / check_period(period)
        factors = 1j * omega * self.harmonics()
        return PhasorArray(self._coeffs * factors, real=self._real)

    # reduction

    def trunc(self, h: int) -> "PhasorArray":
        if h < 0:
            raise ParameterError(f"truncation order must be non-negative, got {h}")
        return PhasorArray(self._padded(h), real=self._real)

    def neglect(self, threshold: float, method: ReduceMethod = ReduceMethod.ABSOLUTE) -> "PhasorArray":
        if threshold < 0:
            raise ParameterError(f"threshold must be non-negative, got {threshold}")
        try:
            method = ReduceMethod(method)
        except ValueError as exc:
            raise ParameterError(f"unknown reduction method {method!r}") from exc
        magnitudes = self.slice_magnitudes()
        limit = threshold if method == ReduceMethod.ABSOLUTE else threshold * magnitudes.max()
        keep = magnitudes >= limit
        keep[self.h] = True
        if self._real:
            keep = keep | keep[::-1]
        survivors = np.flatnonzero(keep) - self.h
        reduced = PhasorArray(self._coeffs * keep, real=self._real)
        return reduced.trunc(int(np.abs(survivors).max()))

    # evaluation

    def eval_phase(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        kernel = np.exp(1j * np.multiply.outer(np.atleast_1d(theta), self.harmonics()))
        values = np.einsum("ijk,tk->tij", self._coeffs, kernel)
        if self._real:
            values = values.real
        return values[0] if theta.ndim == 0 else values

    def eval_time(self, period: float, times) -> np.ndarray:
        omega = 2.0 * np.pi / check_period(period)
        return self.eval_phase(omega * np.asarray(times, dtype=float))

    def element_at(self, i: int, j: int) -> "PhasorArray":
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise DimensionError(f"index ({i}, {j}) outside a {self.rows}x{self.cols} periodic matrix")
        return PhasorArray(self._coeffs[i : i + 1, j : j + 1, :], real=self._real)

    def __getitem__(self, index) -> "PhasorArray":
        i, j = index
        return self.element_at(i, j)

    # serialization

    def to_document(self) -> PhasorArrayDocument:
        flat = self._coeffs.transpose(2, 0, 1).reshape(-1)
        return PhasorArrayDocument(
            rows=self.rows,
            cols=self.cols,
            h=self.h,
            real=self._real,
            coeffs=[(float(c.real), float(c.imag)) for c in flat],
        )

    @classmethod
    def from_document(cls, document: PhasorArrayDocument) -> "PhasorArray":
        values = np.array(document.coeffs, dtype=float)
        flat = values[:, 0] + 1j * values[:, 1]
        coeffs = flat.reshape(2 * document.h + 1, document.rows, document.cols).transpose(1, 2, 0)
        return cls(coeffs, real=document.real)

    def to_json(self) -> str:
        return self.to_document().model_dump_json()

    @classmethod
    def from_json(cls, text: Union[str, bytes]) -> "PhasorArray":
        try:
            document = PhasorArrayDocument.model_validate_json(text)
        except ValidationError as exc:
            raise SchemaError(f"malformed PhasorArray document: {exc}") from exc
        return cls.from_document(document)


def _as_phasor(value: Operand) -> PhasorArray:
    if isinstance(value, PhasorArray):
        return value
    return PhasorArray.constant(value)
