"""
Truncated harmonic-domain operators.

Every lift uses Toeplitz-block ordering: matrix entries outermost, harmonics
k = -h..h innermost, so row i * (2h+1) + (k + h) carries harmonic k of row i.
"""
import logging
from dataclasses import dataclass
from typing import Optional, Tuple, Union

import numpy as np
from scipy.linalg import toeplitz

from app.core.config import get_settings
from app.core.exceptions import DimensionError, ParameterError
from app.core.phasor_array import PhasorArray, check_period
from app.models import MatrixKind
from app.schemas import ToeplitzBlockDocument

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class ToeplitzBlockMatrix:
    n: int
    m: int
    h: int
    data: np.ndarray
    kind: MatrixKind = MatrixKind.TOEPLITZ_BLOCK

    def __post_init__(self):
        size = 2 * self.h + 1
        width = self.m if self.kind == MatrixKind.FOURIER_COLUMN else size * self.m
        if self.data.shape != (size * self.n, width):
            raise DimensionError(
                f"{self.kind.value} data must be {(size * self.n, width)}, got {self.data.shape}"
            )

    @property
    def shape(self) -> tuple:
        return self.data.shape

    def blocks(self) -> np.ndarray:
        """View as (n, m, 2h+1, 2h+1): block (i, j) of the grid."""
        size = 2 * self.h + 1
        return self.data.reshape(self.n, size, self.m, size).transpose(0, 2, 1, 3)

    def to_block_toeplitz(self) -> np.ndarray:
        rows, cols = tb_to_bt(self.n, self.m, self.h)
        if self.kind == MatrixKind.FOURIER_COLUMN:
            return self.data[rows]
        return self.data[np.ix_(rows, cols)]

    def to_document(self) -> ToeplitzBlockDocument:
        flat = self.data.reshape(-1)
        return ToeplitzBlockDocument(
            n=self.n,
            m=self.m,
            h=self.h,
            kind=self.kind,
            entries=[(float(c.real), float(c.imag)) for c in flat],
        )

    @classmethod
    def from_document(cls, document: ToeplitzBlockDocument) -> "ToeplitzBlockMatrix":
        size = 2 * document.h + 1
        width = document.m if document.kind == MatrixKind.FOURIER_COLUMN else size * document.m
        values = np.array(document.entries, dtype=float)
        data = (values[:, 0] + 1j * values[:, 1]).reshape(size * document.n, width)
        return cls(document.n, document.m, document.h, data, document.kind)


def _check_order(h: int) -> int:
    if h < 0:
        raise ParameterError(f"truncation order must be non-negative, got {h}")
    return int(h)


def toeplitz_block(a: PhasorArray, h: int) -> ToeplitzBlockMatrix:
    """Entry (p, q) of block (i, j) is a_ij at harmonic p - q; positive harmonics sit below the diagonal."""
    h = _check_order(h)
    size = 2 * h + 1
    offsets = toeplitz(np.arange(size), -np.arange(size))
    padded = a.trunc(2 * h).coeffs
    blocks = padded[:, :, offsets + 2 * h]
    data = blocks.transpose(0, 2, 1, 3).reshape(a.rows * size, a.cols * size)
    return ToeplitzBlockMatrix(a.rows, a.cols, h, data, MatrixKind.TOEPLITZ_BLOCK)


def fourier_column(a: PhasorArray, h: int) -> ToeplitzBlockMatrix:
    h = _check_order(h)
    data = a.trunc(h).coeffs.transpose(0, 2, 1).reshape(a.rows * (2 * h + 1), a.cols)
    return ToeplitzBlockMatrix(a.rows, a.cols, h, data, MatrixKind.FOURIER_COLUMN)


def n_operator(n: int, h: int, period: float) -> ToeplitzBlockMatrix:
    if n < 1:
        raise DimensionError(f"state dimension must be positive, got {n}")
    h = _check_order(h)
    omega = 2.0 * np.pi / check_period(period)
    diagonal = 1j * omega * np.arange(-h, h + 1)
    data = np.kron(np.eye(n), np.diag(diagonal))
    return ToeplitzBlockMatrix(n, n, h, data, MatrixKind.DIAGONAL)


def harmonic_state_matrix(a: PhasorArray, h: int, period: float) -> np.ndarray:
    if not a.is_square:
        raise DimensionError(f"harmonic state matrix needs a square periodic matrix, got {a.shape}")
    return toeplitz_block(a, h).data - n_operator(a.rows, h, period).data


def extract_central_phasors(
    matrix: ToeplitzBlockMatrix, h_out: int, window: Optional[int] = None
) -> Tuple[PhasorArray, float]:
    """
    Recover phasors |k| <= h_out from an (approximately) Toeplitz-block matrix.

    Phasor k of block (i, j) is the mean of the entries (p, p - k) whose
    harmonic pair satisfies |p + q| <= 2 * window + 1, i.e. the entries
    closest to the centre of the block. The default window h - h_out keeps
    every diagonal that is fully inside the block. Returns the phasors and the
    largest deviation of an averaged entry from its mean.
    """
    h = matrix.h
    if h_out < 0 or h_out > h:
        raise ParameterError(f"extraction order {h_out} must lie in [0, {h}]")
    if matrix.kind == MatrixKind.FOURIER_COLUMN:
        raise DimensionError("cannot extract Toeplitz phasors from a Fourier column")
    window = h - h_out if window is None else window
    if window < 0:
        raise ParameterError(f"window half-width must be non-negative, got {window}")

    blocks = matrix.blocks()
    harmonic = np.arange(-h, h + 1)
    p, q = np.meshgrid(harmonic, harmonic, indexing="ij")
    central = np.abs(p + q) <= 2 * window + 1

    coeffs = np.zeros((matrix.n, matrix.m, 2 * h_out + 1), dtype=complex)
    defect = 0.0
    for k in range(-h_out, h_out + 1):
        values = blocks[:, :, (p - q == k) & central]
        mean = values.mean(axis=2)
        coeffs[:, :, k + h_out] = mean
        defect = max(defect, float(np.abs(values - mean[:, :, np.newaxis]).max()))
    return PhasorArray(coeffs), defect


def magnitude_grid(matrix: Union[ToeplitzBlockMatrix, np.ndarray], floor: Optional[float] = None) -> np.ndarray:
    floor = get_settings().magnitude_floor if floor is None else floor
    data = matrix.data if isinstance(matrix, ToeplitzBlockMatrix) else np.asarray(matrix)
    grid = np.abs(data)
    grid[grid < floor] = 0.0
    return grid


def tb_to_bt(n: int, m: int, h: int) -> Tuple[np.ndarray, np.ndarray]:
    """
    Row and column permutations from Toeplitz-block to block-Toeplitz ordering.

    ``data[np.ix_(rows, cols)]`` reorders a Toeplitz-block matrix so that
    harmonics are outermost; ``np.argsort`` of each permutation maps back.
    """
    size = 2 * _check_order(h) + 1
    rows = np.arange(n * size).reshape(n, size).T.reshape(-1)
    cols = np.arange(m * size).reshape(m, size).T.reshape(-1)
    return rows, cols
