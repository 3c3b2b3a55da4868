import logging
from typing import List, Tuple

import numpy as np
from scipy import linalg

from app.core.exceptions import DimensionError, EigenSolverError
from app.core.phasor_array import PhasorArray, check_period
from app.models import FloquetMode, FloquetResult
from app.services.operators import harmonic_state_matrix

logger = logging.getLogger(__name__)

# folded exponents closer than this fraction of omega count as replicas
FOLD_TOLERANCE = 1e-3


def fold_to_strip(values: np.ndarray, omega: float) -> np.ndarray:
    """Shift imaginary parts by multiples of omega into (-omega/2, omega/2]."""
    values = np.asarray(values, dtype=complex)
    shift = omega * np.ceil(values.imag / omega - 0.5)
    return values - 1j * shift


def floquet_exponents(
    a: PhasorArray, h: int, period: float, mode: FloquetMode = FloquetMode.FUNDAMENTAL
) -> FloquetResult:
    if not a.is_square:
        raise DimensionError(f"Floquet exponents need a square periodic matrix, got {a.shape}")
    period = check_period(period)
    if h < 2 * a.h:
        logger.warning("truncation order %d is below twice the order of A (%d); exponents may be inaccurate", h, a.h)

    matrix = harmonic_state_matrix(a, h, period)
    try:
        eigen, vectors = linalg.eig(matrix)
    except (linalg.LinAlgError, ValueError) as exc:
        raise EigenSolverError(f"eigendecomposition of the harmonic state matrix failed: {exc}") from exc
    if not np.all(np.isfinite(eigen)):
        raise EigenSolverError("eigendecomposition returned non-finite values")

    n, size = a.rows, 2 * h + 1
    energy = np.abs(vectors) ** 2
    central = np.arange(n) * size + h
    concentration = energy[central].sum(axis=0) / energy.sum(axis=0)

    omega = 2.0 * np.pi / period
    folded = fold_to_strip(eigen, omega)
    order = np.lexsort((np.abs(folded.imag), -concentration))
    chosen = _select_fundamental(order, eigen, folded, n, omega)

    return FloquetResult(
        fundamental=folded[chosen],
        all_eigen=eigen,
        concentration=concentration[chosen],
        h=h,
        period=period,
        mode=FloquetMode(mode),
    )


def _select_fundamental(
    order: np.ndarray, eigen: np.ndarray, folded: np.ndarray, n: int, omega: float
) -> List[int]:
    chosen: List[int] = []
    for idx in order:
        if len(chosen) == n:
            break
        scale = max(1.0, abs(eigen[idx]))
        replica = any(
            abs(folded[idx] - folded[c]) < FOLD_TOLERANCE * omega and abs(eigen[idx] - eigen[c]) > 1e-6 * scale
            for c in chosen
        )
        if not replica:
            chosen.append(int(idx))
    # a spectrum too degenerate to separate; fall back to concentration order
    for idx in order:
        if len(chosen) == n:
            break
        if idx not in chosen:
            chosen.append(int(idx))
    return chosen


def is_stable(a: PhasorArray, h: int, period: float, margin: float = 0.0) -> Tuple[bool, complex]:
    result = floquet_exponents(a, h, period)
    worst = result.worst
    return bool(worst.real < -margin), worst
