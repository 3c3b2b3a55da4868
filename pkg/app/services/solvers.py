"""
Harmonic Sylvester, Lyapunov and Riccati solvers.

Each periodic equation is lifted to a dense matrix equation at an inflated
truncation order, solved with a Schur-based Sylvester kernel, and the central
phasors of the solution are extracted. The extracted solution is then checked
against the periodic equation with exact phasor arithmetic; the order grows
geometrically until that residual passes.
"""
import logging
import math
from functools import partial
from typing import Callable, Optional, Tuple

import numpy as np
from scipy import linalg

from app.core.config import Settings, get_settings
from app.core.exceptions import (
    DimensionError,
    NotHurwitzError,
    ParameterError,
    SpectralOverlapError,
    StabilizationError,
)
from app.core.phasor_array import PhasorArray, check_period
from app.models import MatrixKind, ReduceMethod, SolveReport
from app.services.operators import ToeplitzBlockMatrix, extract_central_phasors, n_operator, toeplitz_block
from app.services.spectral import is_stable

logger = logging.getLogger(__name__)


def sylvester_residual(a: PhasorArray, b: PhasorArray, c: PhasorArray, x: PhasorArray, period: float) -> PhasorArray:
    return x.derivative(period) + a @ x + x @ b + c


def lyapunov_residual(a: PhasorArray, q: PhasorArray, p: PhasorArray, period: float) -> PhasorArray:
    return p.derivative(period) + a.H @ p + p @ a + q


def _riccati_residual(a, b, q, r_inv, s, period) -> PhasorArray:
    return s.derivative(period) + a.H @ s + s @ a - s @ b @ r_inv @ b.H @ s + q


def riccati_residual(
    a: PhasorArray, b: PhasorArray, q: PhasorArray, r: PhasorArray, s: PhasorArray, period: float
) -> float:
    return _riccati_residual(a, b, q, r.inverse(), s, period).max_magnitude()


def time_domain_residual(residual: PhasorArray, period: float, n_points: int = 200) -> float:
    """Largest entry of the residual evaluated on a uniform grid over one period."""
    times = check_period(period) * np.arange(n_points) / n_points
    return float(np.abs(residual.eval_time(period, times)).max())


def _hermitian_part(x: PhasorArray) -> PhasorArray:
    return (x + x.H) * 0.5


class HarmonicSolverService:
    def __init__(self, settings: Optional[Settings] = None):
        self.settings = settings or get_settings()

    def solve_sylvester(
        self,
        a: PhasorArray,
        b: PhasorArray,
        c: PhasorArray,
        period: float,
        h_solve: Optional[int] = None,
        h_out: Optional[int] = None,
        tol: Optional[float] = None,
        h_max: Optional[int] = None,
    ) -> Tuple[PhasorArray, SolveReport]:
        """Periodic X solving dX/dt + A X + X B + C = 0."""
        if not (a.is_square and b.is_square) or c.shape != (a.rows, b.rows):
            raise DimensionError(f"Sylvester equation needs A n x n, B m x m, C n x m; got {a.shape}, {b.shape}, {c.shape}")
        residual = partial(sylvester_residual, a, b, c, period=period)
        return self._solve(a, b, c, period, residual, h_solve, h_out, tol, h_max, hermitian=False)

    def solve_lyapunov(
        self,
        a: PhasorArray,
        q: PhasorArray,
        period: float,
        h_solve: Optional[int] = None,
        h_out: Optional[int] = None,
        tol: Optional[float] = None,
        h_max: Optional[int] = None,
        check_stability: bool = True,
    ) -> Tuple[PhasorArray, SolveReport]:
        """Periodic P solving dP/dt + A^* P + P A + Q = 0."""
        if not a.is_square or q.shape != a.shape:
            raise DimensionError(f"Lyapunov equation needs A and Q of equal square size; got {a.shape}, {q.shape}")
        if check_stability:
            h_check = min(max(2 * a.h, 4), self.settings.stability_h_cap)
            stable, worst = is_stable(a, h_check, period)
            if not stable:
                raise NotHurwitzError(f"A - N is not Hurwitz: Floquet exponent {worst:.6g} has non-negative real part")
        residual = partial(lyapunov_residual, a, q, period=period)
        return self._solve(a.H, a, q, period, residual, h_solve, h_out, tol, h_max, hermitian=True)

    def _solve(
        self,
        a: PhasorArray,
        b: PhasorArray,
        c: PhasorArray,
        period: float,
        residual: Callable[[PhasorArray], PhasorArray],
        h_solve: Optional[int],
        h_out: Optional[int],
        tol: Optional[float],
        h_max: Optional[int],
        hermitian: bool,
    ) -> Tuple[PhasorArray, SolveReport]:
        period = check_period(period)
        settings = self.settings
        tol = settings.solver_tol if tol is None else tol
        h_max = settings.solver_h_max if h_max is None else h_max

        trim = settings.trim_threshold
        a, b, c = (x.neglect(trim, ReduceMethod.RELATIVE) for x in (a, b, c))
        real = a.is_real and b.is_real and c.is_real
        h_in = max(a.h, b.h, c.h)
        margin = max(a.h, b.h) + c.h + 2
        order = h_solve if h_solve is not None else (h_out if h_out is not None else h_in) + margin
        order = min(max(order, 0), h_max)

        n, m = c.shape
        report = SolveReport()
        best: Optional[PhasorArray] = None
        while True:
            report.iterations += 1
            left = toeplitz_block(a, order).data + n_operator(n, order, period).data
            right = toeplitz_block(b, order).data - n_operator(m, order, period).data
            if report.iterations == 1:
                self._check_overlap(left, right)
            data = linalg.solve_sylvester(left, right, -toeplitz_block(c, order).data)
            if not np.all(np.isfinite(data)):
                raise SpectralOverlapError("Sylvester kernel returned non-finite values")

            h_ext = h_out if h_out is not None else max(order - margin, h_in)
            lifted = ToeplitzBlockMatrix(n, m, order, data, MatrixKind.GENERAL)
            x, _ = extract_central_phasors(lifted, min(h_ext, order), window=0)
            if hermitian:
                x = _hermitian_part(x)
            if real:
                x = PhasorArray(x.coeffs, real=True)
            x = x.neglect(trim, ReduceMethod.RELATIVE)

            norm = residual(x).max_magnitude()
            report.history.append(norm)
            logger.info("order %d, output order %d: residual %.3e", order, x.h, norm)
            if best is None or norm < report.residual_norm:
                best = x
                report.residual_norm = norm
                report.final_h = order
                report.output_h = x.h
            if norm <= tol:
                report.converged = True
                break
            if order >= h_max:
                logger.warning("stopped at maximum order %d with residual %.3e above %.1e", h_max, norm, tol)
                break
            order = min(h_max, max(order + 1, math.ceil(settings.solver_growth * order)))
        return best, report

    @staticmethod
    def _check_overlap(left: np.ndarray, right: np.ndarray):
        lam = linalg.eigvals(left)
        mu = linalg.eigvals(right)
        gaps = np.abs(lam[:, np.newaxis] + mu[np.newaxis, :])
        scale = max(1.0, float(np.abs(lam).max()), float(np.abs(mu).max()))
        if gaps.min() < 1e-10 * scale:
            raise SpectralOverlapError(
                f"spectra of A + N and -(B - N) overlap (gap {gaps.min():.3e}); the Sylvester equation is singular"
            )

    def riccati_kleinman(
        self,
        a: PhasorArray,
        b: PhasorArray,
        q: PhasorArray,
        r: PhasorArray,
        k0: PhasorArray,
        period: float,
        h_trunc: Optional[int] = None,
        h_max: Optional[int] = None,
        auto_update_h: bool = False,
        max_iter: Optional[int] = None,
        residual_threshold: Optional[float] = None,
    ) -> Tuple[PhasorArray, PhasorArray, SolveReport]:
        """Kleinman iteration for dS/dt + A^* S + S A - S B R^-1 B^* S + Q = 0; returns (K, S, report)."""
        n, p = b.shape
        if not a.is_square or a.rows != n or q.shape != (n, n) or r.shape != (p, p) or k0.shape != (p, n):
            raise DimensionError(
                f"Riccati data must be A n x n, B n x p, Q n x n, R p x p, K0 p x n; "
                f"got {a.shape}, {b.shape}, {q.shape}, {r.shape}, {k0.shape}"
            )
        period = check_period(period)
        settings = self.settings
        h_max = settings.solver_h_max if h_max is None else h_max
        max_iter = settings.riccati_max_iter if max_iter is None else max_iter
        threshold = settings.riccati_threshold if residual_threshold is None else residual_threshold
        if max_iter < 1:
            raise ParameterError(f"max_iter must be at least 1, got {max_iter}")

        r_inv = r.inverse()
        closed = a - b @ k0
        stable, worst = is_stable(closed, min(max(2 * closed.h, 4), settings.stability_h_cap), period)
        if not stable:
            raise StabilizationError(f"initial gain is not stabilizing: Floquet exponent {worst:.6g}")

        report = SolveReport()
        h_work = h_trunc
        gain = k0
        solution = None
        previous = math.inf
        for iteration in range(1, max_iter + 1):
            report.iterations = iteration
            if h_work is not None:
                gain = gain.trunc(h_work)
            closed = a - b @ gain
            weight = q + gain.H @ r @ gain
            s, lyap_report = self.solve_lyapunov(
                closed, weight, period, tol=threshold * 0.1, h_max=h_max, check_stability=False
            )
            solution = _hermitian_part(s)
            gain = r_inv @ b.H @ solution
            norm = _riccati_residual(a, b, q, r_inv, solution, period).max_magnitude()

            report.history.append(norm)
            report.trace_history.append(float(np.trace(solution.dc).real))
            report.residual_norm = norm
            report.final_h = lyap_report.final_h
            report.output_h = solution.h
            logger.info("iteration %d: residual %.3e, solution order %d", iteration, norm, solution.h)
            if norm < threshold:
                report.converged = True
                logger.info("Converged at iteration %d", iteration)
                break

            if auto_update_h and h_work is not None and h_work < h_max:
                cutoff = (1.0 - settings.tail_fraction) * h_work
                energy = gain.slice_energy()
                tail = energy[np.abs(gain.harmonics()) > cutoff].sum() / max(energy.sum(), np.finfo(float).tiny)
                if tail > settings.tail_energy or norm > 0.5 * previous:
                    h_work = min(h_max, max(h_work + 1, math.ceil(settings.solver_growth * h_work)))
                    logger.info("working order raised to %d (tail energy %.2e)", h_work, tail)
            previous = norm
        else:
            logger.warning("Kleinman iteration stopped after %d iterations with residual %.3e", max_iter, norm)

        logger.info("Riccati residual norm: %.2e", report.residual_norm)
        return gain, solution, report
