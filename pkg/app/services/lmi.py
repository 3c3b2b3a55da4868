"""
Toeplitz-block LQR linear matrix inequality.

The unknown is a hermitian-valued periodic matrix P of order h_p, parametrised
by real scalars: the upper triangle of a real symmetric P_0 and the real and
imaginary parts of every entry of P_k for k = 1..h_p (P_-k = P_k^*). Products
with the plant data are formed on phasors first and lifted afterwards.

Constraints, each required to be positive semidefinite:
    T(P)
    T([[A^* P + P A + dP/dt + Q, P B], [B^* P, R]])
with every lift taken at order h_lmi. The objective maximises trace(P_0).
"""
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, List, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ValidationError

from app.core.exceptions import DimensionError, LmiValidationError, ParameterError, SchemaError
from app.core.phasor_array import PhasorArray, check_period
from app.models import DecisionVariable, VariableKind
from app.services.operators import toeplitz_block

logger = logging.getLogger(__name__)

BLOCK_NAMES = ("positivity", "lqr")


class VariableEntry(BaseModel):
    index: int
    kind: VariableKind
    k: int
    i: int
    j: int


class LmiSidecar(BaseModel):
    n: int
    p: int
    h_p: int
    h_t: int
    h_lmi: int
    period: float
    blocks: List[str]
    block_sizes: List[int]
    realified: bool = True
    objective: List[float]
    variables: List[VariableEntry]


def decision_variables(n: int, h_p: int) -> List[DecisionVariable]:
    variables = []
    for i in range(n):
        for j in range(i, n):
            variables.append(DecisionVariable(len(variables), VariableKind.DC, 0, i, j))
    for k in range(1, h_p + 1):
        for i in range(n):
            for j in range(n):
                variables.append(DecisionVariable(len(variables), VariableKind.REAL, k, i, j))
                variables.append(DecisionVariable(len(variables), VariableKind.IMAG, k, i, j))
    return variables


def basis_matrix(variable: DecisionVariable, n: int, h_p: int) -> PhasorArray:
    coeffs = np.zeros((n, n, 2 * h_p + 1), dtype=complex)
    i, j, k = variable.i, variable.j, variable.k
    if variable.kind == VariableKind.DC:
        coeffs[i, j, h_p] = 1.0
        coeffs[j, i, h_p] = 1.0
    elif variable.kind == VariableKind.REAL:
        coeffs[i, j, h_p + k] += 1.0
        coeffs[j, i, h_p - k] += 1.0
    else:
        coeffs[i, j, h_p + k] += 1j
        coeffs[j, i, h_p - k] -= 1j
    return PhasorArray(coeffs, real=False)


def _snap(matrix: np.ndarray) -> np.ndarray:
    return 0.5 * (matrix + matrix.conj().T)


def realify(matrix: np.ndarray) -> np.ndarray:
    """Real symmetric embedding [[Re, -Im], [Im, Re]] of a hermitian matrix."""
    return np.block([[matrix.real, -matrix.imag], [matrix.imag, matrix.real]])


@dataclass(frozen=True)
class LmiProblem:
    a: PhasorArray
    b: PhasorArray
    q: PhasorArray
    r: PhasorArray
    period: float
    h_p: int
    h_t: int
    h_lmi: int
    variables: List[DecisionVariable] = field(default_factory=list)

    @property
    def n(self) -> int:
        return self.a.rows

    @property
    def p(self) -> int:
        return self.b.cols

    @property
    def objective(self) -> np.ndarray:
        weights = np.zeros(len(self.variables))
        for v in self.variables:
            if v.kind == VariableKind.DC and v.i == v.j:
                weights[v.index] = 1.0
        return weights

    @property
    def block_sizes(self) -> List[int]:
        size = 2 * self.h_lmi + 1
        return [size * self.n, size * (self.n + self.p)]

    def basis(self, variable: DecisionVariable) -> PhasorArray:
        return basis_matrix(variable, self.n, self.h_p)

    def _grid(self, p: PhasorArray, constant: bool) -> PhasorArray:
        upper_left = self.a.H @ p + p @ self.a + p.derivative(self.period)
        coupling = p @ self.b
        lower_right = PhasorArray.zeros(self.p)
        if constant:
            upper_left = upper_left + self.q
            lower_right = self.r
        return PhasorArray.vstack(
            [PhasorArray.hstack([upper_left, coupling]), PhasorArray.hstack([coupling.H, lower_right])]
        )

    def _lift(self, x: PhasorArray) -> np.ndarray:
        return _snap(toeplitz_block(x, self.h_lmi).data)

    def constant_blocks(self) -> List[np.ndarray]:
        constant = PhasorArray.vstack(
            [
                PhasorArray.hstack([self.q, PhasorArray.zeros(self.n, self.p)]),
                PhasorArray.hstack([PhasorArray.zeros(self.p, self.n), self.r]),
            ]
        )
        return [self._lift(PhasorArray.zeros(self.n)), self._lift(constant)]

    def variable_blocks(self, variable: DecisionVariable) -> List[np.ndarray]:
        e = self.basis(variable)
        return [self._lift(e), self._lift(self._grid(e, constant=False))]

    def iter_variable_blocks(self) -> Iterator[Tuple[DecisionVariable, List[np.ndarray]]]:
        for variable in self.variables:
            yield variable, self.variable_blocks(variable)

    def evaluate(self, p: PhasorArray) -> List[np.ndarray]:
        """Constraint blocks at a candidate P (no projection onto the variable space)."""
        return [self._lift(p), self._lift(self._grid(p, constant=True))]

    def encode(self, p: PhasorArray) -> np.ndarray:
        if p.shape != (self.n, self.n):
            raise DimensionError(f"candidate must be {self.n}x{self.n}, got {p.shape}")
        x = np.zeros(len(self.variables))
        for v in self.variables:
            value = p.phasor(v.k)
            if v.kind == VariableKind.DC:
                x[v.index] = 0.5 * (value[v.i, v.j] + value[v.j, v.i]).real
            elif v.kind == VariableKind.REAL:
                x[v.index] = value[v.i, v.j].real
            else:
                x[v.index] = value[v.i, v.j].imag
        return x

    def decode(self, x: Sequence[float]) -> PhasorArray:
        return phasors_from_variables(self.variables, x, self.n, self.h_p)

    def sidecar(self) -> LmiSidecar:
        return LmiSidecar(
            n=self.n,
            p=self.p,
            h_p=self.h_p,
            h_t=self.h_t,
            h_lmi=self.h_lmi,
            period=self.period,
            blocks=list(BLOCK_NAMES),
            block_sizes=[2 * s for s in self.block_sizes],
            objective=self.objective.tolist(),
            variables=[VariableEntry(index=v.index, kind=v.kind, k=v.k, i=v.i, j=v.j) for v in self.variables],
        )


def phasors_from_variables(variables: Sequence[DecisionVariable], x: Sequence[float], n: int, h_p: int) -> PhasorArray:
    x = np.asarray(x, dtype=float)
    if x.size != len(variables):
        raise DimensionError(f"expected {len(variables)} decision values, got {x.size}")
    coeffs = np.zeros((n, n, 2 * h_p + 1), dtype=complex)
    for v in variables:
        coeffs += x[v.index] * basis_matrix(v, n, h_p).coeffs
    return PhasorArray(coeffs)


def build_lqr_lmi(
    a: PhasorArray,
    b: PhasorArray,
    q: PhasorArray,
    r: PhasorArray,
    period: float,
    h_p: int,
    h_t: int,
    h_lmi: int,
) -> LmiProblem:
    if min(h_p, h_t, h_lmi) < 0:
        raise ParameterError(f"truncation orders must be non-negative, got h_p={h_p}, h_t={h_t}, h_lmi={h_lmi}")
    n, p = b.shape
    if not a.is_square or a.rows != n or q.shape != (n, n) or r.shape != (p, p):
        raise DimensionError(
            f"LQR data must be A n x n, B n x p, Q n x n, R p x p; got {a.shape}, {b.shape}, {q.shape}, {r.shape}"
        )
    if h_lmi < h_p + h_t:
        logger.warning("LMI order %d is below h_p + h_t = %d; the lifted products are truncated", h_lmi, h_p + h_t)
    problem = LmiProblem(
        a=a.trunc(h_t),
        b=b,
        q=q,
        r=r,
        period=check_period(period),
        h_p=h_p,
        h_t=h_t,
        h_lmi=h_lmi,
        variables=decision_variables(n, h_p),
    )
    logger.info(
        "LQR LMI with %d variables, blocks of size %s", len(problem.variables), problem.block_sizes
    )
    return problem


def check_feasibility(problem: LmiProblem, candidate: PhasorArray) -> List[float]:
    """Smallest eigenvalue of each constraint block at the candidate."""
    if candidate.h > problem.h_p:
        raise ParameterError(f"candidate order {candidate.h} exceeds the LMI unknown order {problem.h_p}")
    projected = problem.decode(problem.encode(candidate))
    return [float(np.linalg.eigvalsh(block)[0]) for block in problem.evaluate(projected)]


def _format(value: float) -> str:
    return f"{value:.17g}"


def _sdpa_entries(matno: int, block: int, matrix: np.ndarray) -> Iterator[str]:
    real = realify(matrix)
    rows, cols = np.nonzero(np.triu(real))
    for i, j in zip(rows, cols):
        yield f"{matno} {block} {i + 1} {j + 1} {_format(real[i, j])}\n"


def export_sdpa(problem: LmiProblem, path: Union[str, Path]) -> Tuple[Path, Path]:
    """
    Write the problem in SDPA sparse format plus a JSON sidecar.

    SDPA minimises c^T x subject to sum_i x_i F_i - F_0 >= 0, so the constant
    blocks are negated and the objective is flipped.
    """
    if not problem.variables:
        raise LmiValidationError("LMI problem has no decision variables")
    path = Path(path)
    sidecar_path = path.with_suffix(".json")
    sizes = [2 * s for s in problem.block_sizes]

    with path.open("w") as handle:
        handle.write(f'"harmonic LQR LMI: n={problem.n} p={problem.p} h_p={problem.h_p} h_lmi={problem.h_lmi}"\n')
        handle.write(f"{len(problem.variables)}\n")
        handle.write(f"{len(sizes)}\n")
        handle.write(" ".join(str(s) for s in sizes) + "\n")
        handle.write(" ".join(_format(-c) for c in problem.objective) + "\n")
        for block, matrix in enumerate(problem.constant_blocks(), start=1):
            handle.writelines(_sdpa_entries(0, block, -matrix))
        for variable, blocks in problem.iter_variable_blocks():
            for block, matrix in enumerate(blocks, start=1):
                handle.writelines(_sdpa_entries(variable.index + 1, block, matrix))

    sidecar_path.write_text(problem.sidecar().model_dump_json(indent=2))
    logger.info("wrote %s and %s", path, sidecar_path)
    return path, sidecar_path


@dataclass
class SdpaProblem:
    c: np.ndarray
    block_sizes: List[int]
    # matrices[matno][block], dense and symmetric
    matrices: List[List[np.ndarray]]

    def margins(self, x: Sequence[float]) -> List[float]:
        """Smallest eigenvalue of each block of sum_i x_i F_i - F_0."""
        x = np.asarray(x, dtype=float)
        margins = []
        for b in range(len(self.block_sizes)):
            total = -self.matrices[0][b] + sum(xi * self.matrices[i + 1][b] for i, xi in enumerate(x))
            margins.append(float(np.linalg.eigvalsh(total)[0]))
        return margins


_SEPARATORS = re.compile(r"[\s,{}()]+")


def _tokens(line: str) -> List[str]:
    return [t for t in _SEPARATORS.split(line.strip()) if t]


def read_sdpa(path: Union[str, Path]) -> SdpaProblem:
    lines = [
        line
        for line in Path(path).read_text().splitlines()
        if line.strip() and not line.lstrip().startswith(("*", '"'))
    ]
    try:
        m = int(_tokens(lines[0])[0])
        count = int(_tokens(lines[1])[0])
        sizes = [int(s) for s in _tokens(lines[2])[:count]]
        c = np.array([float(v) for v in _tokens(lines[3])[:m]])
        matrices = [[np.zeros((abs(s), abs(s))) for s in sizes] for _ in range(m + 1)]
        for line in lines[4:]:
            matno, block, i, j, value = _tokens(line)[:5]
            target = matrices[int(matno)][int(block) - 1]
            target[int(i) - 1, int(j) - 1] = float(value)
            target[int(j) - 1, int(i) - 1] = float(value)
    except (IndexError, ValueError) as exc:
        raise SchemaError(f"malformed SDPA file {path}: {exc}") from exc
    return SdpaProblem(c=c, block_sizes=[abs(s) for s in sizes], matrices=matrices)


def read_sidecar(path: Union[str, Path]) -> LmiSidecar:
    try:
        return LmiSidecar.model_validate_json(Path(path).read_text())
    except ValidationError as exc:
        raise SchemaError(f"malformed LMI sidecar {path}: {exc}") from exc


def phasors_from_solution(sidecar: Union[LmiSidecar, str, Path], x: Sequence[float]) -> PhasorArray:
    """Fold an external solver's decision vector back into the periodic matrix P."""
    if not isinstance(sidecar, LmiSidecar):
        sidecar = read_sidecar(sidecar)
    variables = [DecisionVariable(v.index, v.kind, v.k, v.i, v.j) for v in sidecar.variables]
    return phasors_from_variables(variables, x, sidecar.n, sidecar.h_p)

