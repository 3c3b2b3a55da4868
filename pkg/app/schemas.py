from pathlib import Path
from typing import Dict, List, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.models import FloquetMode, MatrixKind


class PhasorArrayDocument(BaseModel):
    rows: int = Field(gt=0)
    cols: int = Field(gt=0)
    h: int = Field(ge=0)
    real: bool = False
    # ordered k = -h..h outermost, then row-major (i, j)
    coeffs: List[Tuple[float, float]]

    @model_validator(mode="after")
    def check_coefficient_count(self):
        expected = self.rows * self.cols * (2 * self.h + 1)
        if len(self.coeffs) != expected:
            raise ValueError(f"expected {expected} coefficients, got {len(self.coeffs)}")
        return self


class ToeplitzBlockDocument(BaseModel):
    n: int = Field(gt=0)
    m: int = Field(gt=0)
    h: int = Field(ge=0)
    kind: MatrixKind
    # dense entries, row-major
    entries: List[Tuple[float, float]]

    @model_validator(mode="after")
    def check_entry_count(self):
        width = self.m if self.kind == MatrixKind.FOURIER_COLUMN else (2 * self.h + 1) * self.m
        expected = (2 * self.h + 1) * self.n * width
        if len(self.entries) != expected:
            raise ValueError(f"expected {expected} entries, got {len(self.entries)}")
        return self


class SolverOptions(BaseModel):
    h_solve: Optional[int] = Field(default=None, ge=0)
    h_out: Optional[int] = Field(default=None, ge=0)
    tol: Optional[float] = Field(default=None, gt=0)
    h_max: Optional[int] = Field(default=None, ge=0)


class RiccatiOptions(BaseModel):
    h_trunc: Optional[int] = Field(default=None, ge=0)
    h_max: Optional[int] = Field(default=None, ge=0)
    auto_update_h: bool = False
    max_iter: Optional[int] = Field(default=None, gt=0)
    residual_threshold: Optional[float] = Field(default=None, gt=0)


class SimulationConfig(BaseModel):
    step: Optional[float] = Field(default=None, gt=0)
    horizon_periods: float = Field(default=5.0, gt=0)
    samples_per_period: int = Field(default=100, gt=0)


class SolveReportResponse(BaseModel):
    iterations: int
    residual_norm: float
    final_h: int
    output_h: int
    converged: bool
    history: List[float]
    trace_history: List[float] = []
    model_config = ConfigDict(from_attributes=True)


class FloquetRequest(BaseModel):
    matrix: PhasorArrayDocument
    period: float = Field(gt=0)
    h: int = Field(ge=0)
    mode: FloquetMode = FloquetMode.FUNDAMENTAL
    margin: float = 0.0


class FloquetResponse(BaseModel):
    exponents: List[Tuple[float, float]]
    concentration: List[float]
    h: int
    stable: bool


class LyapunovRequest(BaseModel):
    a: PhasorArrayDocument
    q: PhasorArrayDocument
    period: float = Field(gt=0)
    options: SolverOptions = SolverOptions()


class LyapunovResponse(BaseModel):
    solution: PhasorArrayDocument
    report: SolveReportResponse


class RiccatiRequest(BaseModel):
    a: PhasorArrayDocument
    b: PhasorArrayDocument
    q: PhasorArrayDocument
    r: PhasorArrayDocument
    k0: PhasorArrayDocument
    period: float = Field(gt=0)
    options: RiccatiOptions = RiccatiOptions()


class RiccatiResponse(BaseModel):
    gain: PhasorArrayDocument
    solution: PhasorArrayDocument
    report: SolveReportResponse


class SimulationRequest(BaseModel):
    a: PhasorArrayDocument
    b: PhasorArrayDocument
    c: Optional[PhasorArrayDocument] = None
    d: Optional[PhasorArrayDocument] = None
    k: Optional[PhasorArrayDocument] = None
    period: float = Field(gt=0)
    x0: List[float]
    times: List[float]
    step: Optional[float] = Field(default=None, gt=0)


class SimulationResponse(BaseModel):
    time: List[float]
    states: List[List[float]]
    outputs: List[List[float]]


class FeasibilityRequest(BaseModel):
    a: PhasorArrayDocument
    b: PhasorArrayDocument
    q: PhasorArrayDocument
    r: PhasorArrayDocument
    candidate: PhasorArrayDocument
    period: float = Field(gt=0)
    h_p: int = Field(ge=0)
    h_t: int = Field(ge=0)
    h_lmi: int = Field(ge=0)


class FeasibilityResponse(BaseModel):
    margins: List[float]
    feasible: bool


class RunConfig(BaseModel):
    command: str
    inputs: Dict[str, Path] = {}
    out: Path = Path(".")
    period: float = Field(default=1.0, gt=0)
    h: int = Field(default=10, ge=0)
    tol: Optional[float] = Field(default=None, gt=0)
    seed: int = 0

    @field_validator("inputs")
    @classmethod
    def check_inputs_exist(cls, value: Dict[str, Path]) -> Dict[str, Path]:
        for name, path in value.items():
            if not path.is_file():
                raise ValueError(f"{name} file {path} does not exist")
        return value
