import logging
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
from pydantic import BaseModel

from app.core.exceptions import SchemaError
from app.core.phasor_array import PhasorArray
from app.models import TimeResponse

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]


def write_csv(path: PathLike, table: np.ndarray, columns: Optional[Sequence[str]] = None) -> Path:
    path = Path(path)
    header = ",".join(columns) if columns else ""
    np.savetxt(path, np.atleast_2d(table), fmt="%.17g", delimiter=",", header=header, comments="")
    logger.info("wrote %s", path)
    return path


def write_json(path: PathLike, document: BaseModel) -> Path:
    path = Path(path)
    path.write_text(document.model_dump_json(indent=2) + "\n")
    logger.info("wrote %s", path)
    return path


def load_phasor_array(path: PathLike) -> PhasorArray:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SchemaError(f"cannot read PhasorArray file {path}: {exc}") from exc
    return PhasorArray.from_json(text)


def _entry_labels(a: PhasorArray, prefix: str) -> list:
    return [f"{prefix}{i}{j}" for i in range(a.rows) for j in range(a.cols)]


def spectrum_table(a: PhasorArray) -> tuple:
    """One row per harmonic: k then |A_ij,k| for every entry, row-major."""
    magnitudes = np.abs(a.coeffs).reshape(a.rows * a.cols, -1).T
    table = np.column_stack([a.harmonics(), magnitudes])
    return table, ["k"] + _entry_labels(a, "a")


def time_table(a: PhasorArray, period: float, n_points: int = 200) -> tuple:
    """A(t) sampled over one period; complex arrays get separate real and imaginary columns."""
    times = period * np.arange(n_points) / n_points
    values = a.eval_time(period, times).reshape(n_points, -1)
    labels = _entry_labels(a, "a")
    if np.iscomplexobj(values):
        values = np.column_stack([values.real, values.imag])
        labels = [f"re_{x}" for x in labels] + [f"im_{x}" for x in labels]
    return np.column_stack([times, values]), ["t"] + labels


def trajectory_table(response: TimeResponse) -> tuple:
    states = np.real_if_close(response.states)
    outputs = np.real_if_close(response.outputs)
    table = np.column_stack([response.time, states.real, outputs.real])
    columns = ["t"] + [f"x{i}" for i in range(states.shape[1])] + [f"y{i}" for i in range(outputs.shape[1])]
    return table, columns
