"""Problem files (JSON), trace files and matrices (CSV)."""

from __future__ import annotations

import csv
import io
import json
import math
from pathlib import Path

import numpy as np

from .core import ConvergenceTrace, ProjectionProblem
from .errors import GeoProjError
from .geometry import P_FLOOR, SUM_TOL, Connection

# Hand-written files get a looser sum check; they are rescaled before use.
FILE_SUM_TOL = 1e-9
FLOAT_FMT = "%.17g"


class ProblemFileError(GeoProjError):
    pass


def _vector(value, path: str) -> np.ndarray:
    if not isinstance(value, list):
        raise ProblemFileError(f"{path}: expected a list of numbers, got {type(value).__name__}")
    if len(value) < 2:
        raise ProblemFileError(f"{path}: need at least 2 entries, got {len(value)}")
    for i, x in enumerate(value):
        if isinstance(x, bool) or not isinstance(x, (int, float)):
            raise ProblemFileError(f"{path}[{i}]: expected a number, got {x!r}")
        if not math.isfinite(x):
            raise ProblemFileError(f"{path}[{i}]: value {x!r} is not finite")
        if x < P_FLOOR:
            raise ProblemFileError(f"{path}[{i}]: value {x!r} must be strictly positive (>= {P_FLOOR})")
    arr = np.asarray(value, dtype=float)
    s = float(arr.sum())
    if abs(s - 1.0) > FILE_SUM_TOL:
        raise ProblemFileError(f"{path}: entries sum to {s!r}, expected 1")
    if abs(s - 1.0) > SUM_TOL:
        arr = arr / s
    return arr


def parse_problem(data: dict) -> ProjectionProblem:
    """Validate a decoded problem document; errors name the offending field."""
    if not isinstance(data, dict):
        raise ProblemFileError("top level: expected a JSON object")
    for key in ("target", "basis"):
        if key not in data:
            raise ProblemFileError(f"{key}: missing required field")
    extra = set(data) - {"target", "basis", "connection"}
    if extra:
        raise ProblemFileError(f"{sorted(extra)[0]}: unknown field")
    target = _vector(data["target"], "target")
    basis_raw = data["basis"]
    if not isinstance(basis_raw, list):
        raise ProblemFileError(f"basis: expected a list of vectors, got {type(basis_raw).__name__}")
    if len(basis_raw) < 2:
        raise ProblemFileError(f"basis: need at least 2 members, got {len(basis_raw)}")
    basis = [_vector(b, f"basis[{k}]") for k, b in enumerate(basis_raw)]
    for k, b in enumerate(basis):
        if b.size != target.size:
            raise ProblemFileError(f"basis[{k}]: has {b.size} entries but target has {target.size}")
    conn = data.get("connection", Connection.E_AS_NABLA.value)
    try:
        connection = Connection(conn)
    except ValueError:
        raise ProblemFileError(
            f"connection: expected 'e_as_nabla' or 'm_as_nabla', got {conn!r}"
        ) from None
    return ProjectionProblem(target, np.vstack(basis), connection)


def load_problem(path) -> ProjectionProblem:
    text = Path(path).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ProblemFileError(f"line {e.lineno} column {e.colno}: {e.msg}") from None
    return parse_problem(data)


def problem_to_dict(problem: ProjectionProblem) -> dict:
    return {
        "target": problem.target.tolist(),
        "basis": problem.basis.tolist(),
        "connection": problem.connection.value,
    }


def dump_problem(problem: ProjectionProblem) -> str:
    # repr-based floats round-trip exactly
    return json.dumps(problem_to_dict(problem), indent=2) + "\n"


def trace_to_csv(trace: ConvergenceTrace) -> str:
    K = trace.records[0].w.size if trace.records else 0
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["iter", "D", "max_abs_gamma"] + [f"w_{k + 1}" for k in range(K)] + [f"gamma_{k + 1}" for k in range(K)]
    )
    for r in trace.records:
        writer.writerow(
            [str(r.iteration), FLOAT_FMT % r.divergence, FLOAT_FMT % r.max_abs_gamma]
            + [FLOAT_FMT % x for x in r.w]
            + [FLOAT_FMT % x for x in r.gamma]
        )
    return buf.getvalue()


def read_matrix(path) -> np.ndarray:
    """Row-major numeric CSV; a non-numeric first row is treated as a header."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ProblemFileError(f"{path}: empty matrix file")
    try:
        [float(c) for c in rows[0]]
    except ValueError:
        rows = rows[1:]
    out = []
    width = None
    for i, r in enumerate(rows):
        try:
            vals = [float(c) for c in r]
        except ValueError as e:
            raise ProblemFileError(f"{path}: row {i + 1}: {e}") from None
        if width is None:
            width = len(vals)
        elif len(vals) != width:
            raise ProblemFileError(f"{path}: row {i + 1} has {len(vals)} columns, expected {width}")
        out.append(vals)
    return np.asarray(out, dtype=float)


def write_matrix(path, M: np.ndarray, header: list[str] | None = None) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if header:
            writer.writerow(header)
        for row in np.atleast_2d(M):
            writer.writerow([FLOAT_FMT % x for x in row])
