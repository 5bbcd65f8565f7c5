"""JSON and CSV wire formats.

One matrix schema is used everywhere: ``{"rows": r, "cols": c, "data":
[[re, im], ...]}`` with row-major data. Parsers reject wrong lengths and
non-finite values. CSV uses '.' decimals regardless of locale and prints
floats with 17 significant digits so files round-trip bit-exactly.
JSON schemas for every document type ship under ``schemas/`` at the
repository root.
"""

from __future__ import annotations

import json
import math
from typing import Any, Iterable, Sequence

import numpy as np

from .channels import Instrument
from .compatibility import (
    CompatReport,
    JointInstrumentCandidate,
    JointPovmCandidate,
)
from .errors import ValidationError
from .linalg import DensityOperator, Effect, Povm, Tolerances, UnitaryOperator, as_matrix
from .records import EventLog
from .tomography import TomographyResult


def fmt_float(x: float) -> str:
    """17 significant digits, '.' decimal point, no locale involvement."""
    return format(float(x), ".17g")


# ---------------------------------------------------------------------------
# matrices


def matrix_to_json(m: np.ndarray) -> dict[str, Any]:
    m = np.asarray(m, dtype=complex)
    return {
        "rows": int(m.shape[0]),
        "cols": int(m.shape[1]),
        "data": [[float(z.real), float(z.imag)] for z in m.reshape(-1)],
    }


def matrix_from_json(obj: Any) -> np.ndarray:
    if not isinstance(obj, dict):
        raise ValidationError("matrix document must be a JSON object")
    try:
        rows, cols, data = int(obj["rows"]), int(obj["cols"]), obj["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed matrix document: {exc}") from exc
    if rows < 1 or cols < 1:
        raise ValidationError(f"matrix dimensions must be positive, got {rows}x{cols}")
    if not isinstance(data, list) or len(data) != rows * cols:
        raise ValidationError(
            f"matrix data length {len(data) if isinstance(data, list) else '?'} "
            f"!= rows*cols = {rows * cols}"
        )
    entries = []
    for pair in data:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2:
            raise ValidationError("matrix entries must be [re, im] pairs")
        re, im = float(pair[0]), float(pair[1])
        if not (math.isfinite(re) and math.isfinite(im)):
            raise ValidationError("matrix entries must be finite")
        entries.append(complex(re, im))
    return as_matrix(np.array(entries, dtype=complex).reshape(rows, cols))


def state_from_json(obj: Any, tol: Tolerances | None = None) -> DensityOperator:
    kwargs = {"tol": tol} if tol is not None else {}
    return DensityOperator(matrix_from_json(obj), **kwargs)


def unitary_from_json(obj: Any) -> UnitaryOperator:
    return UnitaryOperator(matrix_from_json(obj))


# ---------------------------------------------------------------------------
# POVMs and instruments


def povm_to_json(p: Povm) -> dict[str, Any]:
    return {
        "dim": p.dim,
        "labels": list(p.labels),
        "effects": [matrix_to_json(e.matrix) for e in p.effects],
    }


def povm_from_json(obj: Any, tol: Tolerances | None = None) -> Povm:
    if not isinstance(obj, dict) or "effects" not in obj or "labels" not in obj:
        raise ValidationError("POVM document needs 'labels' and 'effects'")
    effects = tuple(matrix_from_json(e) for e in obj["effects"])
    kwargs = {"tol": tol} if tol is not None else {}
    return Povm(
        tuple(Effect(m, **kwargs) for m in effects),
        tuple(obj["labels"]),
        **kwargs,
    )


def instrument_to_json(ins: Instrument) -> dict[str, Any]:
    return {
        "dims": [ins.d_in, ins.d_out],
        "branches": {
            label: [matrix_to_json(k) for k in ops]
            for label, ops in ins.branches.items()
        },
    }


def instrument_from_json(obj: Any, tol: Tolerances | None = None) -> Instrument:
    if not isinstance(obj, dict) or "dims" not in obj or "branches" not in obj:
        raise ValidationError("instrument document needs 'dims' and 'branches'")
    dims = obj["dims"]
    if not isinstance(dims, list) or len(dims) != 2:
        raise ValidationError("instrument 'dims' must be [d_in, d_out]")
    branches = {
        str(label): [matrix_from_json(k) for k in ops]
        for label, ops in obj["branches"].items()
    }
    kwargs = {"tol": tol} if tol is not None else {}
    return Instrument(branches, (int(dims[0]), int(dims[1])), **kwargs)


# ---------------------------------------------------------------------------
# reports and logs


def compat_report_to_json(r: CompatReport) -> dict[str, Any]:
    joint: Any = None
    if isinstance(r.joint, JointPovmCandidate):
        joint = {
            "type": "povm-grid",
            "row_labels": list(r.joint.row_labels),
            "col_labels": list(r.joint.col_labels),
            "effects": [
                [matrix_to_json(r.joint.effects[i, j]) for j in range(len(r.joint.col_labels))]
                for i in range(len(r.joint.row_labels))
            ],
        }
    elif isinstance(r.joint, JointInstrumentCandidate):
        joint = {
            "type": "instrument-grid",
            "dims": list(r.joint.dims),
            "row_labels": list(r.joint.row_labels),
            "col_labels": list(r.joint.col_labels),
            "chois": [
                [matrix_to_json(r.joint.chois[i, j]) for j in range(len(r.joint.col_labels))]
                for i in range(len(r.joint.row_labels))
            ],
        }
    return {
        "verdict": r.verdict,
        "witness_margin": r.witness_margin,
        "iterations": r.iterations,
        "tolerance": r.tolerance,
        "joint": joint,
    }


def event_log_to_json(log: EventLog) -> dict[str, Any]:
    return {
        "labels": list(log.labels),
        "counts": dict(log.counts),
        "shots": log.shots,
        "seed": log.seed,
    }


def tomography_result_to_json(res: TomographyResult) -> dict[str, Any]:
    return {
        "povm": povm_to_json(res.povm_hat),
        "eta_hat": res.eta_hat,
        "eta_stderr": res.eta_stderr,
        "shots_per_probe": res.shots_per_probe,
    }


# ---------------------------------------------------------------------------
# file helpers


def dumps(obj: Any) -> str:
    """Canonical JSON text: sorted keys, two-space indent, trailing newline."""
    return json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n"


def csv_lines(header: Sequence[str], rows: Iterable[Sequence[Any]]) -> str:
    """Minimal CSV writer: floats at 17 significant digits, '.' decimal."""
    out = [",".join(header)]
    for row in rows:
        cells = []
        for cell in row:
            if isinstance(cell, float):
                cells.append(fmt_float(cell))
            else:
                cells.append(str(cell))
        out.append(",".join(cells))
    return "\n".join(out) + "\n"
