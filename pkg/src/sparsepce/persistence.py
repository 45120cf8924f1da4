"""JSON model files and CSV exports.

Floats are written with ``repr`` (shortest round-trip form), so loading a
file gives back the exact coefficients and bounds.
"""
from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .adaptive import Checkpoint, PceModel
from .basis import InputModel, UniformVariable
from .multi_index import MultiIndexSet, format_index, parse_index

SCHEMA = "sparsepce-model"
SCHEMA_VERSION = 1


class ModelFileError(ValueError):
    pass


def _clean(value):
    """Make build_info JSON-safe and deterministic."""
    if isinstance(value, dict):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else repr(value)
    return value


def model_to_dict(model: PceModel) -> dict:
    return {
        "schema": SCHEMA,
        "version": SCHEMA_VERSION,
        "input_model": {
            "distribution": "uniform",
            "bounds": [[v.lower, v.upper] for v in model.input_model.variables],
        },
        "multi_indices": [format_index(p) for p in model.index_set],
        "coefficients": [float(c) for c in model.coefficients],
        "build_info": _clean(model.build_info),
    }


def dumps_model(model: PceModel) -> str:
    return json.dumps(model_to_dict(model), indent=1, sort_keys=False, allow_nan=False) + "\n"


def save_model(model: PceModel, path) -> None:
    Path(path).write_text(dumps_model(model))


def model_from_dict(doc: dict) -> PceModel:
    if not isinstance(doc, dict) or doc.get("schema") != SCHEMA:
        raise ModelFileError("not a sparsepce model file")
    if doc.get("version") != SCHEMA_VERSION:
        raise ModelFileError(f"unsupported model file version {doc.get('version')!r}")
    try:
        bounds = doc["input_model"]["bounds"]
        input_model = InputModel([UniformVariable(float(lo), float(hi)) for lo, hi in bounds])
        indices = [parse_index(s) for s in doc["multi_indices"]]
        mset = MultiIndexSet(input_model.dimension, indices)
        coeffs = np.array([float(c) for c in doc["coefficients"]], dtype=np.float64)
        return PceModel(mset, coeffs, input_model, dict(doc.get("build_info", {})))
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFileError(f"malformed model file: {exc}") from exc


def loads_model(text: str) -> PceModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ModelFileError(f"model file is not valid JSON: {exc}") from exc
    return model_from_dict(doc)


def load_model(path) -> PceModel:
    return loads_model(Path(path).read_text())


HISTORY_HEADER = ["L", "terms", "ls_terms", "criterion_value", "holdout_error", "cv_error"]


def write_csv(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v
                             for v in row])


def write_history_csv(path, history: Sequence[Checkpoint]) -> None:
    write_csv(path, HISTORY_HEADER, (
        (c.ed_size, c.terms, c.ls_terms, c.criterion_value, c.holdout_error, c.cv_error)
        for c in history
    ))
