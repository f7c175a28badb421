"""JSON helpers shared by the CLI and the serializable types."""

from __future__ import annotations

import hashlib
import json
import math
from pathlib import Path

import numpy as np

from modspace.metric import MetricGraph


def _default(obj):
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "numerator") and hasattr(obj, "denominator"):
        return float(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _clean(obj):
    # JSON has no inf/nan; store them as null
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    return obj


def dumps(obj) -> str:
    """Deterministic JSON; floats use shortest round-trip repr (up to 17 digits)."""
    return json.dumps(_clean(json.loads(json.dumps(obj, default=_default))), indent=1, allow_nan=False)


def write_json(path, obj) -> None:
    Path(path).write_text(dumps(obj) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())


def space_hash(g: MetricGraph) -> str:
    payload = json.dumps(g.to_json_dict(), sort_keys=True, default=_default)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


def read_space(path) -> MetricGraph:
    return MetricGraph.from_json_dict(read_json(path))
