"""JSON report assembly.

Reports are one JSON document per run. Floats are written with ``repr``
(shortest round-trip form); non-finite values become the strings
``"inf"``, ``"-inf"`` and ``"nan"`` because JSON has no literal for them.
"""

from __future__ import annotations

import dataclasses
import datetime as _dt
import enum
import json
import math
from importlib import resources
from typing import Any

SCHEMA_VERSION = "1.0"

STATUS = {
    0: "ok",
    1: "hypothesis_failed",
    2: "solve_failed",
    3: "input_error",
    4: "inconclusive",
}


def to_jsonable(obj: Any) -> Any:
    """Recursively convert results into JSON-safe structures.

    Dataclass fields carrying ``metadata={"report": False}`` are dropped.
    """
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        out = {}
        for f in dataclasses.fields(obj):
            if f.metadata.get("report", True):
                out[f.name] = to_jsonable(getattr(obj, f.name))
        return out
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, bool) or obj is None or isinstance(obj, str):
        return obj
    if isinstance(obj, int):
        return obj
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    if hasattr(obj, "item"):  # numpy scalars
        return to_jsonable(obj.item())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def hypotheses_dict(hyp) -> dict | None:
    if hyp is None:
        return None
    out = to_jsonable(hyp)
    out["passed"] = hyp.passed
    return out


def build_report(
    *,
    command: str,
    exit_code: int,
    scenario_name: str | None,
    hypotheses=None,
    solve=None,
    certify=None,
    scan=None,
    error: str | None = None,
    timestamp: bool = True,
) -> dict:
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "scenario_name": scenario_name,
        "status": STATUS[exit_code],
        "exit_code": exit_code,
        "error": error,
        "hypotheses": hypotheses_dict(hypotheses),
        "solve": to_jsonable(solve) if solve is not None else None,
        "certify": to_jsonable(certify) if certify is not None else None,
        "scan": to_jsonable(scan) if scan is not None else None,
    }
    if timestamp:
        report["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return report


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def load_schema() -> dict:
    text = (resources.files("comfix") / "schema" / "report.schema.json").read_text(encoding="utf-8")
    return json.loads(text)
