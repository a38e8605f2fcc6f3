"""Check records, reports and their deterministic JSON/CSV serialization."""
from __future__ import annotations

import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np


@dataclass
class Check:
    name: str
    expected: Any
    actual: Any
    tolerance: Any
    passed: bool

    def to_dict(self):
        return {
            "name": self.name,
            "expected": self.expected,
            "actual": self.actual,
            "tolerance": self.tolerance,
            "passed": bool(self.passed),
        }


def check_close(name, expected, actual, tol, relative=False) -> Check:
    expected, actual = float(expected), float(actual)
    err = abs(actual - expected)
    if relative:
        err /= max(abs(expected), 1e-300)
    return Check(name, expected, actual, tol, bool(math.isfinite(actual) and err <= tol))


def check_below(name, actual, bound) -> Check:
    actual = float(actual)
    return Check(name, f"< {bound:g}", actual, bound, bool(math.isfinite(actual) and actual < bound))


def check_above(name, actual, bound) -> Check:
    actual = float(actual)
    # +inf is a legitimate value here (e.g. an exact stencil has unbounded order)
    return Check(name, f"> {bound:g}", actual, bound, bool(not math.isnan(actual) and actual > bound))


def check_true(name, ok, actual=None) -> Check:
    return Check(name, True, bool(ok) if actual is None else actual, None, bool(ok))


@dataclass
class Report:
    command: str
    inputs: Dict[str, Any]
    results: Dict[str, Any] = field(default_factory=dict)
    checks: List[Check] = field(default_factory=list)
    timing: Dict[str, float] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "command": self.command,
            "inputs": self.inputs,
            "results": self.results,
            "checks": [c.to_dict() for c in self.checks],
            "passed": self.passed,
        }
        if include_timing:
            out["timing"] = self.timing
        return out


def _fmt_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    s = format(x, ".17g")
    if not any(ch in s for ch in ".eE"):
        s += ".0"
    return s


def to_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float written to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {to_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(to_json(v) for v in obj) + "]"
        items = [pad + to_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if hasattr(obj, "to_dict"):
        return to_json(obj.to_dict(), indent, _level)
    return json.dumps(str(obj))


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return _fmt_float(float(v))
    return str(v)


def report_csv(report: Report) -> str:
    """Flux table for mass reports, otherwise one row per check."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    flux = report.results.get("flux_by_radius") if report.command == "mass" else None
    if flux is not None:
        q = report.results.get("quad_order", "")
        w.writerow(["r", "flux", "quad_order"])
        for r, v in flux:
            w.writerow([_cell(float(r)), _cell(float(v)), q])
        return buf.getvalue()
    w.writerow(["name", "expected", "actual", "tolerance", "passed"])
    for c in report.checks:
        w.writerow([c.name, _cell(c.expected), _cell(c.actual), _cell(c.tolerance), "true" if c.passed else "false"])
    return buf.getvalue()


def render(report: Report, fmt: str = "json", include_timing: bool = False) -> str:
    if fmt == "json":
        return to_json(report.to_dict(include_timing)) + "\n"
    if fmt == "csv":
        return report_csv(report)
    raise ValueError(f"unknown format {fmt!r}")


def emit_report(report: Report, fmt: str = "json", path: Optional[str] = None, include_timing: bool = False, stream=None) -> int:
    """Write the rendered report to ``path`` (or ``stream``); returns bytes written."""
    text = render(report, fmt, include_timing)
    data = text.encode("utf-8")
    if path is None or path == "-":
        (stream or sys.stdout).write(text)
    else:
        with open(path, "wb") as fh:
            fh.write(data)
    return len(data)
