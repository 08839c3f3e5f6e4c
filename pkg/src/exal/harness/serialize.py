"""Report serialisation: JSON with 17 significant digits, CSV for sweeps."""

from __future__ import annotations

import csv
import io
import json
import math

import numpy as np

SWEEP_HEADER = ("c", "start_id", "converged", "alf_final", "dist_to_kkt", "infeasibility", "a_max_final")


def _float(v: float) -> str:
    if math.isnan(v):
        return "NaN"
    if math.isinf(v):
        return "Infinity" if v > 0 else "-Infinity"
    return "%.17g" % v


def _emit(obj, out: list, indent: int, level: int):
    pad = "\n" + " " * (indent * (level + 1)) if indent else ""
    end = "\n" + " " * (indent * level) if indent else ""
    sep = "," + (pad if indent else " ")
    if isinstance(obj, (bool, np.bool_)):
        out.append("true" if obj else "false")
    elif obj is None:
        out.append("null")
    elif isinstance(obj, (int, np.integer)):
        out.append(str(int(obj)))
    elif isinstance(obj, (float, np.floating)):
        out.append(_float(float(obj)))
    elif isinstance(obj, str):
        out.append(json.dumps(obj))
    elif isinstance(obj, np.ndarray):
        _emit(obj.tolist(), out, indent, level)
    elif isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{" + pad)
        for i, (k, v) in enumerate(obj.items()):
            if i:
                out.append(sep)
            out.append(json.dumps(str(k)) + ": ")
            _emit(v, out, indent, level + 1)
        out.append(end + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        # short numeric vectors stay on one line
        flat = all(isinstance(v, (int, float, np.number)) and not isinstance(v, bool) for v in obj)
        if flat or not indent:
            out.append("[")
            for i, v in enumerate(obj):
                if i:
                    out.append(", ")
                _emit(v, out, indent, level + 1)
            out.append("]")
            return
        out.append("[" + pad)
        for i, v in enumerate(obj):
            if i:
                out.append(sep)
            _emit(v, out, indent, level + 1)
        out.append(end + "]")
    else:
        raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """JSON text; floats carry 17 significant digits and +-inf is written as Infinity."""
    out: list = []
    _emit(obj, out, indent, 0)
    return "".join(out) + "\n"


def loads(text: str):
    return json.loads(text)


def solve_report_dict(report) -> dict:
    xi = report.xi_final
    return {
        "problem": report.problem,
        "c_final": report.c_final,
        "iterations": report.inner_iterations,
        "x": xi.x.tolist(),
        "lambda": xi.lam.tolist(),
        "mu": xi.mu.tolist(),
        "kkt": report.kkt.as_dict(),
        "alf_value": report.alf_final,
        "history": [dict(h) for h in report.history],
        "termination": report.termination,
    }


def sweep_csv(table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for r in table.rows:
        w.writerow(
            [
                _float(r.c),
                r.start_id,
                "true" if r.converged else "false",
                _float(r.alf_final),
                _float(r.dist_to_kkt),
                _float(r.infeasibility),
                _float(r.a_max_final),
            ]
        )
    return buf.getvalue()


def sweep_dict(table) -> dict:
    return {
        "problem": table.problem,
        "c_star": table.c_star,
        "rows": [
            {
                "c": r.c,
                "start_id": r.start_id,
                "converged": r.converged,
                "alf_final": r.alf_final,
                "dist_to_kkt": r.dist_to_kkt,
                "infeasibility": r.infeasibility,
                "a_max_final": r.a_max_final,
            }
            for r in table.rows
        ],
    }


def serialize_report(report, fmt: str = "json") -> bytes:
    """Bytes for a SolveReport, SweepTable or list of verification checks."""
    from ..solver import SolveReport, SweepTable

    if fmt not in ("json", "csv"):
        raise ValueError(f"unknown format {fmt!r}")
    if isinstance(report, SweepTable):
        text = sweep_csv(report) if fmt == "csv" else dumps(sweep_dict(report))
    elif fmt == "csv":
        raise ValueError("csv output is only available for sweep tables")
    elif isinstance(report, SolveReport):
        text = dumps(solve_report_dict(report))
    elif isinstance(report, list):
        text = dumps([r.as_dict() if hasattr(r, "as_dict") else r for r in report])
    elif hasattr(report, "as_dict"):
        text = dumps(report.as_dict())
    else:
        text = dumps(report)
    return text.encode("utf-8")
