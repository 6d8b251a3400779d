"""Serialisation of reports to JSON, CSV and plain-text tables.

Output is deterministic: keys are sorted and floats use Python's shortest
round-trip representation, so identical inputs give byte-identical output.
"""

from __future__ import annotations

import csv
import io
import json
from fractions import Fraction

FORMATS = ("json", "csv", "table")

_SECTIONS = {"exact": "exact", "test": "tests", "trend": "trends"}


def _doc(result) -> dict:
    if hasattr(result, "to_json"):
        return result.to_json()
    if isinstance(result, dict):
        return result
    raise TypeError(f"cannot serialise {type(result).__name__}")


def _default(obj):
    if isinstance(obj, Fraction):
        return {"num": obj.numerator, "den": obj.denominator}
    if hasattr(obj, "item"):  # numpy scalars
        return obj.item()
    if hasattr(obj, "tolist"):
        return obj.tolist()
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def _fmt(value) -> str:
    if isinstance(value, dict) and set(value) == {"num", "den"}:
        return f"{value['num']}/{value['den']}" if value["den"] != 1 else str(value["num"])
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


_ROW_FIELDS = ("type", "name", "model", "lhs", "rhs", "statistic", "p_value", "estimate", "target", "pass", "ok")


def _row(doc: dict) -> dict:
    row = {k: _fmt(doc.get(k)) for k in _ROW_FIELDS}
    row["name"] = _fmt(doc.get("name", doc.get("claim")))
    if not row["model"]:
        row["model"] = _fmt(doc.get("extra", {}).get("model")) if isinstance(doc.get("extra"), dict) else ""
    return row


def emit_report(results, fmt: str = "json") -> bytes:
    """Serialise a list of reports.

    JSON groups documents into typed sections (``exact``, ``tests``,
    ``trends``, ``other``); CSV and table formats give one summary row per
    report.
    """
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; expected one of {FORMATS}")
    docs = [_doc(r) for r in results]
    if fmt == "json":
        grouped = {"exact": [], "tests": [], "trends": [], "other": []}
        for d in docs:
            grouped[_SECTIONS.get(d.get("type"), "other")].append(d)
        summary = {
            "total": len(docs),
            "ok": sum(1 for d in docs if d.get("ok", True)),
            "all_ok": all(d.get("ok", True) for d in docs),
        }
        out = {"summary": summary, **grouped}
        return (json.dumps(out, sort_keys=True, indent=2, default=_default) + "\n").encode("utf-8")
    rows = [_row(json.loads(json.dumps(d, default=_default))) for d in docs]
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=_ROW_FIELDS, lineterminator="\n")
        w.writeheader()
        w.writerows(rows)
        return buf.getvalue().encode("utf-8")
    widths = {k: max([len(k)] + [len(r[k]) for r in rows]) for k in _ROW_FIELDS}
    lines = ["  ".join(k.ljust(widths[k]) for k in _ROW_FIELDS)]
    lines += ["  ".join(r[k].ljust(widths[k]) for k in _ROW_FIELDS) for r in rows]
    return ("\n".join(line.rstrip() for line in lines) + "\n").encode("utf-8")
