"""Run reports: named checks with explicit tolerances, and their serializations."""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .serialize import csv_text, dumps

SCHEMA_VERSION = "1.0"
CSV_COLUMNS = ("name", "value", "reference", "deviation", "pass")


@dataclass(frozen=True)
class Check:
    """One verified quantity.

    ``kind="close"``: passes when ``deviation = max|value - reference| <= tolerance``.
    ``kind="at_least"``: passes when ``value >= reference - tolerance``; the
    deviation is the shortfall ``max(0, reference - min(value))``.
    """

    name: str
    value: Any
    reference: Any
    deviation: float
    tolerance: float
    passed: bool
    kind: str = "close"

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "value": self.value,
            "reference": self.reference,
            "deviation": self.deviation,
            "tolerance": self.tolerance,
            "pass": self.passed,
        }


def _plain(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    return x


def close_check(name: str, value, reference, tolerance: float) -> Check:
    v = np.asarray(value)
    r = np.asarray(reference)
    dev = float(np.max(np.abs(v - r))) if v.size else 0.0
    return Check(name, _plain(value), _plain(reference), dev, float(tolerance), bool(dev <= tolerance))


def at_least_check(name: str, value, reference: float, tolerance: float = 0.0) -> Check:
    low = float(np.min(np.asarray(value)))
    dev = max(0.0, float(reference) - low)
    return Check(
        name, _plain(value), float(reference), dev, float(tolerance), bool(dev <= tolerance), "at_least"
    )


@dataclass
class RunReport:
    scenario: dict
    checks: list[Check] = field(default_factory=list)
    duration: float | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def sorted_checks(self) -> list[Check]:
        return sorted(self.checks, key=lambda c: c.name)

    def to_dict(self, include_timing: bool = False) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "checks": self.sorted_checks(),
            "passed": self.passed,
        }
        if include_timing:
            out["duration_s"] = self.duration
        return out


def render_text(report: RunReport) -> str:
    lines = [f"scenario: {report.scenario.get('scenario', '?')}"]
    width = max((len(c.name) for c in report.checks), default=0)
    for c in report.sorted_checks():
        flag = "PASS" if c.passed else "FAIL"
        lines.append(
            f"{flag}  {c.name:<{width}}  deviation={c.deviation:.3e}  tolerance={c.tolerance:.1e}"
        )
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'} ({len(report.checks)} checks)")
    return "\n".join(lines) + "\n"


def emit_report(report: RunReport, fmt: str = "json", path=None, include_timing: bool = False) -> str:
    """Serialize ``report`` as ``json``, ``csv`` or ``text``; also write it to ``path`` if given."""
    if fmt == "json":
        text = dumps(report.to_dict(include_timing)) + "\n"
    elif fmt == "csv":
        rows = ((c.name, c.value, c.reference, c.deviation, c.passed) for c in report.sorted_checks())
        text = csv_text(CSV_COLUMNS, rows)
    elif fmt == "text":
        text = render_text(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text
