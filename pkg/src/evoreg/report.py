"""Verification report structures and byte-level serializations.

Reports are plain data: every numeric field is a float or a list of
floats, so two runs with the same seed serialize to identical bytes.
Wall-clock information is deliberately excluded for that reason.  The
JSON form round-trips through report_from_json; the CSV form exposes the
primary per-node series for plotting; the table form is for terminals.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Optional

SCHEMA_VERSION = 1

_FMT = ".17g"  # shortest-exact float formatting for CSV round-trips


@dataclass(frozen=True)
class CheckRecord:
    """One verified inequality or property."""

    name: str
    anchor: str  # the formula under test, spelled out
    value: float
    tolerance: Optional[float]
    passed: bool
    details: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class RefinementRow:
    """Stability of a quantity under one refinement study."""

    study: str      # e.g. "K->2K", "R->10R", "N->2N"
    quantity: str
    base: float
    refined: float
    drift: float    # |refined - base| / |base|
    tolerance: float
    passed: bool


@dataclass(frozen=True)
class Series:
    """Per-node curve for CSV export."""

    name: str
    times: list[float]
    values: list[float]
    tolerance: Optional[float] = None


@dataclass(frozen=True)
class VerificationReport:
    subcommand: str
    scenario: dict[str, Any]
    seed: int
    checks: list[CheckRecord]
    refinements: list[RefinementRow] = field(default_factory=list)
    series: list[Series] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    schema_version: int = SCHEMA_VERSION

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks) and all(
            r.passed for r in self.refinements
        )


def drift_row(study: str, quantity: str, base: float, refined: float,
              tolerance: float) -> RefinementRow:
    scale = max(abs(base), 1e-300)
    drift = abs(refined - base) / scale
    return RefinementRow(study=study, quantity=quantity, base=float(base),
                         refined=float(refined), drift=float(drift),
                         tolerance=float(tolerance), passed=drift <= tolerance)


def emit_report(report: VerificationReport, format: str = "table") -> bytes:
    """Serialize a report; format is one of json, csv, table."""
    if format == "json":
        return _to_json(report)
    if format == "csv":
        return _to_csv(report)
    if format == "table":
        return _to_table(report)
    raise ValueError(f"unknown report format {format!r} (json, csv, table)")


def _to_json(report: VerificationReport) -> bytes:
    doc = {
        "schema_version": report.schema_version,
        "subcommand": report.subcommand,
        "seed": report.seed,
        "passed": report.passed,
        "scenario": report.scenario,
        "checks": [
            {
                "name": c.name,
                "anchor": c.anchor,
                "value": c.value,
                "tolerance": c.tolerance,
                "passed": c.passed,
                "details": c.details,
            }
            for c in report.checks
        ],
        "refinements": [
            {
                "study": r.study,
                "quantity": r.quantity,
                "base": r.base,
                "refined": r.refined,
                "drift": r.drift,
                "tolerance": r.tolerance,
                "passed": r.passed,
            }
            for r in report.refinements
        ],
        "series": [
            {
                "name": s.name,
                "tolerance": s.tolerance,
                "times": s.times,
                "values": s.values,
            }
            for s in report.series
        ],
        "warnings": report.warnings,
    }
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")


def report_from_json(data: bytes) -> VerificationReport:
    doc = json.loads(data.decode("utf-8"))
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema {doc.get('schema_version')!r}")
    return VerificationReport(
        subcommand=doc["subcommand"],
        scenario=doc["scenario"],
        seed=doc["seed"],
        checks=[
            CheckRecord(name=c["name"], anchor=c["anchor"], value=c["value"],
                        tolerance=c["tolerance"], passed=c["passed"],
                        details=c.get("details", {}))
            for c in doc["checks"]
        ],
        refinements=[
            RefinementRow(study=r["study"], quantity=r["quantity"], base=r["base"],
                          refined=r["refined"], drift=r["drift"],
                          tolerance=r["tolerance"], passed=r["passed"])
            for r in doc["refinements"]
        ],
        series=[
            Series(name=s["name"], times=s["times"], values=s["values"],
                   tolerance=s["tolerance"])
            for s in doc["series"]
        ],
        warnings=list(doc.get("warnings", [])),
        schema_version=doc["schema_version"],
    )


def _to_csv(report: VerificationReport) -> bytes:
    if not report.series:
        raise ValueError("report has no per-node series to export as CSV")
    return series_csv(report.series[0])


def series_csv(s: Series) -> bytes:
    tol = "" if s.tolerance is None else format(s.tolerance, _FMT)
    lines = [f"t,{s.name},tolerance"]
    for t, v in zip(s.times, s.values):
        lines.append(f"{format(t, _FMT)},{format(v, _FMT)},{tol}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _to_table(report: VerificationReport) -> bytes:
    lines = []
    scen = " ".join(f"{k}={v}" for k, v in sorted(report.scenario.items()))
    lines.append(f"subcommand: {report.subcommand}   seed: {report.seed}")
    lines.append(f"scenario: {scen}")
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'}")
    lines.append("")
    lines.append(f"{'check':<28} {'value':>12} {'tolerance':>10} {'status':>6}")
    for c in report.checks:
        tol = "-" if c.tolerance is None else f"{c.tolerance:.4g}"
        lines.append(
            f"{c.name:<28} {c.value:>12.6g} {tol:>10} "
            f"{'PASS' if c.passed else 'FAIL':>6}"
        )
        lines.append(f"    {c.anchor}")
    if report.refinements:
        lines.append("")
        lines.append(
            f"{'refinement':<12} {'quantity':<20} {'base':>12} {'refined':>12} "
            f"{'drift':>9} {'tol':>7} {'status':>6}"
        )
        for r in report.refinements:
            lines.append(
                f"{r.study:<12} {r.quantity:<20} {r.base:>12.6g} {r.refined:>12.6g} "
                f"{r.drift:>9.3g} {r.tolerance:>7.3g} "
                f"{'PASS' if r.passed else 'FAIL':>6}"
            )
    for w in report.warnings:
        lines.append(f"warning: {w}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def render_paths_csv(times, values) -> bytes:
    """Long-form (t, mode, value) dump of a trajectory, exact round-trip."""
    lines = ["t,mode,value"]
    for i, t in enumerate(times):
        row = values[i]
        ts = format(float(t), _FMT)
        for n, v in enumerate(row):
            lines.append(f"{ts},{n},{format(float(v), _FMT)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_paths_csv(data: bytes):
    """Inverse of render_paths_csv; returns (times, values) arrays."""
    import numpy as np

    lines = data.decode("utf-8").strip().split("\n")
    if lines[0] != "t,mode,value":
        raise ValueError("not a trajectory dump (bad header)")
    rows = [line.split(",") for line in lines[1:]]
    n_modes = max(int(r[1]) for r in rows) + 1
    times = []
    values = []
    for r in rows:
        t, mode, v = float(r[0]), int(r[1]), float(r[2])
        if mode == 0:
            times.append(t)
            values.append([0.0] * n_modes)
        values[-1][mode] = v
    return np.asarray(times), np.asarray(values)
