"""Verification report assembly, JSON serialization and table rendering.

The JSON layout is stable: fixed key order, residuals written with 17
significant digits, checks in execution order.  Two runs with the same
config and seed therefore produce byte-identical files (timing can be
disabled in the config for exact comparisons).
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .suites import CheckRecord


@dataclass
class VerificationReport:
    suite: list
    spacetime: str
    fluid: str
    settings: dict
    checks: list
    runtime_seconds: float = 0.0

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def _fmt(x: float) -> float:
    # round-trip through the fixed 17-significant-digit representation so
    # emitted and parsed reports compare equal
    return float(f"{float(x):.17g}")


def report_to_dict(report: VerificationReport) -> dict:
    return {
        "suite": list(report.suite),
        "spacetime": report.spacetime,
        "fluid": report.fluid,
        "settings": report.settings,
        "checks": [
            {
                "name": c.name,
                "anchor": c.anchor,
                "max_residual": _fmt(c.max_residual),
                "tol": _fmt(c.tol),
                "pass": bool(c.passed),
            }
            for c in report.checks
        ],
        "runtime_seconds": _fmt(report.runtime_seconds),
        "pass": report.passed,
    }


def emit_report(report: VerificationReport, path: str, fmt: str = "json") -> None:
    """Write the report; ``fmt`` selects structured JSON or a plain table."""
    if fmt == "json":
        text = to_json(report)
    elif fmt == "table":
        text = render_table(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    with open(path, "w") as fh:
        fh.write(text)


def to_json(report: VerificationReport) -> str:
    return json.dumps(report_to_dict(report), indent=2) + "\n"


def parse_report(text: str) -> VerificationReport:
    raw = json.loads(text)
    checks = [
        CheckRecord(
            name=c["name"],
            anchor=c["anchor"],
            max_residual=float(c["max_residual"]),
            tol=float(c["tol"]),
            passed=bool(c["pass"]),
        )
        for c in raw["checks"]
    ]
    return VerificationReport(
        suite=list(raw["suite"]),
        spacetime=raw["spacetime"],
        fluid=raw["fluid"],
        settings=raw["settings"],
        checks=checks,
        runtime_seconds=float(raw["runtime_seconds"]),
    )


def render_table(report: VerificationReport) -> str:
    rows = [("check", "max residual", "tolerance", "status")]
    for c in report.checks:
        rows.append((c.name, f"{c.max_residual:.3e}", f"{c.tol:.1e}",
                     "pass" if c.passed else "FAIL"))
    widths = [max(len(r[i]) for r in rows) for i in range(4)]
    lines = [
        f"suites: {', '.join(report.suite)}   spacetime: {report.spacetime}   "
        f"fluid: {report.fluid}",
        "",
    ]
    for i, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)))
        if i == 0:
            lines.append("  ".join("-" * widths[j] for j in range(4)))
    lines.append("")
    lines.append(
        f"overall: {'PASS' if report.passed else 'FAIL'}   "
        f"runtime: {report.runtime_seconds:.2f} s"
    )
    return "\n".join(lines) + "\n"
