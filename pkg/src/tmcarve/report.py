"""The machine-readable report shared by the ``validate``, ``coverage``,
``classify`` and ``simulate`` commands, and its plain-text rendering.

Every report carries the command name, an ``ok`` flag and a list of findings
with the stable fields ``severity``, ``code``, ``subjects`` and ``message``.
Command-specific payloads go into optional sections.  The plain-text form
prints exactly the same findings and sections, one item per line.
"""

from __future__ import annotations

from collections.abc import Iterable
from dataclasses import dataclass, field

from .dsl import SourceDiagnostic

_FINDING = {
    "type": "object",
    "required": ["severity", "code", "subjects", "message"],
    "additionalProperties": False,
    "properties": {
        "severity": {"enum": ["error", "warning"]},
        "code": {"type": "string", "pattern": "^[EW]-[A-Z-]+$"},
        "subjects": {"type": "array", "items": {"type": "string"}},
        "message": {"type": "string"},
    },
}

REPORT_SCHEMA: dict = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "title": "tmcarve report",
    "type": "object",
    "required": ["command", "ok", "findings"],
    "additionalProperties": False,
    "properties": {
        "command": {"enum": ["validate", "coverage", "classify", "simulate"]},
        "model": {"type": "string"},
        "ok": {"type": "boolean"},
        "findings": {"type": "array", "items": _FINDING},
        "coverage": {
            "type": "object",
            "required": ["uncovered", "overlaps", "event_count", "action_count"],
            "additionalProperties": False,
            "properties": {
                "uncovered": {"type": "array", "items": {"type": "string"}},
                "overlaps": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["action", "events"],
                        "additionalProperties": False,
                        "properties": {
                            "action": {"type": "string"},
                            "events": {"type": "array", "items": {"type": "string"}},
                        },
                    },
                },
                "event_count": {"type": "integer", "minimum": 0},
                "action_count": {"type": "integer", "minimum": 0},
            },
        },
        "classes": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["event", "class"],
                "additionalProperties": False,
                "properties": {
                    "event": {"type": "string"},
                    "class": {"enum": ["Transport", "Export", "Transformation", "Structural", "Mixed"]},
                },
            },
        },
        "summary": {
            "type": "object",
            "additionalProperties": {"type": "integer", "minimum": 0},
        },
        "trace": {
            "type": "object",
            "required": ["scenario", "occurrences"],
            "additionalProperties": False,
            "properties": {
                "scenario": {"type": "string"},
                "occurrences": {
                    "type": "array",
                    "items": {
                        "type": "object",
                        "required": ["event", "ordinal"],
                        "additionalProperties": False,
                        "properties": {
                            "event": {"type": "string"},
                            "ordinal": {"type": "integer", "minimum": 1},
                        },
                    },
                },
            },
        },
    },
}


def finding(severity: str, code: str, subjects: Iterable[str], message: str) -> dict:
    return {"severity": severity, "code": code, "subjects": list(subjects), "message": message}


def from_source(diag: SourceDiagnostic, source: str) -> dict:
    return finding(diag.severity, diag.code, [f"{source}:{diag.line}:{diag.column}"], diag.message)


@dataclass
class Report:
    command: str
    model: str = ""
    findings: list[dict] = field(default_factory=list)
    sections: dict = field(default_factory=dict)

    @property
    def errors(self) -> int:
        return sum(1 for f in self.findings if f["severity"] == "error")

    @property
    def warnings(self) -> int:
        return sum(1 for f in self.findings if f["severity"] == "warning")

    def to_dict(self) -> dict:
        out = {"command": self.command, "ok": self.errors == 0, "findings": list(self.findings)}
        if self.model:
            out["model"] = self.model
        out.update(self.sections)
        return out

    def to_text(self) -> str:
        lines = [
            f"{f['severity'].upper()} {f['code']} {', '.join(f['subjects'])}: {f['message']}"
            for f in self.findings
        ]
        cov = self.sections.get("coverage")
        if cov is not None:
            lines.append(f"events: {cov['event_count']}  actions: {cov['action_count']}")
            lines += [f"uncovered {aid}" for aid in cov["uncovered"]]
            lines += [f"overlap {o['action']}: {', '.join(o['events'])}" for o in cov["overlaps"]]
        for item in self.sections.get("classes", []):
            lines.append(f"{item['event']} {item['class']}")
        summary = self.sections.get("summary")
        if summary:
            lines.append("  ".join(f"{k}: {v}" for k, v in summary.items()))
        trace = self.sections.get("trace")
        if trace is not None:
            lines += [f"{o['ordinal']} {o['event']}" for o in trace["occurrences"]]
        return "".join(line + "\n" for line in lines)
