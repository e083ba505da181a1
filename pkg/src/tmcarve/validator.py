"""Structural rules for static models and well-formedness rules for dynamic models.

Rules
-----
====  =================  ========  ==============================================
rule  code               severity  finding
====  =================  ========  ==============================================
R1    E-ADJ              error     flow arc kind pair outside the adjacency set
R2    E-SAME-THIMAC      error     transfer->transfer inside one thimac, or any
                                   other flow arc crossing thimacs
R3    W-DANGLING-INPUT   warning   transfer fed from another thimac that never
                                   hands the thing to a receive
R4    W-DANGLING-OUTPUT  warning   release that never hands the thing to a transfer
R5    W-SELF-TRIGGER     warning   trigger arc from an action to itself
R6    E-REGION           error     event region missing from, or disconnected in,
                                   the base model
R7    E-CYCLE / E-LOOP   error     non-repeat cycle, or malformed repeat loop
R8    W-OVERLAP          warning   action shared by several event regions
R9    W-UNCOVERED        warning   action in no event region
====  =================  ========  ==============================================
"""

from __future__ import annotations

import json
from collections.abc import Callable, Iterable
from dataclasses import dataclass, field
from pathlib import Path

from .dynamics import chronology_problems
from .metamodel import (
    DEFAULT_ADJACENCY,
    ActionKind,
    DynamicModel,
    StaticModel,
    natural_key,
)

ERROR = "error"
WARNING = "warning"


@dataclass(frozen=True)
class RuleDiagnostic:
    rule: str
    code: str
    severity: str
    subjects: tuple[str, ...]
    message: str

    @property
    def is_error(self) -> bool:
        return self.severity == ERROR

    def __str__(self) -> str:
        return f"{self.severity.upper()} {self.code} {', '.join(self.subjects)}: {self.message}"

    def to_dict(self) -> dict:
        return {
            "severity": self.severity,
            "code": self.code,
            "subjects": list(self.subjects),
            "message": self.message,
        }


@dataclass(frozen=True)
class RuleConfig:
    """Adjacency set and rule switches.

    ``disabled`` holds rule ids (``"R4"``) or codes (``"W-DANGLING-OUTPUT"``).
    """

    adjacency: frozenset[tuple[ActionKind, ActionKind]] = DEFAULT_ADJACENCY
    disabled: frozenset[str] = field(default_factory=frozenset)

    def enabled(self, rule: str, code: str) -> bool:
        return rule not in self.disabled and code not in self.disabled


def load_rule_config(path: str | Path) -> RuleConfig:
    """Read a JSON rule config.

    ``{"adjacency": [["receive", "release"], ...], "extend": true, "disabled": ["R4"]}``;
    with ``extend`` the listed pairs are added to the default set instead of replacing it.
    """
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    pairs = frozenset((ActionKind(a), ActionKind(b)) for a, b in data.get("adjacency", []))
    if "adjacency" not in data:
        adjacency = DEFAULT_ADJACENCY
    elif data.get("extend", False):
        adjacency = DEFAULT_ADJACENCY | pairs
    else:
        adjacency = pairs
    return RuleConfig(adjacency, frozenset(data.get("disabled", [])))


def _sorted(diags: Iterable[RuleDiagnostic]) -> list[RuleDiagnostic]:
    return sorted(diags, key=lambda d: (d.code, [natural_key(s) for s in d.subjects], d.message))


StaticRule = Callable[[StaticModel, RuleConfig], list[RuleDiagnostic]]


def _r1_adjacency(model: StaticModel, config: RuleConfig) -> list[RuleDiagnostic]:
    out = []
    for f in model.flows.values():
        pair = (model.kind(f.source), model.kind(f.target))
        if pair not in config.adjacency:
            out.append(
                RuleDiagnostic(
                    "R1", "E-ADJ", ERROR, (f.id, f.source, f.target),
                    f"{pair[0].value} -> {pair[1].value} is not a legal flow step",
                )
            )
    return out


def _r2_thimac_boundary(model: StaticModel, config: RuleConfig) -> list[RuleDiagnostic]:
    out = []
    for f in model.flows.values():
        transfer_pair = model.kind(f.source) is ActionKind.TRANSFER and model.kind(f.target) is ActionKind.TRANSFER
        same = model.owner(f.source) == model.owner(f.target)
        if transfer_pair and same:
            msg = "transfer -> transfer must cross a thimac boundary"
        elif not transfer_pair and not same:
            msg = "only transfer -> transfer may cross a thimac boundary"
        else:
            continue
        out.append(RuleDiagnostic("R2", "E-SAME-THIMAC", ERROR, (f.id, f.source, f.target), msg))
    return out


def _r3_dangling_input(model: StaticModel, config: RuleConfig) -> list[RuleDiagnostic]:
    out = []
    flows = list(model.flows.values())
    for a in model.actions.values():
        if a.kind is not ActionKind.TRANSFER:
            continue
        fed = any(f.target == a.id and model.owner(f.source) != a.owner for f in flows)
        received = any(
            f.source == a.id and model.kind(f.target) is ActionKind.RECEIVE for f in flows
        )
        if fed and not received:
            out.append(
                RuleDiagnostic(
                    "R3", "W-DANGLING-INPUT", WARNING, (a.id,),
                    "thing is input but never received",
                )
            )
    return out


def _r4_dangling_output(model: StaticModel, config: RuleConfig) -> list[RuleDiagnostic]:
    out = []
    flows = list(model.flows.values())
    for a in model.actions.values():
        if a.kind is not ActionKind.RELEASE:
            continue
        if not any(f.source == a.id and model.kind(f.target) is ActionKind.TRANSFER for f in flows):
            out.append(
                RuleDiagnostic(
                    "R4", "W-DANGLING-OUTPUT", WARNING, (a.id,),
                    "thing is released but never transferred",
                )
            )
    return out


def _r5_self_trigger(model: StaticModel, config: RuleConfig) -> list[RuleDiagnostic]:
    return [
        RuleDiagnostic("R5", "W-SELF-TRIGGER", WARNING, (t.id, t.source), "action triggers itself")
        for t in model.triggers.values()
        if t.source == t.target
    ]


STATIC_RULES: dict[str, tuple[str, StaticRule]] = {
    "R1": ("E-ADJ", _r1_adjacency),
    "R2": ("E-SAME-THIMAC", _r2_thimac_boundary),
    "R3": ("W-DANGLING-INPUT", _r3_dangling_input),
    "R4": ("W-DANGLING-OUTPUT", _r4_dangling_output),
    "R5": ("W-SELF-TRIGGER", _r5_self_trigger),
}


def validate_static(model: StaticModel, config: RuleConfig | None = None) -> list[RuleDiagnostic]:
    """Run R1-R5; the result is sorted by (code, subjects)."""
    config = config or RuleConfig(adjacency=model.adjacency)
    diags: list[RuleDiagnostic] = []
    for rule, (code, check) in STATIC_RULES.items():
        if config.enabled(rule, code):
            diags.extend(check(model, config))
    return _sorted(diags)


def _r6_regions(dyn: DynamicModel) -> list[RuleDiagnostic]:
    out = []
    actions = dyn.base.actions
    for ev in dyn.events:
        missing = sorted(ev.region.actions - actions.keys())
        if missing:
            out.append(
                RuleDiagnostic("R6", "E-REGION", ERROR, (ev.id,), f"region names unknown action(s) {', '.join(missing)}")
            )
        elif not dyn.base.is_connected(ev.region.actions):
            out.append(RuleDiagnostic("R6", "E-REGION", ERROR, (ev.id,), "region is not connected"))
    return out


def _r7_chronology(dyn: DynamicModel) -> list[RuleDiagnostic]:
    out = []
    chron = dyn.chronology
    for p in chronology_problems(dyn.event_ids, chron.edges):
        subjects = (p.edge.source, p.edge.target) if p.edge else ()
        out.append(RuleDiagnostic("R7", p.code, ERROR, subjects, p.message))
    return out


def _membership(dyn: DynamicModel) -> dict[str, list[str]]:
    owners: dict[str, list[str]] = {aid: [] for aid in dyn.base.actions}
    for ev in dyn.events:
        for aid in ev.region.actions:
            owners.setdefault(aid, []).append(ev.id)
    return owners


def _r8_overlap(dyn: DynamicModel) -> list[RuleDiagnostic]:
    return [
        RuleDiagnostic(
            "R8", "W-OVERLAP", WARNING, (aid, *sorted(evs, key=natural_key)),
            f"action shared by {len(evs)} events",
        )
        for aid, evs in _membership(dyn).items()
        if len(evs) > 1 and aid in dyn.base.actions
    ]


def _r9_uncovered(dyn: DynamicModel) -> list[RuleDiagnostic]:
    return [
        RuleDiagnostic("R9", "W-UNCOVERED", WARNING, (aid,), "action belongs to no event")
        for aid, evs in _membership(dyn).items()
        if not evs
    ]


DYNAMIC_RULES = {
    "R6": ("E-REGION", _r6_regions),
    "R7": ("E-CYCLE", _r7_chronology),
    "R8": ("W-OVERLAP", _r8_overlap),
    "R9": ("W-UNCOVERED", _r9_uncovered),
}


def validate_dynamic(dyn: DynamicModel, config: RuleConfig | None = None) -> list[RuleDiagnostic]:
    """Run R6-R9 on a dynamic model; sorted by (code, subjects)."""
    config = config or RuleConfig()
    diags: list[RuleDiagnostic] = []
    for rule, (code, check) in DYNAMIC_RULES.items():
        if config.enabled(rule, code):
            diags.extend(check(dyn))
    return _sorted(diags)


def errors(diags: Iterable[RuleDiagnostic]) -> list[RuleDiagnostic]:
    return [d for d in diags if d.is_error]


def format_lines(diags: Iterable[RuleDiagnostic]) -> str:
    return "".join(f"{d}\n" for d in diags)
