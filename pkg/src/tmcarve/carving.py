"""Event carvings of a static model: the finest baseline, merging, coverage and classification."""

from __future__ import annotations

import enum
from collections.abc import Iterable
from dataclasses import dataclass

from .dynamics import ChronologyError, build_chronology
from .metamodel import (
    ActionKind,
    Chronology,
    DynamicModel,
    Event,
    ModelError,
    StaticModel,
    canonical_form,
    natural_key,
    subregion,
)


class EventClass(enum.Enum):
    TRANSPORT = "Transport"
    EXPORT = "Export"
    TRANSFORMATION = "Transformation"
    STRUCTURAL = "Structural"
    MIXED = "Mixed"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class CoverageReport:
    uncovered: frozenset[str]
    overlaps: dict[str, tuple[str, ...]]
    event_count: int
    action_count: int

    @property
    def is_partition(self) -> bool:
        return not self.uncovered and not self.overlaps

    def to_dict(self) -> dict:
        return {
            "uncovered": sorted(self.uncovered, key=natural_key),
            "overlaps": [
                {"action": aid, "events": list(evs)}
                for aid, evs in sorted(self.overlaps.items(), key=lambda kv: natural_key(kv[0]))
            ],
            "event_count": self.event_count,
            "action_count": self.action_count,
        }


@dataclass(frozen=True)
class CarvingSummary:
    structural: int
    processual: int


def finest_carving(model: StaticModel) -> DynamicModel:
    """One singleton event per action, ``E1..En`` in action-id order, no chronology."""
    events = tuple(
        Event(f"E{n}", subregion(model, [aid]), aid)
        for n, aid in enumerate(sorted(model.actions, key=natural_key), start=1)
    )
    return DynamicModel(model, events, Chronology(tuple(ev.id for ev in events), ()))


def covered_actions(dyn: DynamicModel) -> frozenset[str]:
    out: set[str] = set()
    for ev in dyn.events:
        out |= ev.region.actions
    return frozenset(out)


def merge_events(dyn: DynamicModel, ids: Iterable[str], new_id: str) -> DynamicModel:
    """Replace the events ``ids`` with one event ``new_id`` whose region is their union.

    The merged event takes the position of the first merged event.  Chronology
    edges are re-attached to it; edges that become self-loops are dropped and
    duplicates collapse.
    """
    ids = set(ids)
    if not ids:
        raise ModelError("E-MERGE", "nothing to merge")
    known = set(dyn.event_ids)
    unknown = sorted(ids - known, key=natural_key)
    if unknown:
        raise ModelError("E-UNKNOWN-EVENT", f"unknown event(s) {', '.join(unknown)}")
    if new_id in known and new_id not in ids:
        raise ModelError("E-DUP", f"event id {new_id!r} already in use")

    merged = [ev for ev in dyn.events if ev.id in ids]
    union: set[str] = set()
    for ev in merged:
        union |= ev.region.actions
    try:
        region = subregion(dyn.base, union)
    except ModelError as exc:
        raise ModelError("E-REGION", f"merged region is disconnected: {exc.message}") from None
    if len(merged) == 1:
        description = merged[0].description
    else:
        description = "; ".join(ev.description for ev in merged if ev.description)
    new_event = Event(new_id, region, description)

    events: list[Event] = []
    for ev in dyn.events:
        if ev.id in ids:
            if ev is merged[0]:
                events.append(new_event)
        else:
            events.append(ev)

    def rename(ev_id: str) -> str:
        return new_id if ev_id in ids else ev_id

    edges = []
    for e in dyn.chronology.edges:
        src, dst = rename(e.source), rename(e.target)
        if src == dst:
            continue
        edges.append((src, dst, e.guard, e.repeat))
    result = DynamicModel(dyn.base, tuple(events))
    try:
        chron = build_chronology(result, edges)
    except ChronologyError as exc:
        raise ModelError(exc.code, f"merge breaks the chronology: {exc.message}") from None
    return DynamicModel(dyn.base, tuple(events), chron)


def coverage(model: StaticModel, dyn: DynamicModel) -> CoverageReport:
    if dyn.base is not model and canonical_form(dyn.base) != canonical_form(model):
        raise ModelError("E-BASE", "dynamic model is based on a different static model")
    members: dict[str, list[str]] = {}
    for ev in dyn.events:
        for aid in ev.region.actions:
            members.setdefault(aid, []).append(ev.id)
    uncovered = frozenset(model.actions) - members.keys()
    overlaps = {
        aid: tuple(sorted(evs, key=natural_key)) for aid, evs in members.items() if len(evs) > 1
    }
    return CoverageReport(uncovered, overlaps, len(dyn.events), len(model.actions))


def _has_transfer_peer(model: StaticModel, aid: str) -> bool:
    return any(
        aid in (f.source, f.target)
        and model.kind(f.source) is ActionKind.TRANSFER
        and model.kind(f.target) is ActionKind.TRANSFER
        and model.owner(f.source) != model.owner(f.target)
        for f in model.flows.values()
    )


def classify_event(event: Event, model: StaticModel) -> EventClass:
    """Classify a region; the first matching rule wins.

    1. Transport: the region holds a transfer -> transfer arc between thimacs.
    2. Export: it holds a transfer with no such arc anywhere in the model.
    3. Transformation: it holds a process or a triggered create, and no arc between thimacs.
    4. Structural: every action is a create.
    5. Mixed otherwise.
    """
    region = event.region.actions
    inner = model.induced_arcs(region)
    flows = model.flows
    crossing = [a for a in inner if a.id in flows and model.owner(a.source) != model.owner(a.target)]
    if any(
        model.kind(a.source) is ActionKind.TRANSFER and model.kind(a.target) is ActionKind.TRANSFER
        for a in crossing
    ):
        return EventClass.TRANSPORT
    kinds = {aid: model.kind(aid) for aid in region}
    if any(k is ActionKind.TRANSFER and not _has_transfer_peer(model, aid) for aid, k in kinds.items()):
        return EventClass.EXPORT
    triggered = {t.target for t in model.triggers.values()}
    transforms = any(
        k is ActionKind.PROCESS or (k is ActionKind.CREATE and aid in triggered)
        for aid, k in kinds.items()
    )
    if transforms and not crossing:
        return EventClass.TRANSFORMATION
    if all(k is ActionKind.CREATE for k in kinds.values()):
        return EventClass.STRUCTURAL
    return EventClass.MIXED


def classify_all(dyn: DynamicModel) -> dict[str, EventClass]:
    return {ev.id: classify_event(ev, dyn.base) for ev in dyn.events}


def carving_kind(dyn: DynamicModel) -> CarvingSummary:
    classes = classify_all(dyn).values()
    structural = sum(1 for c in classes if c is EventClass.STRUCTURAL)
    return CarvingSummary(structural, len(dyn.events) - structural)
