"""In-memory representation of static and dynamic thinging-machine models.

A :class:`StaticModel` is built through ``add_thimac``/``add_flow``/``add_trigger``
and then frozen. Identifiers are derived from names so that two models built
from the same declarations share ids:

* thimac id: slash-joined path of names, e.g. ``"Has/Patient"``
* action id: ``"<thimac id>.<kind>"`` with an optional ``"@<instance>"`` suffix
* flow arcs ``f1, f2, ...``; trigger arcs ``t1, t2, ...`` in insertion order
"""

from __future__ import annotations

import enum
import re
from collections import deque
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field


class ActionKind(enum.Enum):
    CREATE = "create"
    PROCESS = "process"
    RELEASE = "release"
    TRANSFER = "transfer"
    RECEIVE = "receive"

    def __str__(self) -> str:
        return self.value


#: Flow adjacency witnessed by the five-action machine; Receive->Release is not in it.
DEFAULT_ADJACENCY: frozenset[tuple[ActionKind, ActionKind]] = frozenset(
    {
        (ActionKind.CREATE, ActionKind.PROCESS),
        (ActionKind.CREATE, ActionKind.RELEASE),
        (ActionKind.PROCESS, ActionKind.RELEASE),
        (ActionKind.RELEASE, ActionKind.TRANSFER),
        (ActionKind.TRANSFER, ActionKind.TRANSFER),
        (ActionKind.TRANSFER, ActionKind.RECEIVE),
        (ActionKind.RECEIVE, ActionKind.PROCESS),
    }
)

NAME_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_-]*\Z")
INSTANCE_RE = re.compile(r"[A-Za-z0-9_-]+\Z")


class ModelError(ValueError):
    """A construction or query request that violates a model invariant."""

    def __init__(self, code: str, message: str) -> None:
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message


class FrozenModelError(ModelError):
    def __init__(self, name: str) -> None:
        super().__init__("E-FROZEN", f"model {name!r} is frozen")


@dataclass(frozen=True)
class Thimac:
    id: str
    name: str
    parent: str | None = None


@dataclass(frozen=True)
class ActionNode:
    id: str
    owner: str
    kind: ActionKind
    instance: str | None = None
    label: str | None = None


@dataclass(frozen=True)
class FlowArc:
    id: str
    source: str
    target: str
    thing: str
    label: str | None = None


@dataclass(frozen=True)
class TriggerArc:
    id: str
    source: str
    target: str
    label: str | None = None
    note: str | None = None


Arc = FlowArc | TriggerArc


def action_id(thimac: str, kind: ActionKind, instance: str | None = None) -> str:
    base = f"{thimac}.{kind.value}"
    return f"{base}@{instance}" if instance else base


def parse_action_ref(ref: str) -> tuple[str, ActionKind, str | None]:
    """Split ``"Thimac.kind[@instance]"`` into its parts."""
    head, _, instance = ref.partition("@")
    thimac, dot, kind = head.rpartition(".")
    if not dot or not thimac:
        raise ModelError("E-SYNTAX", f"malformed action reference {ref!r}")
    try:
        action_kind = ActionKind(kind)
    except ValueError:
        raise ModelError("E-SYNTAX", f"unknown action kind {kind!r} in {ref!r}") from None
    if instance and not INSTANCE_RE.match(instance):
        raise ModelError("E-SYNTAX", f"malformed instance name in {ref!r}")
    return thimac, action_kind, instance or None


Endpoint = str | tuple[str, ActionKind] | tuple[str, ActionKind, str | None]


class StaticModel:
    """Thimacs, actions, flow arcs and trigger arcs.

    Mutable until :meth:`freeze` is called; afterwards every mutator raises
    :class:`FrozenModelError` and the model may be shared freely.
    """

    def __init__(
        self,
        name: str = "model",
        adjacency: Iterable[tuple[ActionKind, ActionKind]] | None = None,
    ) -> None:
        self.name = name
        self.adjacency = frozenset(adjacency) if adjacency is not None else DEFAULT_ADJACENCY
        self._thimacs: dict[str, Thimac] = {}
        self._actions: dict[str, ActionNode] = {}
        self._flows: dict[str, FlowArc] = {}
        self._triggers: dict[str, TriggerArc] = {}
        self._frozen = False

    def __repr__(self) -> str:
        return (
            f"StaticModel({self.name!r}, thimacs={len(self._thimacs)}, "
            f"actions={len(self._actions)}, flows={len(self._flows)}, "
            f"triggers={len(self._triggers)})"
        )

    # -- queries -----------------------------------------------------------

    @property
    def frozen(self) -> bool:
        return self._frozen

    @property
    def thimacs(self) -> dict[str, Thimac]:
        return dict(self._thimacs)

    @property
    def actions(self) -> dict[str, ActionNode]:
        return dict(self._actions)

    @property
    def flows(self) -> dict[str, FlowArc]:
        return dict(self._flows)

    @property
    def triggers(self) -> dict[str, TriggerArc]:
        return dict(self._triggers)

    def arcs(self) -> list[Arc]:
        return [*self._flows.values(), *self._triggers.values()]

    def thimac(self, ref: str) -> Thimac:
        """Look a thimac up by id (path) or by a name that is unique model-wide."""
        if ref in self._thimacs:
            return self._thimacs[ref]
        matches = [t for t in self._thimacs.values() if t.name == ref]
        if len(matches) == 1:
            return matches[0]
        if matches:
            raise ModelError("E-AMBIGUOUS", f"thimac name {ref!r} is ambiguous; use its path")
        raise ModelError("E-UNDECLARED", f"unknown thimac {ref!r}")

    def action(self, ref: Endpoint) -> ActionNode:
        thimac, kind, instance = self._split_endpoint(ref)
        aid = action_id(self.thimac(thimac).id, kind, instance)
        try:
            return self._actions[aid]
        except KeyError:
            raise ModelError("E-UNKNOWN-ACTION", f"no action {aid!r}") from None

    def children(self, thimac_id: str | None) -> list[Thimac]:
        return [t for t in self._thimacs.values() if t.parent == thimac_id]

    def actions_of(self, thimac_id: str) -> list[ActionNode]:
        return [a for a in self._actions.values() if a.owner == thimac_id]

    def owner(self, aid: str) -> str:
        return self._actions[aid].owner

    def kind(self, aid: str) -> ActionKind:
        return self._actions[aid].kind

    def neighbours(self) -> dict[str, set[str]]:
        """Undirected adjacency over all flow and trigger arcs."""
        adj: dict[str, set[str]] = {aid: set() for aid in self._actions}
        for arc in self.arcs():
            adj[arc.source].add(arc.target)
            adj[arc.target].add(arc.source)
        return adj

    def induced_arcs(self, action_ids: Iterable[str]) -> list[Arc]:
        members = set(action_ids)
        return [a for a in self.arcs() if a.source in members and a.target in members]

    def is_connected(self, action_ids: Iterable[str]) -> bool:
        members = set(action_ids)
        if not members:
            return False
        adj = self.neighbours()
        start = next(iter(members))
        seen = {start}
        queue = deque([start])
        while queue:
            for nxt in adj[queue.popleft()]:
                if nxt in members and nxt not in seen:
                    seen.add(nxt)
                    queue.append(nxt)
        return seen == members

    def step_labels(self) -> set[str]:
        labels = {a.label for a in self._actions.values() if a.label}
        labels |= {a.label for a in self.arcs() if a.label}
        return labels

    # -- mutation ----------------------------------------------------------

    def _check_mutable(self) -> None:
        if self._frozen:
            raise FrozenModelError(self.name)

    def freeze(self) -> StaticModel:
        self._check_dangling_endpoints()
        self._frozen = True
        return self

    def add_thimac(self, name: str, parent: str | None = None) -> str:
        self._check_mutable()
        if not NAME_RE.match(name):
            raise ModelError("E-SYNTAX", f"invalid thimac name {name!r}")
        parent_id = None
        if parent is not None:
            parent_id = self.thimac(parent).id
        if any(t.name == name for t in self.children(parent_id)):
            where = f"inside {parent_id!r}" if parent_id else "at top level"
            raise ModelError("E-DUP", f"thimac {name!r} already declared {where}")
        tid = f"{parent_id}/{name}" if parent_id else name
        self._thimacs[tid] = Thimac(tid, name, parent_id)
        self._check_forest()
        return tid

    def add_action(
        self,
        thimac: str,
        kind: ActionKind,
        instance: str | None = None,
        label: str | None = None,
    ) -> str:
        """Return the id of the (thimac, kind, instance) action, creating it if absent.

        A label may be attached once; a different label on an existing
        action is an error.
        """
        self._check_mutable()
        owner = self.thimac(thimac).id
        if instance is not None and not INSTANCE_RE.match(instance):
            raise ModelError("E-SYNTAX", f"invalid instance name {instance!r}")
        aid = action_id(owner, kind, instance)
        node = self._actions.get(aid)
        if node is None:
            self._actions[aid] = ActionNode(aid, owner, kind, instance, label)
        elif label is not None and node.label != label:
            if node.label is not None:
                raise ModelError(
                    "E-LABEL", f"action {aid!r} already labelled {node.label!r}, not {label!r}"
                )
            self._actions[aid] = ActionNode(aid, owner, kind, instance, label)
        return aid

    def add_flow(
        self,
        thing: str,
        endpoints: Sequence[Endpoint],
        labels: Sequence[str | None] | None = None,
    ) -> list[str]:
        """Chain ``endpoints`` with flow arcs carrying ``thing``.

        ``labels`` optionally gives one step label per arc. Missing actions are
        created on demand. The request is checked as a whole before anything
        is added. An arc identical to an existing one (same endpoints and
        thing) is reused rather than duplicated.
        """
        self._check_mutable()
        if len(endpoints) < 2:
            raise ModelError("E-FLOW", "a flow needs at least two endpoints")
        if not thing:
            raise ModelError("E-FLOW", "a flow needs a thing label")
        labels = list(labels) if labels is not None else [None] * (len(endpoints) - 1)
        if len(labels) != len(endpoints) - 1:
            raise ModelError("E-FLOW", "need exactly one label slot per arc")

        resolved = [self._resolve_endpoint(ep) for ep in endpoints]
        for (t1, k1, i1), (t2, k2, i2) in zip(resolved, resolved[1:]):
            src, dst = action_id(t1, k1, i1), action_id(t2, k2, i2)
            if (k1, k2) not in self.adjacency:
                raise ModelError("E-ADJ", f"illegal flow {k1.value} -> {k2.value} ({src} -> {dst})")
            if (k1, k2) == (ActionKind.TRANSFER, ActionKind.TRANSFER):
                if t1 == t2:
                    raise ModelError(
                        "E-SAME-THIMAC", f"transfer -> transfer inside one thimac ({src} -> {dst})"
                    )
            elif t1 != t2:
                raise ModelError(
                    "E-SAME-THIMAC",
                    f"{k1.value} -> {k2.value} must stay inside one thimac ({src} -> {dst})",
                )
            if self._trigger_between(src, dst):
                raise ModelError("E-DUP-ARC", f"{src} -> {dst} is already a trigger")

        ids = [action_id(t, k, i) for t, k, i in resolved]
        for (t, k, i) in resolved:
            self.add_action(t, k, i)
        arc_ids = []
        for src, dst, label in zip(ids, ids[1:], labels):
            arc_ids.append(self._add_flow_arc(src, dst, thing, label))
        return arc_ids

    def _add_flow_arc(self, src: str, dst: str, thing: str, label: str | None) -> str:
        for arc in self._flows.values():
            if (arc.source, arc.target, arc.thing) == (src, dst, thing):
                if label is not None and arc.label not in (None, label):
                    raise ModelError(
                        "E-LABEL", f"arc {src} -> {dst} ({thing}) already labelled {arc.label!r}"
                    )
                if label is not None:
                    self._flows[arc.id] = FlowArc(arc.id, src, dst, thing, label)
                return arc.id
        fid = f"f{len(self._flows) + 1}"
        self._flows[fid] = FlowArc(fid, src, dst, thing, label)
        return fid

    def add_trigger(
        self,
        source: Endpoint,
        target: Endpoint,
        label: str | None = None,
        note: str | None = None,
    ) -> str:
        """Add a dashed trigger arc; both endpoints must already exist."""
        self._check_mutable()
        src = self.action(source).id
        dst = self.action(target).id
        if any((f.source, f.target) == (src, dst) for f in self._flows.values()):
            raise ModelError("E-DUP-ARC", f"{src} -> {dst} is already a flow")
        tid = f"t{len(self._triggers) + 1}"
        self._triggers[tid] = TriggerArc(tid, src, dst, label, note)
        return tid

    # -- helpers -----------------------------------------------------------

    @staticmethod
    def _split_endpoint(ref: Endpoint) -> tuple[str, ActionKind, str | None]:
        if isinstance(ref, str):
            return parse_action_ref(ref)
        if len(ref) == 2:
            return ref[0], ActionKind(ref[1]), None
        return ref[0], ActionKind(ref[1]), ref[2]

    def _resolve_endpoint(self, ref: Endpoint) -> tuple[str, ActionKind, str | None]:
        thimac, kind, instance = self._split_endpoint(ref)
        return self.thimac(thimac).id, kind, instance

    def _trigger_between(self, src: str, dst: str) -> bool:
        return any((t.source, t.target) == (src, dst) for t in self._triggers.values())

    def _check_forest(self) -> None:
        for start in self._thimacs:
            seen = set()
            node: str | None = start
            while node is not None:
                if node in seen:
                    raise ModelError("E-CYCLE", f"thimac nesting cycle through {node!r}")
                seen.add(node)
                node = self._thimacs[node].parent

    def _check_dangling_endpoints(self) -> None:
        for arc in self.arcs():
            for end in (arc.source, arc.target):
                if end not in self._actions:
                    raise ModelError("E-UNKNOWN-ACTION", f"arc {arc.id} references {end!r}")


@dataclass(frozen=True)
class Region:
    """A connected sub-diagram: an action set plus the arcs it induces."""

    actions: frozenset[str]
    arcs: tuple[str, ...] = ()

    def __contains__(self, aid: object) -> bool:
        return aid in self.actions


def subregion(model: StaticModel, action_ids: Iterable[str]) -> Region:
    members = frozenset(action_ids)
    if not members:
        raise ModelError("E-REGION", "a region needs at least one action")
    unknown = sorted(members - model.actions.keys())
    if unknown:
        raise ModelError("E-REGION", f"unknown action(s) {', '.join(unknown)}")
    if not model.is_connected(members):
        raise ModelError("E-REGION", "region is not connected: " + ", ".join(sorted(members)))
    return Region(members, tuple(a.id for a in model.induced_arcs(members)))


@dataclass(frozen=True)
class Event:
    id: str
    region: Region
    description: str = ""
    time: int | None = None


@dataclass(frozen=True)
class ChronEdge:
    source: str
    target: str
    guard: tuple[str, str] | None = None
    repeat: bool = False

    @property
    def group(self) -> str | None:
        return self.guard[0] if self.guard else None


@dataclass(frozen=True)
class Chronology:
    events: tuple[str, ...] = ()
    edges: tuple[ChronEdge, ...] = ()

    def successors(self, event_id: str) -> list[ChronEdge]:
        return [e for e in self.edges if e.source == event_id]

    def predecessors(self, event_id: str) -> list[ChronEdge]:
        return [e for e in self.edges if e.target == event_id]


@dataclass(frozen=True)
class DynamicModel:
    base: StaticModel
    events: tuple[Event, ...] = ()
    chronology: Chronology = field(default_factory=Chronology)

    def event(self, event_id: str) -> Event:
        for ev in self.events:
            if ev.id == event_id:
                return ev
        raise ModelError("E-UNKNOWN-EVENT", f"unknown event {event_id!r}")

    @property
    def event_ids(self) -> list[str]:
        return [ev.id for ev in self.events]


@dataclass(frozen=True)
class Trace:
    occurrences: tuple[tuple[str, int], ...]
    scenario: str = ""

    @property
    def events(self) -> list[str]:
        return [ev for ev, _ in self.occurrences]

    def count(self, event_id: str) -> int:
        return sum(1 for ev, _ in self.occurrences if ev == event_id)


_NUM_SPLIT = re.compile(r"(\d+)")


def natural_key(text: str) -> tuple:
    """Sort key that orders ``E2`` before ``E10``."""
    return tuple(int(part) if part.isdigit() else part for part in _NUM_SPLIT.split(text))


def canonical_form(model: StaticModel) -> tuple:
    """Name-based canonical form; equal forms mean isomorphic models.

    Arc ids are dropped: two models are isomorphic when their thimac paths,
    action ids, kinds and labels, and arc multisets agree.
    """
    thimacs = sorted((t.id, t.parent or "") for t in model.thimacs.values())
    actions = sorted(
        (a.id, a.owner, a.kind.value, a.instance or "", a.label or "")
        for a in model.actions.values()
    )
    flows = sorted(
        (f.source, f.target, f.thing, f.label or "") for f in model.flows.values()
    )
    triggers = sorted(
        (t.source, t.target, t.label or "", t.note or "") for t in model.triggers.values()
    )
    return (tuple(thimacs), tuple(actions), tuple(flows), tuple(triggers))
