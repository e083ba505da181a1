"""Chronologies, flow-derived precedence, and scenario-driven simulation.

Execution semantics
-------------------
Edges of a chronology are *selected* by a scenario: unguarded edges always,
guarded edges ``GROUP=LABEL`` only when the scenario chooses that label.
Events reachable from the start events over selected non-repeat edges are
*live*; everything else never fires.  A live event fires once all of its live
predecessors (over selected edges) have fired.

A repeat edge ``s -> t`` closes a loop whose body is every event on a
non-repeat path from ``t`` to ``s``.  The loop body runs ``repeat GROUP = N``
times, where ``GROUP`` is the repeat edge's guard group.  Successors outside
the body wait for the final iteration, so a loop behaves as one compound node.
Loop bodies may not overlap or interlock; :func:`chronology_problems`
rejects such chronologies.

Ties between enabled events are broken by :func:`natural_key` on the event id.
"""

from __future__ import annotations

import graphlib
import heapq
import json
from collections import defaultdict
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field, replace

from .metamodel import (
    ChronEdge,
    Chronology,
    DynamicModel,
    FlowArc,
    ModelError,
    Trace,
    natural_key,
)


class ChronologyError(ModelError):
    def __init__(self, code: str, message: str, edge: ChronEdge | None = None) -> None:
        super().__init__(code, message)
        self.edge = edge


class SimulationError(ModelError):
    pass


@dataclass(frozen=True)
class Scenario:
    name: str = "default"
    choices: dict[str, str] = field(default_factory=dict)
    repeats: dict[str, int] = field(default_factory=dict)
    starts: tuple[str, ...] = ()


@dataclass(frozen=True, order=True)
class PrecedencePair:
    before: str
    after: str
    arc: str
    thing: str | None = None


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    edge: ChronEdge | None = None
    event: str | None = None

    def to_dict(self) -> dict:
        edge = None
        if self.edge is not None:
            edge = {
                "from": self.edge.source,
                "to": self.edge.target,
                "guard": "=".join(self.edge.guard) if self.edge.guard else None,
                "repeat": self.edge.repeat,
            }
        return {"kind": self.kind, "message": self.message, "edge": edge, "event": self.event}


@dataclass(frozen=True)
class Problem:
    code: str
    message: str
    edge: ChronEdge | None = None


# -- chronology structure ----------------------------------------------------


def as_edge(spec: ChronEdge | Sequence) -> ChronEdge:
    """Coerce ``(from, to[, guard[, repeat]])`` into a :class:`ChronEdge`.

    ``guard`` may be ``None``, a ``(group, label)`` pair or ``"group=label"``.
    """
    if isinstance(spec, ChronEdge):
        return spec
    source, target, *rest = spec
    guard = rest[0] if rest else None
    repeat = bool(rest[1]) if len(rest) > 1 else False
    if isinstance(guard, str):
        group, sep, label = guard.partition("=")
        if not sep or not group or not label:
            raise ChronologyError("E-SYNTAX", f"malformed guard {guard!r}")
        guard = (group, label)
    elif guard is not None:
        guard = (str(guard[0]), str(guard[1]))
    return ChronEdge(source, target, guard, repeat)


def _forward(edges: Iterable[ChronEdge]) -> dict[str, list[str]]:
    succ: dict[str, list[str]] = defaultdict(list)
    for e in edges:
        if not e.repeat:
            succ[e.source].append(e.target)
    return succ


def _reach(start: str, succ: dict[str, list[str]]) -> set[str]:
    seen = {start}
    stack = [start]
    while stack:
        for nxt in succ.get(stack.pop(), ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return seen


def loop_body(edges: Iterable[ChronEdge], repeat_edge: ChronEdge) -> frozenset[str]:
    """Events on some non-repeat path from the loop's target to its source."""
    edges = list(edges)
    succ = _forward(edges)
    pred: dict[str, list[str]] = defaultdict(list)
    for src, targets in succ.items():
        for dst in targets:
            pred[dst].append(src)
    return frozenset(_reach(repeat_edge.target, succ) & _reach(repeat_edge.source, pred))


def chronology_problems(event_ids: Iterable[str], edges: Iterable[ChronEdge]) -> list[Problem]:
    declared = set(event_ids)
    edges = list(edges)
    problems: list[Problem] = []
    for e in edges:
        for end in (e.source, e.target):
            if end not in declared:
                problems.append(Problem("E-UNKNOWN-EVENT", f"unknown event {end!r}", e))
    if problems:
        return problems

    sorter = graphlib.TopologicalSorter({ev: () for ev in declared})
    for e in edges:
        if not e.repeat:
            sorter.add(e.target, e.source)
    try:
        sorter.prepare()
    except graphlib.CycleError as exc:
        cycle = exc.args[1]
        first = next(
            e for e in edges
            if not e.repeat and (e.source, e.target) in set(zip(cycle, cycle[1:]))
        )
        return [Problem("E-CYCLE", "non-repeat cycle " + " -> ".join(cycle), first)]

    bodies: list[tuple[ChronEdge, frozenset[str]]] = []
    for e in edges:
        if not e.repeat:
            continue
        if e.guard is None:
            problems.append(Problem("E-LOOP", f"repeat edge {e.source} -> {e.target} needs a guard group", e))
            continue
        body = loop_body(edges, e)
        if e.source not in body:
            problems.append(
                Problem("E-LOOP", f"repeat edge {e.source} -> {e.target} does not close a loop", e)
            )
            continue
        for other, other_body in bodies:
            if (other.source, other.target) == (e.source, e.target):
                problems.append(
                    Problem("E-LOOP", f"loop {e.source}->{e.target} is closed by more than one repeat edge", e)
                )
                break
            if body & other_body:
                problems.append(
                    Problem(
                        "E-LOOP",
                        f"loops {other.source}->{other.target} and {e.source}->{e.target} overlap",
                        e,
                    )
                )
                break
        else:
            bodies.append((e, body))
    if problems:
        return problems

    # loops must behave as compound nodes: contracting each body keeps the DAG acyclic
    node_of = {ev: ev for ev in declared}
    for e, body in bodies:
        for ev in body:
            node_of[ev] = f"<loop {e.source}->{e.target}>"
    contracted = graphlib.TopologicalSorter({n: () for n in node_of.values()})
    for e in edges:
        a, b = node_of[e.source], node_of[e.target]
        if not e.repeat and a != b:
            contracted.add(b, a)
    try:
        contracted.prepare()
    except graphlib.CycleError as exc:
        problems.append(Problem("E-LOOP", "loops interlock through " + " -> ".join(exc.args[1])))
    return problems


def build_chronology(dyn: DynamicModel, edges: Iterable[ChronEdge | Sequence]) -> Chronology:
    """Validate ``edges`` against the events of ``dyn`` and return the chronology."""
    unique: list[ChronEdge] = []
    for spec in edges:
        e = as_edge(spec)
        if e not in unique:
            unique.append(e)
    problems = chronology_problems(dyn.event_ids, unique)
    if problems:
        p = problems[0]
        raise ChronologyError(p.code, p.message, p.edge)
    return Chronology(tuple(dyn.event_ids), tuple(unique))


def with_chronology(dyn: DynamicModel, edges: Iterable[ChronEdge | Sequence]) -> DynamicModel:
    return replace(dyn, chronology=build_chronology(dyn, edges))


# -- flow-derived precedence -------------------------------------------------


def dependency_oracle(dyn: DynamicModel) -> frozenset[PrecedencePair]:
    """Pairs ``(i, j)`` where some arc leaves region ``i`` and enters region ``j``.

    An arc leaves a region when its source is inside and its target outside,
    and enters a region when its target is inside and its source outside.
    The witness is the first such arc in model order.
    """
    pairs: dict[tuple[str, str], PrecedencePair] = {}
    for arc in dyn.base.arcs():
        leaving = [ev.id for ev in dyn.events if arc.source in ev.region and arc.target not in ev.region]
        entering = [ev.id for ev in dyn.events if arc.target in ev.region and arc.source not in ev.region]
        thing = arc.thing if isinstance(arc, FlowArc) else None
        for i in leaving:
            for j in entering:
                if i != j and (i, j) not in pairs:
                    pairs[(i, j)] = PrecedencePair(i, j, arc.id, thing)
    return frozenset(pairs.values())


def chronology_from_dependencies(
    dyn: DynamicModel, extra: Iterable[ChronEdge | Sequence] = ()
) -> Chronology:
    pairs = sorted(dependency_oracle(dyn), key=lambda p: (natural_key(p.before), natural_key(p.after)))
    return build_chronology(dyn, [(p.before, p.after) for p in pairs] + list(extra))


# -- simulation --------------------------------------------------------------


def _selected(edge: ChronEdge, scenario: Scenario) -> bool:
    if edge.repeat or edge.guard is None:
        return True
    return scenario.choices.get(edge.guard[0]) == edge.guard[1]


def _start_events(chron: Chronology, scenario: Scenario) -> list[str]:
    if scenario.starts:
        unknown = [s for s in scenario.starts if s not in chron.events]
        if unknown:
            raise SimulationError("E-UNKNOWN-EVENT", f"scenario starts at unknown event(s) {unknown}")
        return list(scenario.starts)
    has_pred = {e.target for e in chron.edges if not e.repeat}
    return [ev for ev in chron.events if ev not in has_pred]


def simulate(dyn: DynamicModel, scenario: Scenario) -> Trace:
    """Fire the events of ``dyn`` under ``scenario`` and return the trace."""
    chron = dyn.chronology
    problems = chronology_problems(chron.events, chron.edges)
    if problems:
        p = problems[0]
        raise ChronologyError(p.code, p.message, p.edge)

    order = _stable_topological(chron)
    live = set(_start_events(chron, scenario))
    for ev in order:
        if ev not in live:
            if any(_selected(e, scenario) and e.source in live for e in chron.predecessors(ev) if not e.repeat):
                live.add(ev)
            else:
                continue
        for e in chron.successors(ev):
            if e.guard and not e.repeat and e.guard[0] not in scenario.choices:
                raise SimulationError(
                    "E-UNRESOLVED-GUARD",
                    f"scenario {scenario.name!r} does not choose guard group {e.guard[0]!r} "
                    f"(reached at {ev})",
                )

    loop_of: dict[str, int] = {}
    bounds: list[int] = []
    members: list[set[str]] = []
    for e in chron.edges:
        if not e.repeat or e.source not in live:
            continue
        body = loop_body(chron.edges, e) & live
        group = e.guard[0]
        bound = scenario.repeats.get(group)
        if bound is None:
            raise SimulationError(
                "E-REPEAT-BOUND", f"scenario {scenario.name!r} gives no repeat bound for {group!r}"
            )
        if bound < 1:
            raise SimulationError("E-REPEAT-BOUND", f"repeat bound for {group!r} must be positive")
        for ev in body:
            loop_of[ev] = len(bounds)
        bounds.append(bound)
        members.append(set(body))

    preds: dict[str, list[str]] = {
        ev: [
            e.source
            for e in chron.predecessors(ev)
            if not e.repeat and e.source in live and _selected(e, scenario)
        ]
        for ev in live
    }
    iteration = [1] * len(bounds)
    complete = [False] * len(bounds)
    done: set[str] = set()
    occurrences: list[tuple[str, int]] = []

    def ready(ev: str) -> bool:
        if ev in done:
            return False
        own = loop_of.get(ev)
        for u in preds[ev]:
            loop = loop_of.get(u)
            if loop is not None and loop != own:
                if not complete[loop]:
                    return False
            elif u not in done:
                return False
        return True

    while True:
        candidates = [ev for ev in live if ready(ev)]
        if not candidates:
            break
        ev = min(candidates, key=natural_key)
        done.add(ev)
        occurrences.append((ev, len(occurrences) + 1))
        loop = loop_of.get(ev)
        if loop is not None and members[loop] <= done:
            if iteration[loop] < bounds[loop]:
                iteration[loop] += 1
                done -= members[loop]
            else:
                complete[loop] = True
    return Trace(tuple(occurrences), scenario.name)


def _stable_topological(chron: Chronology) -> list[str]:
    indegree = {ev: 0 for ev in chron.events}
    for e in chron.edges:
        if not e.repeat:
            indegree[e.target] += 1
    heap = [(natural_key(ev), ev) for ev, d in indegree.items() if d == 0]
    heapq.heapify(heap)
    out = []
    while heap:
        _, ev = heapq.heappop(heap)
        out.append(ev)
        for e in chron.successors(ev):
            if not e.repeat:
                indegree[e.target] -= 1
                if indegree[e.target] == 0:
                    heapq.heappush(heap, (natural_key(e.target), e.target))
    return out


# -- trace checking ----------------------------------------------------------


def check_trace(trace: Trace, chron: Chronology, scenario: Scenario) -> list[Violation]:
    """List every way ``trace`` departs from ``chron`` under ``scenario``.

    Checked: strictly increasing ordinals, known events, the expected number
    of occurrences per event (0 off the selected branches, the repeat bound
    inside an active loop, 1 elsewhere), and the ordering of every selected
    edge between live events.
    """
    violations: list[Violation] = []
    known = set(chron.events)
    last = None
    for ev, ordinal in trace.occurrences:
        if last is not None and ordinal <= last:
            violations.append(Violation("ordinal", f"ordinal {ordinal} after {last}", event=ev))
        last = ordinal
        if ev not in known:
            violations.append(Violation("unknown-event", f"{ev} is not in the chronology", event=ev))

    chosen = [e for e in chron.edges if not e.repeat and _selected(e, scenario)]
    if scenario.starts:
        starts = [s for s in scenario.starts if s in known]
    else:
        starts = [ev for ev in chron.events if not any(e.target == ev and not e.repeat for e in chron.edges)]
    live = set()
    for s in starts:
        live |= _reach(s, _forward(chosen))

    expected = {ev: (1 if ev in live else 0) for ev in chron.events}
    loop_members: dict[str, frozenset[str]] = {}
    for e in chron.edges:
        if e.repeat and e.source in live:
            bound = scenario.repeats.get(e.guard[0]) if e.guard else None
            if bound is None:
                violations.append(
                    Violation("repeat-bound", f"no repeat bound for loop {e.source} -> {e.target}", edge=e)
                )
                continue
            body = loop_body(chron.edges, e) & live
            for ev in body:
                expected[ev] = bound
                loop_members[ev] = body

    positions: dict[str, list[int]] = defaultdict(list)
    for index, (ev, _) in enumerate(trace.occurrences):
        positions[ev].append(index)
    for ev in chron.events:
        got = len(positions.get(ev, ()))
        if got != expected[ev]:
            violations.append(
                Violation("count", f"{ev} occurs {got} time(s), expected {expected[ev]}", event=ev)
            )

    for e in chosen:
        if e.source not in live or e.target not in live:
            continue
        before = positions.get(e.source, [])
        same_loop = e.source in loop_members and loop_members[e.source] is loop_members.get(e.target)
        for j, p in enumerate(positions.get(e.target, []), start=1):
            seen = sum(1 for q in before if q < p)
            if same_loop:
                ok = seen >= j
            elif e.source in loop_members:
                ok = seen == len(before) and seen > 0
            else:
                ok = seen >= 1
            if not ok:
                violations.append(
                    Violation(
                        "order",
                        f"occurrence {j} of {e.target} is not preceded by {e.source} as edge "
                        f"{e.source} -> {e.target} requires",
                        edge=e,
                    )
                )
                break
    return violations


# -- serialisation -----------------------------------------------------------


def trace_to_json(trace: Trace) -> dict:
    return {
        "scenario": trace.scenario,
        "occurrences": [{"event": ev, "ordinal": n} for ev, n in trace.occurrences],
    }


def trace_to_lines(trace: Trace) -> str:
    return "".join(f"{n} {ev}\n" for ev, n in trace.occurrences)


def trace_from_json(data: dict | str) -> Trace:
    if isinstance(data, str):
        data = json.loads(data)
    occ = tuple((o["event"], int(o["ordinal"])) for o in data["occurrences"])
    return Trace(occ, data.get("scenario", ""))
