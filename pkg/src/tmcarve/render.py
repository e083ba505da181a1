"""Graphviz DOT emission for static models, event overlays and chronologies.

Output ordering follows model insertion order for thimacs and arcs, and
natural id order for events, so repeated renders are byte-identical.

Graphviz clusters cannot overlap.  An event becomes a nested cluster when all
of its actions sit directly in one thimac and none of them is already claimed
by an earlier event cluster; every other event is emitted as a labelled
non-cluster subgraph listing its nodes.
"""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass

from .metamodel import Chronology, DynamicModel, ModelError, StaticModel, natural_key

_PALETTE = ("lightyellow", "lightblue", "palegreen", "mistyrose", "lavender", "wheat")


@dataclass(frozen=True)
class RenderOptions:
    show_step_labels: bool = False
    highlight_events: Sequence[str] = ()
    rankdir: str = "LR"


def _q(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n") + '"'


def _attrs(pairs: Iterable[tuple[str, str]]) -> str:
    body = ", ".join(f"{k}={v}" for k, v in pairs)
    return f" [{body}]" if body else ""


def _render(
    model: StaticModel,
    opts: RenderOptions,
    dyn: DynamicModel | None = None,
) -> str:
    if not model.thimacs:
        return f"digraph {_q(model.name)} {{\n}}\n"

    events = sorted(dyn.events, key=lambda ev: natural_key(ev.id)) if dyn else []
    known = {ev.id for ev in events}
    for ev_id in opts.highlight_events:
        if ev_id not in known:
            raise ModelError("E-UNKNOWN-EVENT", f"cannot highlight unknown event {ev_id!r}")
    highlighted: set[str] = set()
    for ev in events:
        if ev.id in opts.highlight_events:
            highlighted |= ev.region.actions

    claimed: dict[str, str] = {}
    clustered: dict[str, list] = {}
    loose = []
    for ev in events:
        owners = {model.owner(aid) for aid in ev.region.actions}
        if len(owners) == 1 and not (ev.region.actions & claimed.keys()):
            owner = owners.pop()
            clustered.setdefault(owner, []).append(ev)
            for aid in ev.region.actions:
                claimed[aid] = ev.id
        else:
            loose.append(ev)

    lines = [f"digraph {_q(model.name)} {{", f"  rankdir={opts.rankdir};", "  compound=true;"]
    lines.append('  node [shape=box, fontname="Helvetica"];')

    def node_line(aid: str, indent: str) -> str:
        a = model.actions[aid]
        text = a.kind.value + (f"@{a.instance}" if a.instance else "")
        if opts.show_step_labels and a.label:
            text += f" ({a.label})"
        attrs = [("label", _q(text))]
        if aid in highlighted:
            attrs += [("style", "filled"), ("fillcolor", "lightyellow")]
        return f"{indent}{_q(aid)}{_attrs(attrs)};"

    def emit(parent: str | None, depth: int) -> None:
        for t in model.children(parent):
            pad = "  " * depth
            lines.append(f"{pad}subgraph {_q('cluster_' + t.id)} {{")
            lines.append(f"{pad}  label={_q(t.name)};")
            owned = sorted((a.id for a in model.actions_of(t.id)), key=natural_key)
            for ev in clustered.get(t.id, []):
                lines.append(f"{pad}  subgraph {_q('cluster_event_' + ev.id)} {{")
                lines.append(f"{pad}    label={_q(ev.id)};")
                lines.append(f"{pad}    style=dashed;")
                for aid in sorted(ev.region.actions, key=natural_key):
                    lines.append(node_line(aid, pad + "    "))
                lines.append(f"{pad}  }}")
            for aid in owned:
                if aid not in claimed:
                    lines.append(node_line(aid, pad + "  "))
            emit(t.id, depth + 1)
            lines.append(f"{pad}}}")

    emit(None, 1)

    for f in model.flows.values():
        label = f.thing + (f" ({f.label})" if opts.show_step_labels and f.label else "")
        lines.append(f"  {_q(f.source)} -> {_q(f.target)}{_attrs([('label', _q(label))])};")
    for t in model.triggers.values():
        attrs = [("style", "dashed")]
        if opts.show_step_labels and t.label:
            attrs.append(("label", _q(f"({t.label})")))
        lines.append(f"  {_q(t.source)} -> {_q(t.target)}{_attrs(attrs)};")

    for n, ev in enumerate(loose):
        color = _PALETTE[n % len(_PALETTE)]
        lines.append(f"  subgraph {_q('event_' + ev.id)} {{")
        lines.append(f"    label={_q(ev.id)};")
        lines.append(f"    color={color};")
        for aid in sorted(ev.region.actions, key=natural_key):
            lines.append(f"    {_q(aid)};")
        lines.append("  }")
    lines.append("}")
    return "\n".join(lines) + "\n"


def to_dot_static(model: StaticModel, opts: RenderOptions | None = None) -> str:
    return _render(model, opts or RenderOptions())


def to_dot_dynamic(dyn: DynamicModel, opts: RenderOptions | None = None) -> str:
    return _render(dyn.base, opts or RenderOptions(), dyn)


def to_dot_chronology(
    chron: Chronology,
    descriptions: dict[str, str] | None = None,
    rankdir: str = "TB",
) -> str:
    """Events as nodes; repeat edges dashed and labelled ``repeat``; guards as labels."""
    if not chron.events:
        return 'digraph "chronology" {\n}\n'
    descriptions = descriptions or {}
    lines = ['digraph "chronology" {', f"  rankdir={rankdir};", '  node [shape=ellipse, fontname="Helvetica"];']
    for ev in sorted(chron.events, key=natural_key):
        text = f"{ev}\n{descriptions[ev]}" if descriptions.get(ev) else ev
        lines.append(f"  {_q(ev)}{_attrs([('label', _q(text))])};")
    for e in chron.edges:
        attrs = []
        guard = "=".join(e.guard) if e.guard else ""
        if e.repeat:
            attrs += [("style", "dashed"), ("label", _q(f"repeat {guard}".strip()))]
        elif guard:
            attrs.append(("label", _q(guard)))
        lines.append(f"  {_q(e.source)} -> {_q(e.target)}{_attrs(attrs)};")
    lines.append("}")
    return "\n".join(lines) + "\n"
