"""Line-oriented text format for static (``.tm``), dynamic (``.tmd``) and scenario (``.scn``) files.

Static documents::

    # comment
    thimac Heart { transfer@in receive process }
    thimac Valve in Heart
    flow oxygen: Lungs.release -> Lungs.transfer@out -[5]-> Heart.transfer@in
    trigger Lungs.process -[3]-> Lungs.create "oxygen appears"

An endpoint is ``THIMAC.ACTION[@INSTANCE]`` where ``THIMAC`` is a name that is
unique in the model or a slash path (``Has/Patient``).  Inside a thimac's
braces, and on flow endpoints, an action may carry a step label in
parentheses: ``process(11)``.  ``-[N]->`` labels an arc.  Flow things may be
bare text up to the colon or a double-quoted string.

Dynamic documents::

    event E1 "Air enters the lungs" { Lungs.transfer@in, Lungs.receive }
    chron E1 -> E2
    chron E3 -> E2 guard scan=next repeat

Scenario documents::

    scenario duplicate-ssn
    start E1
    choose found = yes
    repeat scan = 2
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .dynamics import Scenario, as_edge, chronology_problems
from .metamodel import (
    ActionKind,
    ChronEdge,
    Chronology,
    DynamicModel,
    Event,
    ModelError,
    StaticModel,
    natural_key,
    parse_action_ref,
    subregion,
)


@dataclass(frozen=True)
class SourceDiagnostic:
    severity: str
    code: str
    message: str
    line: int
    column: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.column}: {self.severity} {self.code}: {self.message}"


class ParseError(Exception):
    """Raised when a document has error diagnostics; carries all of them."""

    def __init__(self, diagnostics: list[SourceDiagnostic]) -> None:
        self.diagnostics = diagnostics
        super().__init__("\n".join(str(d) for d in diagnostics))


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#.*)
  | (?P<string>"(?:[^"\\]|\\.)*")
  | (?P<larrow>-\[(?P<arrowlabel>[^\]\s]+)\]->)
  | (?P<arrow>->)
  | (?P<punct>[{}(),:=])
  | (?P<word>[A-Za-z0-9_@./]+(?:-(?![>\[])[A-Za-z0-9_@./]*)*)
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    col: int


class _Syntax(Exception):
    def __init__(self, message: str, col: int, code: str = "E-SYNTAX") -> None:
        super().__init__(message)
        self.col = col
        self.code = code


def _tokenize(line: str) -> list[_Tok]:
    toks: list[_Tok] = []
    pos = 0
    while pos < len(line):
        m = _TOKEN.match(line, pos)
        if m is None:
            raise _Syntax(f"unexpected character {line[pos]!r}", pos + 1)
        kind = m.lastgroup
        if kind == "arrowlabel":
            kind = "larrow"
        if kind == "larrow":
            toks.append(_Tok("arrow", m.group("arrowlabel"), pos + 1))
        elif kind == "arrow":
            toks.append(_Tok("arrow", "", pos + 1))
        elif kind == "string":
            toks.append(_Tok("string", json.loads(m.group()), pos + 1))
        elif kind in ("punct", "word"):
            toks.append(_Tok(kind if kind == "word" else m.group(), m.group(), pos + 1))
        pos = m.end()
    return toks


class _Cursor:
    def __init__(self, toks: list[_Tok], line_len: int) -> None:
        self.toks = toks
        self.i = 0
        self.end_col = line_len + 1

    def peek(self, kind: str | None = None) -> _Tok | None:
        if self.i < len(self.toks) and (kind is None or self.toks[self.i].kind == kind):
            return self.toks[self.i]
        return None

    def take(self, kind: str, what: str) -> _Tok:
        tok = self.peek(kind)
        if tok is None:
            col = self.toks[self.i].col if self.i < len(self.toks) else self.end_col
            raise _Syntax(f"expected {what}", col)
        self.i += 1
        return tok

    def keyword(self, word: str) -> bool:
        tok = self.peek("word")
        if tok is not None and tok.text == word:
            self.i += 1
            return True
        return False

    def done(self) -> None:
        if self.i < len(self.toks):
            raise _Syntax(f"unexpected {self.toks[self.i].text!r}", self.toks[self.i].col)

    def label(self) -> str | None:
        if self.peek("("):
            self.i += 1
            tok = self.take("word", "step label")
            self.take(")", "')'")
            return tok.text
        return None


# -- static ------------------------------------------------------------------


def parse_static(
    text: str,
    name: str = "model",
    adjacency=None,
) -> StaticModel:
    """Parse a ``.tm`` document into a frozen :class:`StaticModel`.

    Raises :class:`ParseError` listing every error found.
    """
    model = StaticModel(name, adjacency)
    diagnostics: list[SourceDiagnostic] = []
    for number, line, toks, error in _statements(text):
        if error is not None:
            diagnostics.append(SourceDiagnostic("error", error.code, str(error), number, error.col))
            continue
        cur = _Cursor(toks, len(line))
        try:
            head = cur.take("word", "a statement keyword")
            if head.text == "thimac":
                _thimac_stmt(model, cur)
            elif head.text == "flow":
                _flow_stmt(model, cur)
            elif head.text == "trigger":
                _trigger_stmt(model, cur)
            else:
                raise _Syntax(f"unknown statement {head.text!r}", head.col)
        except _Syntax as exc:
            diagnostics.append(SourceDiagnostic("error", exc.code, str(exc), number, exc.col))
        except ModelError as exc:
            diagnostics.append(SourceDiagnostic("error", exc.code, exc.message, number, toks[0].col))
    if diagnostics:
        raise ParseError(diagnostics)
    return model.freeze()


def _statements(text: str):
    for number, line in enumerate(text.splitlines(), start=1):
        try:
            toks = _tokenize(line)
        except _Syntax as exc:
            yield number, line, [], exc
            continue
        if toks:
            yield number, line, toks, None


def _thimac_stmt(model: StaticModel, cur: _Cursor) -> None:
    name = cur.take("word", "thimac name")
    parent = None
    if cur.keyword("in"):
        parent = cur.take("word", "parent thimac").text
    tid = model.add_thimac(name.text, parent)
    if cur.peek("{"):
        cur.take("{", "'{'")
        while not cur.peek("}"):
            tok = cur.take("word", "action declaration or '}'")
            kind_text, _, instance = tok.text.partition("@")
            try:
                kind = ActionKind(kind_text)
            except ValueError:
                raise _Syntax(f"unknown action kind {kind_text!r}", tok.col) from None
            label = cur.label()
            model.add_action(tid, kind, instance or None, label)
            if cur.peek(","):
                cur.take(",", "','")
        cur.take("}", "'}'")
    cur.done()


def _endpoint(cur: _Cursor) -> tuple[str, str | None, int]:
    tok = cur.take("word", "endpoint THIMAC.ACTION")
    try:
        parse_action_ref(tok.text)
    except ModelError as exc:
        raise _Syntax(exc.message, tok.col) from None
    return tok.text, cur.label(), tok.col


def _flow_stmt(model: StaticModel, cur: _Cursor) -> None:
    if cur.peek("string"):
        thing = cur.take("string", "thing").text
    else:
        words = []
        while cur.peek("word"):
            words.append(cur.take("word", "thing").text)
        if not words:
            raise _Syntax("expected thing name", cur.end_col)
        thing = " ".join(words)
    cur.take(":", "':' after thing")
    endpoints = [_endpoint(cur)]
    labels: list[str | None] = []
    while cur.peek("arrow"):
        labels.append(cur.take("arrow", "'->'").text or None)
        endpoints.append(_endpoint(cur))
    cur.done()
    if len(endpoints) < 2:
        raise _Syntax("a flow needs at least two endpoints", endpoints[0][2])
    refs = []
    for ref, label, col in endpoints:
        thimac, kind, instance = parse_action_ref(ref)
        try:
            model.thimac(thimac)
        except ModelError as exc:
            raise _Syntax(exc.message, col, exc.code) from None
        refs.append((thimac, kind, instance, label))
    model.add_flow(thing, [(t, k, i) for t, k, i, _ in refs], labels)
    for t, k, i, label in refs:
        if label is not None:
            model.add_action(t, k, i, label)


def _trigger_stmt(model: StaticModel, cur: _Cursor) -> None:
    src, src_label, src_col = _endpoint(cur)
    label = cur.take("arrow", "'->'").text or None
    dst, dst_label, dst_col = _endpoint(cur)
    note = cur.take("string", "note").text if cur.peek("string") else None
    cur.done()
    for ref, lab, col in ((src, src_label, src_col), (dst, dst_label, dst_col)):
        try:
            node = model.action(ref)
        except ModelError as exc:
            raise _Syntax(exc.message, col, exc.code) from None
        if lab is not None:
            model.add_action(node.owner, node.kind, node.instance, lab)
    model.add_trigger(src, dst, label, note)


_WORD = re.compile(r"[A-Za-z0-9_@./]+(?:-(?![>\[])[A-Za-z0-9_@./]*)*")


def _quote_thing(thing: str) -> str:
    parts = thing.split(" ")
    if all(_WORD.fullmatch(p) for p in parts) and parts[0] not in ("thimac", "flow", "trigger"):
        return thing
    return json.dumps(thing, ensure_ascii=False)


_KIND_ORDER = {k: n for n, k in enumerate(ActionKind)}


def serialize_static(model: StaticModel) -> str:
    out: list[str] = []

    def emit(parent: str | None) -> None:
        for t in model.children(parent):
            decls = []
            for a in sorted(
                model.actions_of(t.id), key=lambda a: (_KIND_ORDER[a.kind], a.instance or "")
            ):
                text = a.kind.value + (f"@{a.instance}" if a.instance else "")
                decls.append(text + (f"({a.label})" if a.label else ""))
            head = f"thimac {t.name}" + (f" in {t.parent}" if t.parent else "")
            out.append(f"{head} {{ {' '.join(decls)} }}" if decls else f"{head} {{ }}")
            emit(t.id)

    emit(None)
    for f in model.flows.values():
        arrow = f"-[{f.label}]->" if f.label else "->"
        out.append(f"flow {_quote_thing(f.thing)}: {f.source} {arrow} {f.target}")
    for t in model.triggers.values():
        arrow = f"-[{t.label}]->" if t.label else "->"
        note = f" {json.dumps(t.note, ensure_ascii=False)}" if t.note else ""
        out.append(f"trigger {t.source} {arrow} {t.target}{note}")
    return "".join(line + "\n" for line in out)


# -- dynamic -----------------------------------------------------------------


def parse_dynamics(text: str, base: StaticModel) -> DynamicModel:
    """Parse a ``.tmd`` document against a frozen base model."""
    if not base.frozen:
        raise ValueError("the base model must be frozen")
    diagnostics: list[SourceDiagnostic] = []
    events: list[Event] = []
    edges: list[tuple[ChronEdge, int, int]] = []
    for number, line, toks, error in _statements(text):
        if error is not None:
            diagnostics.append(SourceDiagnostic("error", error.code, str(error), number, error.col))
            continue
        cur = _Cursor(toks, len(line))
        try:
            head = cur.take("word", "a statement keyword")
            if head.text == "event":
                ev = _event_stmt(base, cur, number)
                if any(e.id == ev.id for e in events):
                    raise _Syntax(f"event {ev.id!r} declared twice", toks[1].col, "E-DUP")
                events.append(ev)
            elif head.text == "chron":
                edges.append((_chron_stmt(cur), number, toks[1].col))
            else:
                raise _Syntax(f"unknown statement {head.text!r}", head.col)
        except _Syntax as exc:
            diagnostics.append(SourceDiagnostic("error", exc.code, str(exc), number, exc.col))
    if not diagnostics:
        unique: list[ChronEdge] = []
        where: dict[ChronEdge, tuple[int, int]] = {}
        for e, number, col in edges:
            if e not in where:
                unique.append(e)
                where[e] = (number, col)
        for p in chronology_problems([e.id for e in events], unique):
            number, col = where.get(p.edge, (edges[0][1], 1)) if edges else (1, 1)
            diagnostics.append(SourceDiagnostic("error", p.code, p.message, number, col))
        if not diagnostics:
            chron = Chronology(tuple(e.id for e in events), tuple(unique))
            return DynamicModel(base, tuple(events), chron)
    raise ParseError(diagnostics)


def _event_stmt(base: StaticModel, cur: _Cursor, number: int) -> Event:
    ev_id = cur.take("word", "event id")
    description = cur.take("string", "description").text if cur.peek("string") else ""
    cur.take("{", "'{' opening the region")
    refs: list[tuple[str, int]] = []
    while True:
        tok = cur.take("word", "action reference")
        refs.append((tok.text, tok.col))
        if cur.peek("}"):
            break
        cur.take(",", "',' or '}'")
    cur.take("}", "'}'")
    cur.done()
    ids = []
    for ref, col in refs:
        try:
            ids.append(base.action(ref).id)
        except ModelError as exc:
            raise _Syntax(f"event {ev_id.text}: {exc.message}", col, "E-REGION") from None
    try:
        region = subregion(base, ids)
    except ModelError as exc:
        raise _Syntax(f"event {ev_id.text}: {exc.message}", ev_id.col, "E-REGION") from None
    return Event(ev_id.text, region, description)


def _chron_stmt(cur: _Cursor) -> ChronEdge:
    src = cur.take("word", "source event").text
    cur.take("arrow", "'->'")
    dst = cur.take("word", "target event").text
    guard = None
    repeat = False
    if cur.keyword("guard"):
        group = cur.take("word", "guard group").text
        cur.take("=", "'='")
        guard = (group, cur.take("word", "guard label").text)
    if cur.keyword("repeat"):
        repeat = True
    cur.done()
    return as_edge((src, dst, guard, repeat))


def serialize_dynamics(dyn: DynamicModel) -> str:
    out = []
    for ev in dyn.events:
        desc = f" {json.dumps(ev.description, ensure_ascii=False)}" if ev.description else ""
        region = ", ".join(sorted(ev.region.actions, key=natural_key))
        out.append(f"event {ev.id}{desc} {{ {region} }}")
    for e in dyn.chronology.edges:
        line = f"chron {e.source} -> {e.target}"
        if e.guard:
            line += f" guard {e.guard[0]}={e.guard[1]}"
        if e.repeat:
            line += " repeat"
        out.append(line)
    return "".join(line + "\n" for line in out)


def serialize(model: StaticModel | DynamicModel) -> str:
    if isinstance(model, DynamicModel):
        return serialize_dynamics(model)
    return serialize_static(model)


# -- scenarios ---------------------------------------------------------------


def parse_scenario(text: str, name: str = "default") -> Scenario:
    diagnostics: list[SourceDiagnostic] = []
    choices: dict[str, str] = {}
    repeats: dict[str, int] = {}
    starts: list[str] = []
    for number, line, toks, error in _statements(text):
        if error is not None:
            diagnostics.append(SourceDiagnostic("error", error.code, str(error), number, error.col))
            continue
        cur = _Cursor(toks, len(line))
        try:
            head = cur.take("word", "a statement keyword")
            if head.text == "scenario":
                name = cur.take("word", "scenario name").text
            elif head.text == "start":
                starts.append(cur.take("word", "event id").text)
            elif head.text in ("choose", "repeat"):
                group = cur.take("word", "guard group").text
                cur.take("=", "'='")
                value = cur.take("word", "value")
                if head.text == "choose":
                    choices[group] = value.text
                else:
                    if not value.text.isdigit() or int(value.text) < 1:
                        raise _Syntax("repeat bound must be a positive integer", value.col)
                    repeats[group] = int(value.text)
            else:
                raise _Syntax(f"unknown statement {head.text!r}", head.col)
            cur.done()
        except _Syntax as exc:
            diagnostics.append(SourceDiagnostic("error", exc.code, str(exc), number, exc.col))
    if diagnostics:
        raise ParseError(diagnostics)
    return Scenario(name, choices, repeats, tuple(starts))


def serialize_scenario(scenario: Scenario) -> str:
    out = [f"scenario {scenario.name}"]
    out += [f"start {s}" for s in scenario.starts]
    out += [f"choose {g} = {v}" for g, v in scenario.choices.items()]
    out += [f"repeat {g} = {n}" for g, n in scenario.repeats.items()]
    return "".join(line + "\n" for line in out)


# -- files -------------------------------------------------------------------


def load_static(path: str | Path, adjacency=None) -> StaticModel:
    path = Path(path)
    return parse_static(path.read_text(encoding="utf-8"), name=path.stem, adjacency=adjacency)


def load_dynamics(path: str | Path, base: StaticModel) -> DynamicModel:
    return parse_dynamics(Path(path).read_text(encoding="utf-8"), base)


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"), name=path.stem)
