"""Command-line entry point: ``tmcarve SUBCOMMAND ...``.

Exit status: 0 on success, 1 when the input has error diagnostics (or
warnings under ``--strict``), 2 on usage or I/O failure.

Any FILE argument may be a ``corpus:`` reference.  For a corpus model the
DYNFILE argument is optional (the model's own ``.tmd`` is used), and
``--scenario`` may name one of its scenarios instead of a file.
"""

from __future__ import annotations

import argparse
import json
import sys
from collections.abc import Sequence
from pathlib import Path

from . import corpus
from .carving import carving_kind, classify_all, coverage, finest_carving
from .dsl import ParseError, load_dynamics, load_scenario, load_static, parse_dynamics, parse_scenario, serialize_dynamics
from .dynamics import Scenario, simulate, trace_to_json, trace_to_lines
from .metamodel import DynamicModel, ModelError, StaticModel, natural_key
from .render import RenderOptions, to_dot_chronology, to_dot_dynamic, to_dot_static
from .report import Report, finding, from_source
from .validator import RuleConfig, load_rule_config, validate_dynamic, validate_static

OK, FAILED, USAGE = 0, 1, 2


class _Failure(Exception):
    """A report-worthy failure: input diagnostics (exit 1) or I/O trouble (exit 2)."""

    def __init__(self, status: int, findings: list[dict]) -> None:
        super().__init__(findings[0]["message"] if findings else "")
        self.status = status
        self.findings = findings


# -- argument resolution -----------------------------------------------------


def _read(path: str) -> str:
    try:
        return Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise _Failure(USAGE, [finding("error", "E-IO", [path], exc.strerror or str(exc))]) from None


def _parse_failure(exc: ParseError, source: str) -> _Failure:
    return _Failure(FAILED, [from_source(d, source) for d in exc.diagnostics])


def _corpus_failure(exc: ModelError, ref: str) -> _Failure:
    return _Failure(USAGE, [finding("error", exc.code, [ref], exc.message)])


def _load_static(ref: str, config: RuleConfig | None = None) -> StaticModel:
    adjacency = config.adjacency if config else None
    try:
        if corpus.is_corpus_ref(ref):
            return corpus.corpus_static(ref, adjacency)
        _read(ref)
        return load_static(ref, adjacency=adjacency)
    except ParseError as exc:
        raise _parse_failure(exc, ref) from None
    except ModelError as exc:
        raise _corpus_failure(exc, ref) from None


def _load_dynamic(ref: str | None, model_ref: str, model: StaticModel) -> DynamicModel:
    try:
        if ref is None:
            if not corpus.is_corpus_ref(model_ref):
                raise _Failure(USAGE, [finding("error", "E-USAGE", [], "a DYNFILE is required")])
            name, _ = corpus.split_ref(model_ref)
            ref = f"{corpus.PREFIX}{name}"
        if corpus.is_corpus_ref(ref):
            name, member = corpus.split_ref(ref)
            text = corpus.corpus_text(name, f"{member or name}.tmd")
            return parse_dynamics(text, model)
        _read(ref)
        return load_dynamics(ref, model)
    except ParseError as exc:
        raise _parse_failure(exc, ref) from None
    except ModelError as exc:
        raise _corpus_failure(exc, ref) from None


def _load_scenario(ref: str, model_ref: str) -> Scenario:
    try:
        if corpus.is_corpus_ref(ref):
            name, member = corpus.split_ref(ref)
            return parse_scenario(corpus.corpus_text(name, f"{member}.scn"), member or name)
        if Path(ref).exists() or not corpus.is_corpus_ref(model_ref):
            _read(ref)
            return load_scenario(ref)
        name, _ = corpus.split_ref(model_ref)
        return corpus.corpus_entry(name).scenario(ref)
    except ParseError as exc:
        raise _parse_failure(exc, ref) from None
    except ModelError as exc:
        raise _corpus_failure(exc, ref) from None


def _write(path: str, text: str) -> None:
    try:
        Path(path).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise _Failure(USAGE, [finding("error", "E-IO", [path], exc.strerror or str(exc))]) from None


def _emit(report: Report, as_json: bool) -> None:
    if as_json:
        sys.stdout.write(json.dumps(report.to_dict(), indent=2) + "\n")
    else:
        sys.stdout.write(report.to_text())


# -- subcommands -------------------------------------------------------------


def _cmd_validate(args: argparse.Namespace) -> tuple[Report, int]:
    config = None
    if args.rules:
        _read(args.rules)
        config = load_rule_config(args.rules)
    model = _load_static(args.file, config)
    report = Report("validate", model.name)
    report.findings += [d.to_dict() for d in validate_static(model, config)]
    if args.dynamic:
        dyn = _load_dynamic(args.dynamic, args.file, model)
        report.findings += [d.to_dict() for d in validate_dynamic(dyn, config)]
    failed = report.errors or (args.strict and report.warnings)
    return report, FAILED if failed else OK


def _cmd_coverage(args: argparse.Namespace) -> tuple[Report, int]:
    model = _load_static(args.file)
    dyn = _load_dynamic(args.dynfile, args.file, model)
    report = Report("coverage", model.name, sections={"coverage": coverage(model, dyn).to_dict()})
    return report, OK


def _cmd_classify(args: argparse.Namespace) -> tuple[Report, int]:
    model = _load_static(args.file)
    dyn = _load_dynamic(args.dynfile, args.file, model)
    classes = classify_all(dyn)
    kind = carving_kind(dyn)
    report = Report(
        "classify",
        model.name,
        sections={
            "classes": [{"event": ev, "class": str(c)} for ev, c in sorted(classes.items(), key=lambda kv: natural_key(kv[0]))],
            "summary": {"structural": kind.structural, "processual": kind.processual},
        },
    )
    return report, OK


def _cmd_simulate(args: argparse.Namespace) -> tuple[Report, int]:
    model = _load_static(args.file)
    dyn = _load_dynamic(args.dynfile, args.file, model)
    scenario = _load_scenario(args.scenario, args.file)
    report = Report("simulate", model.name)
    try:
        trace = simulate(dyn, scenario)
    except ModelError as exc:
        report.findings.append(finding("error", exc.code, [scenario.name], exc.message))
        return report, FAILED
    report.sections["trace"] = trace_to_json(trace)
    if args.trace:
        text = json.dumps(trace_to_json(trace), indent=2) + "\n" if args.trace.endswith(".json") else trace_to_lines(trace)
        _write(args.trace, text)
    return report, OK


def _cmd_carve(args: argparse.Namespace) -> int:
    model = _load_static(args.file)
    text = serialize_dynamics(finest_carving(model))
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return OK


def _cmd_render(args: argparse.Namespace) -> int:
    model = _load_static(args.file)
    opts = RenderOptions(show_step_labels=args.labels, highlight_events=tuple(args.highlight), rankdir=args.rankdir)
    try:
        if args.chronology:
            dyn = _load_dynamic(args.dynamic, args.file, model)
            text = to_dot_chronology(dyn.chronology, {ev.id: ev.description for ev in dyn.events})
        elif args.dynamic or args.highlight:
            text = to_dot_dynamic(_load_dynamic(args.dynamic, args.file, model), opts)
        else:
            text = to_dot_static(model, opts)
    except ModelError as exc:
        raise _Failure(FAILED, [finding("error", exc.code, [], exc.message)]) from None
    if args.output:
        _write(args.output, text)
    else:
        sys.stdout.write(text)
    return OK


def _cmd_corpus(args: argparse.Namespace) -> int:
    if args.action == "list":
        for name in corpus.corpus_names():
            sys.stdout.write(name + "\n")
        return OK
    if not args.name:
        raise _Failure(USAGE, [finding("error", "E-USAGE", [], "corpus show needs a NAME")])
    try:
        if args.file:
            sys.stdout.write(corpus.corpus_text(args.name, args.file))
            return OK
        entry = corpus.corpus_entry(args.name)
    except ModelError as exc:
        raise _corpus_failure(exc, args.name) from None
    m = entry.model
    lines = [
        f"name: {entry.name}",
        f"thimacs: {len(m.thimacs)}",
        f"actions: {len(m.actions)}",
        f"flows: {len(m.flows)}",
        f"triggers: {len(m.triggers)}",
        f"events: {len(entry.dynamic.events) if entry.dynamic else 0}",
        f"scenarios: {', '.join(s.name for s in entry.scenarios) or '-'}",
        f"files: {', '.join(corpus.corpus_files(entry.name))}",
    ]
    sys.stdout.write("".join(line + "\n" for line in lines))
    return OK


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tmcarve", description="Author, check, carve and run thinging-machine models.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("validate", help="run the structural and dynamic rules")
    p.add_argument("file", metavar="FILE")
    p.add_argument("--dynamic", metavar="DYNFILE")
    p.add_argument("--rules", metavar="CONFIG", help="JSON rule configuration")
    p.add_argument("--strict", action="store_true", help="warnings also fail")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("carve", help="emit a carving as a .tmd document")
    p.add_argument("file", metavar="FILE")
    p.add_argument("--finest", action="store_true", required=True, help="one event per action")
    p.add_argument("-o", "--output", metavar="OUT")

    for name, help_text in (("coverage", "report uncovered and shared actions"), ("classify", "classify every event")):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("file", metavar="FILE")
        p.add_argument("dynfile", metavar="DYNFILE", nargs="?")
        p.add_argument("--json", action="store_true")

    p = sub.add_parser("simulate", help="run a scenario and print the trace")
    p.add_argument("file", metavar="FILE")
    p.add_argument("dynfile", metavar="DYNFILE", nargs="?")
    p.add_argument("--scenario", required=True, metavar="SCNFILE")
    p.add_argument("--trace", metavar="OUT", help="also write the trace (.json for JSON, else lines)")
    p.add_argument("--json", action="store_true")

    p = sub.add_parser("render", help="emit Graphviz DOT")
    p.add_argument("file", metavar="FILE")
    p.add_argument("--dynamic", metavar="DYNFILE")
    p.add_argument("--chronology", action="store_true")
    p.add_argument("--labels", action="store_true", help="show step labels")
    p.add_argument("--highlight", action="append", default=[], metavar="EVENT")
    p.add_argument("--rankdir", default="LR", choices=["LR", "RL", "TB", "BT"])
    p.add_argument("-o", "--output", metavar="OUT.dot")

    p = sub.add_parser("corpus", help="list or describe the embedded models")
    p.add_argument("action", choices=["list", "show"])
    p.add_argument("name", nargs="?", metavar="NAME")
    p.add_argument("--file", metavar="FILENAME", help="print one stored file")
    return parser


def run(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else USAGE
    as_json = getattr(args, "json", False)
    try:
        if args.command == "carve":
            return _cmd_carve(args)
        if args.command == "render":
            return _cmd_render(args)
        if args.command == "corpus":
            return _cmd_corpus(args)
        handler = {
            "validate": _cmd_validate,
            "coverage": _cmd_coverage,
            "classify": _cmd_classify,
            "simulate": _cmd_simulate,
        }[args.command]
        report, status = handler(args)
    except _Failure as exc:
        if args.command in ("validate", "coverage", "classify", "simulate"):
            _emit(Report(args.command, findings=exc.findings), as_json)
        else:
            for f in exc.findings:
                sys.stderr.write(f"{f['severity'].upper()} {f['code']} {', '.join(f['subjects'])}: {f['message']}\n")
        return exc.status
    except ValueError as exc:  # malformed rule configuration and the like
        sys.stderr.write(f"error: {exc}\n")
        return USAGE
    _emit(report, as_json)
    return status


def main() -> None:
    sys.exit(run())
