"""Embedded example models: ``circulation``, ``coffee`` and ``hospital``.

Each model lives in its own directory holding ``NAME.tm``, optionally
``NAME.tmd`` and any number of ``*.scn`` scenarios.  Extra ``.tm`` files are
variants of the static model (``coffee/coffee-struck-coins.tm``).

Files are addressed with ``corpus:`` references::

    corpus:circulation                   -> circulation/circulation.tm
    corpus:coffee/coffee-struck-coins    -> coffee/coffee-struck-coins.tm
    corpus:hospital/duplicate-ssn        -> hospital/duplicate-ssn.scn (as a scenario)
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from importlib.abc import Traversable

from ..dsl import parse_dynamics, parse_scenario, parse_static
from ..dynamics import Scenario
from ..metamodel import DynamicModel, ModelError, StaticModel

PREFIX = "corpus:"
NAMES = ("circulation", "coffee", "hospital")


@dataclass(frozen=True)
class CorpusEntry:
    name: str
    model: StaticModel
    dynamic: DynamicModel | None
    scenarios: tuple[Scenario, ...]

    def scenario(self, name: str) -> Scenario:
        for s in self.scenarios:
            if s.name == name:
                return s
        known = ", ".join(s.name for s in self.scenarios) or "none"
        raise ModelError("E-UNKNOWN-SCENARIO", f"{self.name} has no scenario {name!r} (known: {known})")


def _root() -> Traversable:
    return resources.files(__name__)


def _dir(name: str) -> Traversable:
    if name not in NAMES:
        raise ModelError("E-UNKNOWN-CORPUS", f"unknown corpus model {name!r}; choose from {', '.join(NAMES)}")
    return _root() / name


def corpus_names() -> list[str]:
    return list(NAMES)


def corpus_files(name: str) -> list[str]:
    """File names stored for ``name``, sorted."""
    return sorted(p.name for p in _dir(name).iterdir() if p.name.endswith((".tm", ".tmd", ".scn")))


def corpus_text(name: str, filename: str) -> str:
    path = _dir(name) / filename
    if not path.is_file():
        raise ModelError("E-UNKNOWN-CORPUS", f"corpus model {name!r} has no file {filename!r}")
    return path.read_text(encoding="utf-8")


def is_corpus_ref(ref: str) -> bool:
    return ref.startswith(PREFIX)


def split_ref(ref: str) -> tuple[str, str | None]:
    """``corpus:hospital/new-patient`` -> ``("hospital", "new-patient")``."""
    body = ref[len(PREFIX):] if is_corpus_ref(ref) else ref
    name, _, member = body.partition("/")
    _dir(name)
    return name, member or None


def corpus_static(ref: str, adjacency=None) -> StaticModel:
    """Load the static model (or a named variant) behind a ``corpus:`` reference."""
    name, member = split_ref(ref)
    stem = member or name
    return parse_static(corpus_text(name, f"{stem}.tm"), name=stem, adjacency=adjacency)


def corpus_load(name: str) -> tuple[StaticModel, DynamicModel | None, list[Scenario]]:
    entry = corpus_entry(name)
    return entry.model, entry.dynamic, list(entry.scenarios)


def corpus_entry(name: str) -> CorpusEntry:
    files = corpus_files(name)
    model = parse_static(corpus_text(name, f"{name}.tm"), name=name)
    dynamic = None
    if f"{name}.tmd" in files:
        dynamic = parse_dynamics(corpus_text(name, f"{name}.tmd"), model)
    scenarios = tuple(
        parse_scenario(corpus_text(name, f), name=f[: -len(".scn")]) for f in files if f.endswith(".scn")
    )
    return CorpusEntry(name, model, dynamic, scenarios)
