"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line.

The lines are printed as they are produced (visible with ``-s``) and again in
the pytest terminal summary.  Running this file directly with Python prints
them too.
"""

from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings

import strategies as S
from dotscan import scan
from tmcarve.carving import EventClass, classify_all, coverage, covered_actions, finest_carving, merge_events
from tmcarve.corpus import corpus_entry, corpus_static, corpus_text
from tmcarve.dsl import parse_static, serialize
from tmcarve.dynamics import Scenario, check_trace, dependency_oracle, simulate
from tmcarve.metamodel import ModelError, canonical_form
from tmcarve.render import RenderOptions, to_dot_chronology, to_dot_dynamic, to_dot_static
from tmcarve.validator import errors, validate_dynamic, validate_static

RESULTS: dict[int, str] = {}

# Event descriptions of the two corpus dynamic models (trailing full stops dropped).
CIRCULATION_EVENTS = [
    "Air enters the lungs",
    "The air is processed to produce oxygen",
    "Oxygen flows to the heart",
    "Deoxygenated blood flows from the brain to the heart",
    "Deoxygenated blood flows from the liver to the heart",
    "Deoxygenated blood flows from the gut to the heart",
    "Deoxygenated blood flows from the rest of body to the heart",
    "The heart process the oxygen and incoming deoxygenated bloods and generates oxygenated blood",
    "Oxygenated blood flows to the brain",
    "Oxygenated blood flows to the liver",
    "Oxygenated blood flows to the gut",
    "Oxygenated blood flows to the rest of the body",
    "The brain processes the oxygenated blood and generates deoxygenated blood",
    "The liver processes the oxygenated blood and generates deoxygenated blood",
    "The gut processes the oxygenated blood and generates deoxygenated blood",
    "The rest of body processes the oxygenated blood and generates deoxygenated blood",
]
HOSPITAL_E21 = "Construct the record (code, text) and insert it into the low diagnosis file"


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"criterion {number:>2} {'PASS' if ok else 'FAIL'}  {title}: {detail}"
    RESULTS[number] = line
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def circ():
    return corpus_entry("circulation")


@pytest.fixture(scope="module")
def hosp():
    return corpus_entry("hospital")


def test_criterion_01_circulation_fidelity(circ):
    diags = validate_static(circ.model) + validate_dynamic(circ.dynamic)
    ids = circ.dynamic.event_ids
    descriptions = [ev.description for ev in circ.dynamic.events]
    ok = not errors(diags) and ids == [f"E{n}" for n in range(1, 17)] and descriptions == CIRCULATION_EVENTS
    record(1, "circulation corpus", ok, f"{len(errors(diags))} errors, {len(ids)} events, descriptions match={descriptions == CIRCULATION_EVENTS}")


def test_criterion_02_hospital_fidelity(hosp):
    ids = hosp.dynamic.event_ids
    labels = hosp.model.step_labels()
    arc_labels = {a.label for a in hosp.model.arcs() if a.label}
    ok = (
        ids == [f"E{n}" for n in range(1, 22)]
        and hosp.dynamic.event("E21").description == HOSPITAL_E21
        and labels == {str(n) for n in range(1, 42)}
        and {"40", "41"} <= arc_labels
        and not errors(validate_static(hosp.model) + validate_dynamic(hosp.dynamic))
    )
    record(2, "hospital corpus", ok, f"{len(ids)} events, step labels {min(labels, key=int)}-{max(labels, key=int)} ({len(labels)})")


def test_criterion_03_ordering(circ):
    scenario = circ.scenarios[0]
    trace = simulate(circ.dynamic, scenario)
    pos = {ev: i for i, ev in enumerate(trace.events)}
    required = [("E1", "E2"), ("E2", "E3")]
    required += [(f"E{n}", "E8") for n in range(3, 8)]
    required += [("E8", f"E{n}") for n in range(9, 13)]
    required += [("E9", "E13"), ("E10", "E14"), ("E11", "E15"), ("E12", "E16")]
    broken = [(a, b) for a, b in required if pos[a] >= pos[b]]
    # every required ordering is derived from a flow crossing between event regions
    oracle = {(p.before, p.after) for p in dependency_oracle(circ.dynamic)}
    underived = [pair for pair in required if pair not in oracle]
    violations = check_trace(trace, circ.dynamic.chronology, scenario)
    ok = not broken and not underived and not violations and len(trace.events) == 16
    record(3, "circulation ordering", ok, f"{len(required) - len(broken)}/{len(required)} orderings held, {len(underived)} not oracle-derived, {len(violations)} trace violations")


def test_criterion_04_branches(hosp):
    yes = simulate(hosp.dynamic, Scenario("yes", {"found": "yes"}, {"scan": 1}, ("E1",))).events
    eof = simulate(hosp.dynamic, Scenario("eof", {"found": "end-of-file"}, {"scan": 1}, ("E1",))).events
    ok = "E4" in yes and not {"E5", "E6", "E7"} & set(yes) and {"E5", "E6", "E7"} <= set(eof) and "E4" not in eof
    record(4, "branch semantics", ok, f"found=yes -> {' '.join(yes)}; found=end-of-file -> {' '.join(eof)}")


def test_criterion_05_loops(hosp):
    counts = {}
    for k in (1, 3):
        trace = simulate(hosp.dynamic, Scenario(f"k{k}", {"found": "end-of-file"}, {"scan": k}, ("E1",)))
        counts[k] = (trace.count("E2"), trace.count("E3"))
    ok = counts == {1: (1, 1), 3: (3, 3)}
    record(5, "loop semantics", ok, f"(E2, E3) counts per bound: {counts}")


def test_criterion_06_dangling_warnings():
    coins = validate_static(corpus_static("corpus:coffee/coffee-struck-coins"))
    unsent = validate_static(corpus_static("corpus:coffee/coffee-unsent"))
    ok = (
        [d.code for d in coins] == ["W-DANGLING-INPUT"]
        and [d.code for d in unsent] == ["W-DANGLING-OUTPUT"]
        and not errors(coins + unsent)
    )
    record(6, "dangling-flow warnings", ok, f"struck coins {[d.code for d in coins]}, unsent {[d.code for d in unsent]}")


def test_criterion_07_finest_partition():
    seen = itertools.count()

    @settings(max_examples=200, database=None)
    @given(S.static_models())
    def check(model):
        next(seen)
        dyn = finest_carving(model)
        report = coverage(model, dyn)
        assert not report.uncovered and not report.overlaps
        assert len(dyn.events) == len(model.actions)

    check()
    n = next(seen)
    record(7, "finest carving is a partition", n >= 200, f"{n} generated models")


def test_criterion_08_merge_preservation():
    merged, rejected = itertools.count(), itertools.count()

    @settings(max_examples=200, database=None)
    @given(S.nonempty(S.static_models(max_flows=6)), S.st.data())
    def check(model, data):
        dyn = finest_carving(model)
        ids = data.draw(S.st.sets(S.st.sampled_from(dyn.event_ids), min_size=1))
        union = set().union(*(dyn.event(i).region.actions for i in ids))
        if model.is_connected(union):
            assert covered_actions(merge_events(dyn, ids, "M")) == covered_actions(dyn)
            next(merged)
        else:
            with pytest.raises(ModelError):
                merge_events(dyn, ids, "M")
            next(rejected)

    check()
    m, r = next(merged), next(rejected)
    record(8, "merge preserves coverage", m + r >= 200 and r > 0, f"{m + r} completed cases ({m} merged, {r} disconnected rejected)")


def test_criterion_09_round_trip():
    seen = itertools.count()

    @settings(max_examples=200, database=None)
    @given(S.static_models())
    def check(model):
        next(seen)
        assert canonical_form(parse_static(serialize(model))) == canonical_form(model)

    check()
    corpus_ok = []
    for name in ("circulation", "coffee", "hospital"):
        first = parse_static(corpus_text(name, f"{name}.tm"))
        corpus_ok.append(canonical_form(parse_static(serialize(first))) == canonical_form(first))
    n = next(seen)
    record(9, "parse/serialize round trip", n >= 200 and all(corpus_ok), f"{n} generated models + {sum(corpus_ok)}/3 corpus files")


def test_criterion_10_simulator_soundness():
    seen, loops = itertools.count(), itertools.count()

    @settings(max_examples=200, database=None)
    @given(S.dynamic_with_scenarios())
    def check(pair):
        dyn, scenario = pair
        next(seen)
        if any(e.repeat for e in dyn.chronology.edges):
            next(loops)
        assert check_trace(simulate(dyn, scenario), dyn.chronology, scenario) == []

    check()
    n, looped = next(seen), next(loops)
    record(10, "simulator soundness", n >= 200, f"{n} dyn+scenario pairs ({looped} with repeat loops)")


def test_criterion_11_classification(circ, hosp):
    classes = classify_all(circ.dynamic)
    transport = {f"E{n}" for n in (3, 9, 10, 11, 12)}
    transformation = {f"E{n}" for n in (2, 13, 14, 15, 16)}
    mixed = [ev for entry in (circ, hosp) for ev, c in classify_all(entry.dynamic).items() if c is EventClass.MIXED]
    ok = (
        all(classes[e] is EventClass.TRANSPORT for e in transport)
        and all(classes[e] is EventClass.TRANSFORMATION for e in transformation)
        and not mixed
    )
    record(11, "classification", ok, f"E3,E9-E12 Transport; E2,E13-E16 Transformation; Mixed events: {len(mixed)}")


def test_criterion_12_render_determinism():
    checked = 0
    ok = True
    for name in ("circulation", "coffee", "hospital"):
        entry = corpus_entry(name)
        outputs = [lambda: to_dot_static(entry.model, RenderOptions(show_step_labels=True))]
        if entry.dynamic:
            outputs += [lambda: to_dot_dynamic(entry.dynamic), lambda: to_dot_chronology(entry.dynamic.chronology)]
        for render in outputs:
            first, second = render(), render()
            ok &= first == second
            checked += 1
        ok &= len(scan(to_dot_static(entry.model)).nodes) == len(entry.model.actions)
        if entry.dynamic:
            ok &= len(scan(to_dot_dynamic(entry.dynamic)).nodes) == len(entry.model.actions)
    record(12, "render determinism", ok, f"{checked} renders byte-identical twice; node counts equal action counts")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q", "-s"]))
