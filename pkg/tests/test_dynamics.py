from __future__ import annotations

import json

import networkx as nx
import pytest
from hypothesis import given, settings

import strategies as S
from tmcarve.carving import finest_carving
from tmcarve.dsl import parse_dynamics, parse_static
from tmcarve.dynamics import (
    ChronologyError,
    Scenario,
    SimulationError,
    as_edge,
    build_chronology,
    check_trace,
    chronology_from_dependencies,
    chronology_problems,
    dependency_oracle,
    loop_body,
    simulate,
    trace_from_json,
    trace_to_json,
    trace_to_lines,
    with_chronology,
)
from tmcarve.metamodel import ChronEdge, Chronology, DynamicModel, Event, Trace, subregion


def trace_of(*events: str, scenario: str = "") -> Trace:
    return Trace(tuple((ev, n) for n, ev in enumerate(events, 1)), scenario)


def nx_closure(chron: Chronology) -> nx.DiGraph:
    g = nx.DiGraph()
    g.add_nodes_from(chron.events)
    g.add_edges_from((e.source, e.target) for e in chron.edges if not e.repeat)
    return nx.transitive_closure_dag(g)


class TestBuildChronology:
    def test_hospital_loop_accepted(self, hospital):
        chron = build_chronology(hospital.dynamic, hospital.dynamic.chronology.edges)
        assert ChronEdge("E3", "E2", ("scan", "next"), True) in chron.edges

    def test_two_way_cycle(self, circulation):
        with pytest.raises(ChronologyError) as exc:
            build_chronology(circulation.dynamic, [("E1", "E2"), ("E2", "E1")])
        assert exc.value.code == "E-CYCLE"

    def test_unknown_event(self, circulation):
        with pytest.raises(ChronologyError) as exc:
            build_chronology(circulation.dynamic, [("E1", "E99")])
        assert exc.value.code == "E-UNKNOWN-EVENT"

    def test_duplicates_collapse(self, circulation):
        chron = build_chronology(circulation.dynamic, [("E1", "E2"), ("E1", "E2")])
        assert len(chron.edges) == 1

    def test_guard_string_form(self):
        assert as_edge(("A", "B", "g=l", True)) == ChronEdge("A", "B", ("g", "l"), True)
        with pytest.raises(ChronologyError):
            as_edge(("A", "B", "nolabel"))

    @pytest.mark.parametrize(
        "edges,problem",
        [
            ([("A", "B"), ("B", "A", None, True)], "needs a guard"),
            ([("A", "B"), ("A", "B", "g=n", True)], "does not close a loop"),
            ([("A", "B"), ("B", "C"), ("C", "A", "g=n", True), ("B", "A", "h=n", True)], "overlap"),
            ([("A", "B"), ("B", "A", "g=n", True), ("B", "A", "h=n", True)], "more than one"),
            ([("A", "B"), ("C", "D"), ("B", "A", "g=n", True), ("D", "C", "h=n", True), ("A", "D"), ("C", "B")], "interlock"),
        ],
    )
    def test_malformed_loops(self, edges, problem):
        problems = chronology_problems("ABCD", [as_edge(e) for e in edges])
        assert problems and problems[0].code == "E-LOOP"
        assert problem in problems[0].message

    def test_loop_body(self, hospital):
        edges = hospital.dynamic.chronology.edges
        rep = next(e for e in edges if e.repeat and e.guard[0] == "code-scan")
        assert loop_body(edges, rep) == {"E15", "E16"}


class TestDependencyOracle:
    def test_circulation_examples(self, circulation):
        pairs = {(p.before, p.after): p for p in dependency_oracle(circulation.dynamic)}
        assert ("E2", "E3") in pairs
        assert ("E8", "E9") in pairs
        assert pairs[("E2", "E3")].thing == "oxygen"

    def test_witness_leaves_and_enters(self, circulation, hospital):
        for entry in (circulation, hospital):
            dyn = entry.dynamic
            arcs = {a.id: a for a in dyn.base.arcs()}
            for p in dependency_oracle(dyn):
                arc = arcs[p.arc]
                before, after = dyn.event(p.before).region, dyn.event(p.after).region
                assert arc.source in before and arc.target not in before
                assert arc.target in after and arc.source not in after

    def test_brute_force(self, hospital):
        dyn = hospital.dynamic
        expected = set()
        for i in dyn.events:
            for j in dyn.events:
                if i.id != j.id and any(
                    a.source in i.region.actions and a.source not in j.region.actions
                    and a.target in j.region.actions and a.target not in i.region.actions
                    for a in dyn.base.arcs()
                ):
                    expected.add((i.id, j.id))
        assert {(p.before, p.after) for p in dependency_oracle(dyn)} == expected

    def test_single_region_has_no_pairs(self, circulation):
        model = circulation.model
        dyn = DynamicModel(model, (Event("All", subregion(model, model.actions)),), Chronology(("All",)))
        assert dependency_oracle(dyn) == frozenset()

    def test_pure_oracle_dag_sources(self, circulation):
        chron = chronology_from_dependencies(circulation.dynamic)
        g = nx.DiGraph([(e.source, e.target) for e in chron.edges])
        g.add_nodes_from(chron.events)
        assert nx.is_directed_acyclic_graph(g)
        assert {n for n in g if g.in_degree(n) == 0} == {"E1", "E4", "E5", "E6", "E7"}

    def test_corpus_chronology_has_unique_source(self, circulation):
        chron = chronology_from_dependencies(circulation.dynamic, [("E1", f"E{n}") for n in range(4, 8)])
        g = nx.DiGraph([(e.source, e.target) for e in chron.edges])
        assert [n for n in g if g.in_degree(n) == 0] == ["E1"]
        assert set(chron.edges) == set(circulation.dynamic.chronology.edges)

    @pytest.mark.parametrize("name", ["circulation", "hospital"])
    def test_dependency_consistency(self, name, request):
        dyn = request.getfixturevalue(name).dynamic
        closure = nx_closure(dyn.chronology)
        missing = [(p.before, p.after) for p in dependency_oracle(dyn) if not closure.has_edge(p.before, p.after)]
        assert missing == []


class TestSimulate:
    def test_circulation_one_each_in_topological_order(self, circulation):
        dyn, scenario = circulation.dynamic, circulation.scenarios[0]
        trace = simulate(dyn, scenario)
        assert sorted(trace.events) == sorted(dyn.event_ids)
        # independent oracle: networkx lexicographic topological sort with numeric ids
        g = nx.DiGraph([(e.source, e.target) for e in dyn.chronology.edges])
        g.add_nodes_from(dyn.event_ids)
        assert trace.events == list(nx.lexicographical_topological_sort(g, key=lambda ev: int(ev[1:])))
        assert check_trace(trace, dyn.chronology, scenario) == []

    def test_found_yes(self, hospital):
        trace = simulate(hospital.dynamic, hospital.scenario("duplicate-ssn"))
        assert trace.events[-1] == "E4"
        assert not {"E5", "E6", "E7"} & set(trace.events)

    def test_found_end_of_file(self, hospital):
        trace = simulate(hospital.dynamic, hospital.scenario("new-patient"))
        ev = trace.events
        assert ev.index("E5") < ev.index("E6") < ev.index("E7")
        assert "E4" not in ev

    @pytest.mark.parametrize("k", [1, 2, 3, 5])
    def test_repeat_bound(self, hospital, k):
        scenario = Scenario("s", {"found": "yes"}, {"scan": k}, ("E1",))
        trace = simulate(hospital.dynamic, scenario)
        assert trace.count("E2") == trace.count("E3") == k
        assert trace.events == ["E1"] + ["E2", "E3"] * k + ["E4"]

    def test_diagnosis_branches(self, hospital):
        existing = simulate(hospital.dynamic, hospital.scenario("new-diagnosis-existing-code")).events
        assert existing[-2:] == ["E17", "E18"]
        assert not {"E19", "E20", "E21", "E11"} & set(existing)
        new_code = simulate(hospital.dynamic, hospital.scenario("new-diagnosis-new-code")).events
        assert new_code[-3:] == ["E19", "E20", "E21"]
        assert new_code.count("E15") == 4
        missing = simulate(hospital.dynamic, hospital.scenario("unknown-patient")).events
        assert missing[-1] == "E11" and "E12" not in missing

    def test_corpus_scenarios_are_sound(self, hospital):
        for s in hospital.scenarios:
            assert check_trace(simulate(hospital.dynamic, s), hospital.dynamic.chronology, s) == []

    def test_unresolved_guard(self, hospital):
        with pytest.raises(SimulationError) as exc:
            simulate(hospital.dynamic, Scenario("s", {}, {"scan": 1}, ("E1",)))
        assert exc.value.code == "E-UNRESOLVED-GUARD"

    def test_unreached_guards_need_no_choice(self, hospital):
        # only the new-patient procedure is reached; its diagnosis groups stay unresolved
        simulate(hospital.dynamic, Scenario("s", {"found": "yes"}, {"scan": 1}, ("E1",)))

    def test_missing_repeat_bound(self, hospital):
        with pytest.raises(SimulationError) as exc:
            simulate(hospital.dynamic, Scenario("s", {"found": "yes"}, {}, ("E1",)))
        assert exc.value.code == "E-REPEAT-BOUND"

    def test_unknown_start(self, hospital):
        with pytest.raises(SimulationError):
            simulate(hospital.dynamic, Scenario("s", starts=("E99",)))

    def test_ties_break_by_natural_id(self):
        m = parse_static("thimac A { create process }")
        dyn = parse_dynamics("event E10 { A.create }\nevent E2 { A.process }\n", m)
        assert simulate(dyn, Scenario()).events == ["E2", "E10"]

    def test_deterministic(self, hospital):
        s = hospital.scenario("new-diagnosis-new-code")
        assert simulate(hospital.dynamic, s) == simulate(hospital.dynamic, s)

    @settings(max_examples=200)
    @given(S.dynamic_with_scenarios())
    def test_soundness_and_termination(self, pair):
        dyn, scenario = pair
        trace = simulate(dyn, scenario)
        assert check_trace(trace, dyn.chronology, scenario) == []
        bound = max(scenario.repeats.values(), default=1)
        assert len(trace.occurrences) <= len(dyn.events) * bound


class TestCheckTrace:
    def test_swapped_events(self, circulation):
        dyn = circulation.dynamic
        events = [f"E{n}" for n in range(1, 17)]
        events[1], events[2] = events[2], events[1]
        violations = check_trace(trace_of(*events), dyn.chronology, Scenario())
        assert len(violations) == 1
        edge = violations[0].edge
        assert (edge.source, edge.target) == ("E2", "E3")

    def test_empty(self):
        assert check_trace(trace_of(), Chronology(), Scenario()) == []

    def test_counts_and_ordinals(self, hospital):
        chron = hospital.dynamic.chronology
        s = hospital.scenario("duplicate-ssn")
        bad = Trace((("E1", 1), ("E2", 2), ("E3", 2), ("E4", 3), ("E9", 4)), s.name)
        kinds = {v.kind for v in check_trace(bad, chron, s)}
        assert {"ordinal", "count"} <= kinds

    def test_unknown_event(self):
        chron = Chronology(("A",))
        assert [v.kind for v in check_trace(trace_of("A", "Z"), chron, Scenario())] == ["unknown-event"]

    def test_loop_exit_too_early(self, hospital):
        s = hospital.scenario("duplicate-ssn")  # scan = 2
        trace = trace_of("E1", "E2", "E3", "E4", "E2", "E3")
        assert any(v.kind == "order" for v in check_trace(trace, hospital.dynamic.chronology, s))

    def test_missing_bound_reported(self, hospital):
        s = Scenario("s", {"found": "yes"}, {}, ("E1",))
        kinds = [v.kind for v in check_trace(trace_of("E1", "E2", "E3", "E4"), hospital.dynamic.chronology, s)]
        assert "repeat-bound" in kinds

    def test_violation_to_dict(self, circulation):
        events = ["E2", "E1"] + [f"E{n}" for n in range(3, 17)]
        (v,) = check_trace(trace_of(*events), circulation.dynamic.chronology, Scenario())
        assert v.to_dict()["edge"] == {"from": "E1", "to": "E2", "guard": None, "repeat": False}


class TestTraceSerialisation:
    def test_json_round_trip(self, hospital):
        trace = simulate(hospital.dynamic, hospital.scenario("duplicate-ssn"))
        data = trace_to_json(trace)
        assert data["scenario"] == "duplicate-ssn"
        assert data["occurrences"][0] == {"event": "E1", "ordinal": 1}
        assert trace_from_json(json.dumps(data)) == trace

    def test_lines(self):
        assert trace_to_lines(trace_of("E1", "E2")) == "1 E1\n2 E2\n"


def test_with_chronology_replaces_edges(circulation):
    dyn = with_chronology(finest_carving(circulation.model), [("E1", "E2")])
    assert dyn.chronology.edges == (ChronEdge("E1", "E2"),)
