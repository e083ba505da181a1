"""Run every stored hospital scenario and show how guards and loops shape the trace.

Run with ``python demos/hospital_scenarios.py``.
"""

from __future__ import annotations

from tmcarve import Scenario, check_trace, simulate
from tmcarve.corpus import corpus_entry


def main() -> None:
    entry = corpus_entry("hospital")
    dyn = entry.dynamic

    # Stored scenarios choose a branch for each guard and a bound for each loop.
    for scenario in entry.scenarios:
        trace = simulate(dyn, scenario)
        ok = not check_trace(trace, dyn.chronology, scenario)
        print(f"{scenario.name:<28} {'sound' if ok else 'UNSOUND'}  {' '.join(trace.events)}")

    # The same start under different loop bounds: the scan body repeats k times.
    print()
    for k in (1, 2, 3):
        scenario = Scenario(f"scan-{k}", {"found": "end-of-file"}, {"scan": k}, ("E1",))
        trace = simulate(dyn, scenario)
        print(f"scan bound {k}: E2 x{trace.count('E2')}, E3 x{trace.count('E3')} -> {' '.join(trace.events)}")

    # Leaving a guard unresolved is reported rather than guessed.
    try:
        simulate(dyn, Scenario("undecided", {}, {"scan": 1}, ("E1",)))
    except Exception as exc:  # noqa: BLE001 - demo output
        print(f"\nundecided guard -> {type(exc).__name__}: {exc}")


if __name__ == "__main__":
    main()
