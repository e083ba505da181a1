"""Start from the finest carving of the coffee machine and coarsen it step by step.

Run with ``python demos/carving_exploration.py``.
"""

from __future__ import annotations

from tmcarve import ModelError, carving_kind, classify_all, coverage, finest_carving, merge_events, serialize
from tmcarve.corpus import corpus_entry


def show(label: str, dyn) -> None:
    report = coverage(dyn.base, dyn)
    print(f"{label}: {len(dyn.events)} events, partition={report.is_partition}, {carving_kind(dyn)}")


def main() -> None:
    model = corpus_entry("coffee").model

    # The finest carving puts every action in its own event.
    dyn = finest_carving(model)
    show("finest", dyn)

    # Merge the events of each thimac that form a connected region.
    for thimac in sorted(model.thimacs):
        ids = [ev.id for ev in dyn.events if all(model.owner(a) == thimac for a in ev.region.actions)]
        if len(ids) < 2:
            continue
        try:
            dyn = merge_events(dyn, ids, thimac.replace("/", "-"))
            show(f"merged {thimac}", dyn)
        except ModelError as exc:
            print(f"cannot merge {thimac}: {exc.code}")

    print()
    for ev_id, cls in classify_all(dyn).items():
        print(f"  {ev_id:<16} {cls.value}")

    # The carving serializes to the event DSL, ready to save as a .tmd file.
    print()
    print(serialize(dyn))


if __name__ == "__main__":
    main()
