"""Thinging-machine models: author, validate, carve into events, simulate and render."""

from .carving import (
    CarvingSummary,
    CoverageReport,
    EventClass,
    carving_kind,
    classify_all,
    classify_event,
    coverage,
    finest_carving,
    merge_events,
)
from .corpus import corpus_load
from .dsl import (
    ParseError,
    SourceDiagnostic,
    parse_dynamics,
    parse_scenario,
    parse_static,
    serialize,
    serialize_scenario,
)
from .dynamics import (
    PrecedencePair,
    Scenario,
    build_chronology,
    check_trace,
    dependency_oracle,
    simulate,
)
from .metamodel import (
    ActionKind,
    ActionNode,
    Chronology,
    DynamicModel,
    Event,
    FlowArc,
    ModelError,
    Region,
    StaticModel,
    Thimac,
    Trace,
    TriggerArc,
    subregion,
)
from .render import RenderOptions, to_dot_chronology, to_dot_dynamic, to_dot_static
from .validator import RuleConfig, RuleDiagnostic, validate_dynamic, validate_static

__version__ = "0.1.0"
