"""Deterministic discrete-event simulation of driver-cockpit interaction
under adaptive vehicle automation (levels 0-4), with Monte Carlo
experiments and a constraint-checked local search over design moves."""

from .attention import AbortReason, Aborted, AttentionState, Granted, Queued, TaskInstance
from .driver import (
    AwarenessParameter,
    CognitiveFunction,
    DriverMemory,
    GroundTruth,
    awareness,
    discretize,
)
from .engine import EventCalendar, EventKind, RandomStreams, SimEvent, SimulationError
from .experiment import (
    Comparison,
    DesignMove,
    ExperimentPlan,
    MoveRecord,
    ObjectivePoint,
    ObjectiveWeights,
    ReallocateLocation,
    RemoveTask,
    ReplaceDescriptor,
    SearchResult,
    SerializeSignals,
    apply_move,
    compare,
    enumerate_moves,
    load_plan,
    local_search,
    objective_point,
    replay_moves,
    run_many,
    run_metrics,
)
from .metrics import TraceRecord, TrialMetrics, aggregate, median_low, read_trace, write_trace
from .replay import check_safety_rules, check_tor_lead_times, replay_metrics
from .scenario import Scenario, ScenarioError, cross_validate, load_scenario
from .tasks import (
    Configuration,
    ConfigurationError,
    Initiator,
    InterfaceElement,
    Task,
    Violation,
    copy_configuration,
    load_configuration,
    validate,
    write_tasks_csv,
)
from .trial import TrialResult, run_trial
from .vehicle import (
    AutomationStateMachine,
    RoadSegment,
    RoadTimeline,
    TorPhase,
    generate_timeline,
    schedule_tor,
)
from .workload import AttentionalChannel, ScaleCategory, UnknownDescriptorError, WorkloadScale

__version__ = "0.1.0"

__all__ = [
    "AbortReason",
    "Aborted",
    "AttentionState",
    "AttentionalChannel",
    "AutomationStateMachine",
    "AwarenessParameter",
    "CognitiveFunction",
    "Comparison",
    "Configuration",
    "ConfigurationError",
    "DesignMove",
    "DriverMemory",
    "EventCalendar",
    "EventKind",
    "ExperimentPlan",
    "Granted",
    "GroundTruth",
    "Initiator",
    "InterfaceElement",
    "MoveRecord",
    "ObjectivePoint",
    "ObjectiveWeights",
    "Queued",
    "RandomStreams",
    "ReallocateLocation",
    "RemoveTask",
    "ReplaceDescriptor",
    "RoadSegment",
    "RoadTimeline",
    "Scenario",
    "ScenarioError",
    "SearchResult",
    "SerializeSignals",
    "SimEvent",
    "SimulationError",
    "Task",
    "TaskInstance",
    "TorPhase",
    "TraceRecord",
    "TrialMetrics",
    "TrialResult",
    "UnknownDescriptorError",
    "Violation",
    "WorkloadScale",
    "aggregate",
    "apply_move",
    "awareness",
    "check_safety_rules",
    "check_tor_lead_times",
    "compare",
    "copy_configuration",
    "cross_validate",
    "discretize",
    "enumerate_moves",
    "generate_timeline",
    "load_configuration",
    "load_plan",
    "load_scenario",
    "local_search",
    "median_low",
    "objective_point",
    "read_trace",
    "replay_metrics",
    "replay_moves",
    "run_many",
    "run_metrics",
    "run_trial",
    "schedule_tor",
    "validate",
    "write_tasks_csv",
    "write_trace",
]
