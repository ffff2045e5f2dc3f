"""Flat-combined concurrent red-black tree variants and their harness.

Public surface: build a map with :func:`make_variant`, drive it with the
``get/insert/delete/apply`` interface, and judge it with the oracle, the
linearizability checker, the stress harness, or the benchmark sweep.
"""

from .bench import BenchResult, emit_csv, parse_csv, run_bench, run_cell
from .claims import ClaimCheck, evaluate_claims, format_report
from .history import HistoryEvent, HistoryRecorder
from .linearizability import (
    LinResult,
    check_linearizable,
    illegal_history_catalog,
)
from .ops import Op, OpKind, OpResult
from .oracle import BisectOracle, OracleMap, replay_sequential, replay_writes
from .runtime import (
    CombinerEngine,
    EngineStats,
    RegistrationError,
    ShutdownError,
    StopWorldScope,
    WaitStrategy,
)
from .schedules import SCENARIOS, run_scenario
from .stress import DeadlockError, StressReport, run_recorded_history, run_stress
from .variants import (
    ALL_VARIANTS,
    ENGINE_VARIANTS,
    OPTIONAL_VARIANTS,
    CoarseLockMap,
    FlatCombiningMap,
    VariantConfig,
    make_variant,
)
from .workload import WorkloadSpec, generate_ops, mix_seed, split_ops, warmup_keys

__version__ = "0.1.0"

__all__ = [
    "ALL_VARIANTS",
    "BenchResult",
    "BisectOracle",
    "ClaimCheck",
    "CoarseLockMap",
    "CombinerEngine",
    "DeadlockError",
    "ENGINE_VARIANTS",
    "EngineStats",
    "FlatCombiningMap",
    "HistoryEvent",
    "HistoryRecorder",
    "LinResult",
    "OPTIONAL_VARIANTS",
    "Op",
    "OpKind",
    "OpResult",
    "OracleMap",
    "RegistrationError",
    "SCENARIOS",
    "ShutdownError",
    "StopWorldScope",
    "StressReport",
    "VariantConfig",
    "WaitStrategy",
    "WorkloadSpec",
    "check_linearizable",
    "emit_csv",
    "evaluate_claims",
    "format_report",
    "generate_ops",
    "illegal_history_catalog",
    "make_variant",
    "mix_seed",
    "parse_csv",
    "replay_sequential",
    "replay_writes",
    "run_bench",
    "run_cell",
    "run_recorded_history",
    "run_scenario",
    "run_stress",
    "split_ops",
    "warmup_keys",
    "__version__",
]
