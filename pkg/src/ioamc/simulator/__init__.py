"""Discrete-event simulation of Sporadic Servers and PIBS."""

from .engine import Engine, run
from .replenish import (
    BudgetError, MergePolicy, PibsState, ReplenishmentItem, ReplenishmentQueue,
    hi_server_adjust, lo_server_adjust, pibs_post, ss_consume_post,
)
from .scenarios import SCENARIOS, replay
from .trace import Event, JobRecord, SimTrace, check_trace, max_window_execution
from .workload import (
    InterruptStream, JobSpec, RawInterrupt, SimConfig, Workload, WorkloadError,
)

__all__ = [
    "BudgetError", "Engine", "Event", "InterruptStream", "JobRecord", "JobSpec",
    "MergePolicy", "PibsState", "RawInterrupt", "ReplenishmentItem",
    "ReplenishmentQueue", "SCENARIOS", "SimConfig", "SimTrace", "Workload",
    "WorkloadError", "check_trace", "hi_server_adjust", "lo_server_adjust",
    "max_window_execution", "pibs_post", "replay", "run", "ss_consume_post",
]
