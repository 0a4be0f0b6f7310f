"""Scenario runner, metrics reports, fault injection, and load/attack drills.

Everything in here drives the platform through its public API surface; the
only back doors are snapshot/restore on the document store and the runtime
caches that must be flushed so a rerun from the same snapshot behaves
identically.
"""

from __future__ import annotations

from typing import Optional

from ..app import Platform
from .attack import attack_sim, render_table2, table2
from .clock import SimClock
from .faults import HOPS, NO_FAULTS, FaultInjector, FaultProfile
from .journeys import journey_metrics, render_table1, table1
from .metrics import MetricsReport
from .scenarios import Scenario, ScenarioResult, StepFailed, StepRecord, run_scenario
from .stress import stress

__all__ = [
    "HOPS",
    "NO_FAULTS",
    "FaultInjector",
    "FaultProfile",
    "MetricsReport",
    "Scenario",
    "ScenarioResult",
    "SimClock",
    "StepFailed",
    "StepRecord",
    "attack_sim",
    "journey_metrics",
    "render_table1",
    "render_table2",
    "reset_environment",
    "run_scenario",
    "stress",
    "table1",
    "table2",
]


def reset_environment(platform: Platform, snapshot: Optional[str] = None) -> None:
    """Restore the platform to a known snapshot and flush runtime state.

    ``snapshot`` defaults to the seed snapshot taken when the platform was
    seeded.  Without either, the store is emptied.  Runtime caches that sit
    outside the document store (idempotency registry, flow log, nonce set,
    OTP outbox, monitor windows) are cleared as well so that two runs from
    the same snapshot and seed cannot see each other.
    """
    handle = snapshot or platform.seed_snapshot
    if handle is not None:
        platform.store.restore(handle)
    else:
        for doc in platform.store.dump():
            platform.store.delete(doc.collection, doc.id)
    platform.outbox.clear()
    platform.gateway.reset_runtime_state()
    platform.monitor.reset()
