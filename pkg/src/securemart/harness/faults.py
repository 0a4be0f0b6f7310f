"""Deterministic fault injection at the platform's in-process hop boundaries.

Decisions are pure functions of (seed, hop, crossing index), not of thread
timing: the n-th crossing of a hop always gets the same verdict, so two runs
with one seed drop the same number of messages at each hop even when thread
interleaving differs.
"""

from __future__ import annotations

import hashlib
import json
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Optional, Sequence, Tuple, Union

from ..errors import ValidationError
from ..paygate.gateway import HopDropped

HOPS = ("client-api", "gateway-processor", "processor-issuer")


@dataclass(frozen=True)
class FaultProfile:
    latency_ms: Union[float, Tuple[float, float]] = 0.0
    drop_probability: float = 0.0
    applied_to: Sequence[str] = field(default_factory=tuple)

    def __post_init__(self):
        if not 0.0 <= self.drop_probability <= 1.0:
            raise ValidationError("drop_probability must be within [0, 1]")
        for hop in self.applied_to:
            if hop not in HOPS:
                raise ValidationError(f"unknown hop {hop!r}; expected one of {HOPS}")
        if isinstance(self.latency_ms, (tuple, list)):
            lo, hi = self.latency_ms
            if lo < 0 or hi < lo:
                raise ValidationError("latency range must satisfy 0 <= lo <= hi")
            object.__setattr__(self, "latency_ms", (float(lo), float(hi)))
        elif self.latency_ms < 0:
            raise ValidationError("latency_ms must be >= 0")

    @classmethod
    def from_dict(cls, data: dict) -> "FaultProfile":
        latency = data.get("latency_ms", 0.0)
        if isinstance(latency, list):
            latency = tuple(latency)
        return cls(
            latency_ms=latency,
            drop_probability=float(data.get("drop_probability", 0.0)),
            applied_to=tuple(data.get("applied_to", ())),
        )

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "FaultProfile":
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        if not isinstance(data, dict):
            raise ValidationError("fault profile file must contain a JSON object")
        return cls.from_dict(data)

    def latency_for(self, unit: float) -> float:
        if isinstance(self.latency_ms, tuple):
            lo, hi = self.latency_ms
            return lo + (hi - lo) * unit
        return float(self.latency_ms)


NO_FAULTS = FaultProfile()


def _unit(seed: int, hop: str, index: int, salt: str) -> float:
    digest = hashlib.sha256(f"{seed}|{hop}|{index}|{salt}".encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class FaultInjector:
    """Callable fault hook: sleeps for injected latency, raises HopDropped."""

    def __init__(self, profile: FaultProfile, seed: int, sleeper=time.sleep):
        self.profile = profile
        self.seed = seed
        self._sleep = sleeper
        self._lock = threading.Lock()
        self._crossings: Dict[str, int] = {}

    def __call__(self, hop: str, context: Optional[dict] = None) -> None:
        if hop not in self.profile.applied_to:
            return
        with self._lock:
            index = self._crossings.get(hop, 0)
            self._crossings[hop] = index + 1
        if _unit(self.seed, hop, index, "drop") < self.profile.drop_probability:
            raise HopDropped(hop)
        delay_ms = self.profile.latency_for(_unit(self.seed, hop, index, "latency"))
        if delay_ms > 0:
            self._sleep(delay_ms / 1000.0)

    def crossings(self) -> Dict[str, int]:
        with self._lock:
            return dict(self._crossings)
