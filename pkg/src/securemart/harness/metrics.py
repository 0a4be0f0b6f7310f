"""Shared report shape every harness run produces.

Each field is derived from raw step or event logs kept alongside the
report, so an independent recount can always reproduce the numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional


@dataclass
class MetricsReport:
    avg_navigation_time_s: float = 0.0
    transaction_completion_time_s: float = 0.0
    user_error_rate_pct: float = 0.0
    unauthorized_attempts: int = 0
    successful_breaches: int = 0
    lockouts: int = 0
    throughput_rps: float = 0.0
    p95_latency_ms: float = 0.0
    notes: str = ""
    context: Dict[str, Any] = field(default_factory=dict)
    # raw per-step / per-event material the numbers were derived from;
    # excluded from serialized output, used by recount oracles
    raw: Optional[Dict[str, Any]] = None

    def as_dict(self) -> dict:
        return {
            "avg_navigation_time_s": round(self.avg_navigation_time_s, 4),
            "transaction_completion_time_s": round(self.transaction_completion_time_s, 4),
            "user_error_rate_pct": round(self.user_error_rate_pct, 4),
            "unauthorized_attempts": self.unauthorized_attempts,
            "successful_breaches": self.successful_breaches,
            "lockouts": self.lockouts,
            "throughput_rps": round(self.throughput_rps, 4),
            "p95_latency_ms": round(self.p95_latency_ms, 4),
            "notes": self.notes,
            "context": self.context,
        }

    def as_text(self) -> str:
        lines = []
        if self.context:
            pairs = "  ".join(f"{k}={v}" for k, v in sorted(self.context.items()))
            lines.append(pairs)
        lines += [
            f"avg navigation time      {self.avg_navigation_time_s:10.2f} s",
            f"transaction completion   {self.transaction_completion_time_s:10.2f} s",
            f"user error rate          {self.user_error_rate_pct:10.2f} %",
            f"unauthorized attempts    {self.unauthorized_attempts:10d}",
            f"successful breaches      {self.successful_breaches:10d}",
            f"lockouts                 {self.lockouts:10d}",
            f"throughput               {self.throughput_rps:10.2f} rps",
            f"p95 latency              {self.p95_latency_ms:10.2f} ms",
        ]
        if self.notes:
            lines.append(self.notes)
        return "\n".join(lines)


def percentile(samples: list, q: float) -> float:
    """Nearest-rank percentile; 0 for an empty sample set."""
    if not samples:
        return 0.0
    ordered = sorted(samples)
    # q*n before the divide: 90*10/100 must rank 9, not drift to 10
    rank = min(len(ordered), max(1, math.ceil(q * len(ordered) / 100.0)))
    return float(ordered[rank - 1])
