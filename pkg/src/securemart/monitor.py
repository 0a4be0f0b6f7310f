"""Real-time monitoring of authentication activity with automated lockout.

Failed login / OTP attempts are tracked per principal key — the normalized
``(email, client_addr)`` pair — in a sliding window.  Once the window holds
``threshold`` failures, the key is locked out for ``lockout_duration_s`` and a
``lockout_triggered`` event is appended.  Release is inclusive: a check at
exactly ``locked_until`` is allowed again.

The event log is append-only and never contains passwords or OTP codes.
``security_report`` derives its counters purely from that log, so an
independent recount over the raw events must always agree with it.
"""

from __future__ import annotations

import json
import threading
import time
from collections import deque
from dataclasses import dataclass, field
from typing import Callable, Optional

FAILURE_KINDS = frozenset({"login_failure", "otp_failure"})
EVENT_KINDS = FAILURE_KINDS | {"login_success", "lockout_triggered", "session_revoked"}

# harness-tagged sessions carry this detail label; report counts them as breaches
ATTACK_LABEL = "attack"


@dataclass(frozen=True)
class AuthEvent:
    timestamp: float
    kind: str
    email: str
    client_addr: str
    detail: str = ""

    def as_record(self) -> dict:
        return {
            "timestamp": self.timestamp,
            "kind": self.kind,
            "email": self.email,
            "client_addr": self.client_addr,
            "detail": self.detail,
        }


@dataclass
class LockoutState:
    locked_until: float = 0.0
    failures: deque = field(default_factory=deque)  # failure timestamps in window


@dataclass(frozen=True)
class SecuritySummary:
    unauthorized_attempts: int
    successful_breaches: int
    lockouts: int

    def as_dict(self) -> dict:
        return {
            "unauthorized_attempts": self.unauthorized_attempts,
            "successful_breaches": self.successful_breaches,
            "lockouts": self.lockouts,
        }


def principal_key(email: str, client_addr: str) -> tuple[str, str]:
    return (email.strip().lower(), client_addr.strip())


class SecurityMonitor:
    """Append-only auth event log plus per-principal lockout decisions."""

    def __init__(
        self,
        threshold: int = 5,
        window_s: float = 900.0,
        lockout_duration_s: float = 1800.0,
        clock: Callable[[], float] = time.time,
        enabled: bool = True,
    ):
        self.threshold = threshold
        self.window_s = window_s
        self.lockout_duration_s = lockout_duration_s
        self.clock = clock
        self.enabled = enabled
        self._lock = threading.Lock()
        self._events: list[AuthEvent] = []
        self._states: dict[tuple[str, str], LockoutState] = {}

    # -- recording -------------------------------------------------------------

    def record(
        self,
        kind: str,
        email: str,
        client_addr: str,
        detail: str = "",
        at: Optional[float] = None,
    ) -> None:
        """Append an event; on a failure kind, update the window and maybe lock."""
        if kind not in EVENT_KINDS:
            raise ValueError(f"unknown auth event kind: {kind}")
        now = self.clock() if at is None else at
        key = principal_key(email, client_addr)
        with self._lock:
            self._events.append(AuthEvent(now, kind, key[0], key[1], detail))
            if not (self.enabled and kind in FAILURE_KINDS):
                return
            state = self._states.setdefault(key, LockoutState())
            state.failures.append(now)
            cutoff = now - self.window_s
            while state.failures and state.failures[0] < cutoff:
                state.failures.popleft()
            if len(state.failures) >= self.threshold:
                until = now + self.lockout_duration_s
                if until > state.locked_until:  # locked_until only moves forward
                    state.locked_until = until
                self._events.append(
                    AuthEvent(now, "lockout_triggered", key[0], key[1],
                              f"until={state.locked_until:.3f}")
                )

    # -- decisions ----------------------------------------------------------------

    def check_allowed(self, email: str, client_addr: str, now: Optional[float] = None) -> dict:
        """{'allowed': True} or {'allowed': False, 'locked_until': ts}."""
        if not self.enabled:
            return {"allowed": True}
        now = self.clock() if now is None else now
        key = principal_key(email, client_addr)
        with self._lock:
            state = self._states.get(key)
            if state is None or now >= state.locked_until:
                return {"allowed": True}
            return {"allowed": False, "locked_until": state.locked_until}

    # -- reporting ------------------------------------------------------------------

    def security_report(
        self,
        start: float = float("-inf"),
        end: float = float("inf"),
    ) -> SecuritySummary:
        with self._lock:
            events = list(self._events)
        attempts = breaches = lockouts = 0
        for ev in events:
            if not (start <= ev.timestamp <= end):
                continue
            if ev.kind in FAILURE_KINDS:
                attempts += 1
            elif ev.kind == "lockout_triggered":
                lockouts += 1
            elif ev.kind == "login_success" and ev.detail == ATTACK_LABEL:
                breaches += 1
        return SecuritySummary(attempts, breaches, lockouts)

    # -- introspection ---------------------------------------------------------------

    def events(self) -> list[AuthEvent]:
        with self._lock:
            return list(self._events)

    def export_jsonl(self) -> str:
        return "\n".join(json.dumps(ev.as_record(), separators=(",", ":"))
                         for ev in self.events())

    def recent_lockouts(self, limit: int = 20) -> list[dict]:
        """Latest lockout events, newest first (admin dashboard feed)."""
        out = [ev.as_record() for ev in self.events() if ev.kind == "lockout_triggered"]
        return list(reversed(out))[:limit]

    def reset(self) -> None:
        """Drop all events and lockout state (harness environment reset)."""
        with self._lock:
            self._events.clear()
            self._states.clear()
