"""Credential-stuffing simulation measuring what monitoring prevents.

The attacker replays a breached credential dump against sandbox accounts
from one source address, on a compressed virtual timeline.  Per account the
dump holds a mix of still-valid and stale passwords; with monitoring off
every still-valid row eventually logs in, with monitoring on the account
locks at the fifth evaluated failure and everything after is refused.

The on/off breach ratio this mechanism produces is the reproduced claim;
absolute counts depend only on the dump mix, not on any real-world rate.
"""

from __future__ import annotations

import hashlib
import time
from dataclasses import replace
from importlib import resources
from typing import List, Optional, Tuple

from ..api import ApiService
from ..app import Platform
from ..config import FAST_HASH_OVERRIDES, PlatformConfig
from .client import ApiClient
from .clock import SimClock
from .metrics import MetricsReport

ATTACK_ADDR = "203.0.113.66"
ATTACK_TAG = "attack"

ATTEMPTS_PER_ACCOUNT = 40
CURRENT_PER_ACCOUNT = 18       # rows in the dump that still match
ATTEMPT_SPACING_S = 45.0       # per-account pacing on the virtual timeline
ACCOUNT_STAGGER_S = 1.8


def load_leaked_passwords() -> List[str]:
    raw = resources.files("securemart.fixtures").joinpath("leaked_passwords.txt").read_text()
    return [line.strip() for line in raw.splitlines()
            if line.strip() and not line.startswith("#")]


def _unit(seed: int, *parts) -> float:
    key = "|".join(str(p) for p in (seed,) + parts)
    digest = hashlib.sha256(key.encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


def _account_plan(seed: int, k: int, n_rows: int, n_current: int) -> List[bool]:
    """Per-account attempt sequence: True = still-valid password, False = stale.

    Valid rows are spread quasi-evenly through the sequence (a jittered
    stride), the way a sorted credential dump interleaves hits and misses.
    """
    if n_current >= n_rows:
        return [True] * n_rows
    offset = _unit(seed, "plan", k)
    slots = {int((i + offset) * n_rows / n_current) for i in range(n_current)}
    return [i in slots for i in range(n_rows)]


def build_schedule(n_attempts: int, seed: int) -> List[Tuple[float, int, bool]]:
    """Global attempt timeline: (virtual_time, account_index, row_is_valid)."""
    schedule: List[Tuple[float, int, bool]] = []
    k = 0
    remaining = n_attempts
    while remaining > 0:
        rows = min(ATTEMPTS_PER_ACCOUNT, remaining)
        current = max(1, round(CURRENT_PER_ACCOUNT * rows / ATTEMPTS_PER_ACCOUNT))
        plan = _account_plan(seed, k, rows, current)
        for j, is_valid in enumerate(plan):
            t = k * ACCOUNT_STAGGER_S + j * ATTEMPT_SPACING_S
            schedule.append((t, k, is_valid))
        remaining -= rows
        k += 1
    schedule.sort(key=lambda item: (item[0], item[1]))
    return schedule


def _build_platform(monitoring_enabled: bool, clock: SimClock) -> Platform:
    config = PlatformConfig(
        # breach = attacker holds a working session; the password is the
        # factor under attack here, so the login OTP gate is off for this
        # experiment and exercised by its own suite
        otp_required_for_login=False,
        otp_required_for_payment=False,
        monitoring_enabled=monitoring_enabled,
        sandbox=True,
        **FAST_HASH_OVERRIDES,
    )
    return Platform(config, clock=clock)


def attack_sim(
    n_attempts: int = 1000,
    monitoring_enabled: bool = True,
    seed: int = 7,
) -> MetricsReport:
    """Run one credential-stuffing arm and report what the monitor saw."""
    started = time.perf_counter()
    clock = SimClock()
    platform = _build_platform(monitoring_enabled, clock)
    try:
        passwords = load_leaked_passwords()
        schedule = build_schedule(n_attempts, seed)
        n_accounts = 1 + max((k for _, k, _ in schedule), default=-1)

        setup = ApiClient(ApiService(platform), remote_addr="10.0.0.2")
        victims = []
        for k in range(n_accounts):
            email = f"victim{k}@mail.test"
            password = passwords[k % len(passwords)]
            response = setup.register(email, password)
            if response.status != 201:
                raise RuntimeError(f"victim setup failed: {response.body}")
            victims.append((email, password))

        attacker = ApiClient(ApiService(platform), remote_addr=ATTACK_ADDR, tag=ATTACK_TAG)
        report_start = clock() + 1.0
        clock.advance(2.0)
        t0 = clock()

        outcomes = {"success": 0, "failure": 0, "blocked": 0}
        for t, k, is_valid in schedule:
            clock.set(t0 + t)
            email, password = victims[k]
            if not is_valid:
                # stale row: derive a wrong guess that is never the real one
                idx = int(_unit(seed, "stale", k, t) * len(passwords))
                guess = passwords[idx]
                if guess == password:
                    guess = guess + "-old"
                password = guess
            response = attacker.call("POST", "/api/auth/login", {
                "email": email, "password": password,
            })
            attacker.token = None  # each stuffing attempt is independent
            if response.ok:
                outcomes["success"] += 1
            elif response.status == 423:
                outcomes["blocked"] += 1
            else:
                outcomes["failure"] += 1

        summary = platform.monitor.security_report(report_start, clock() + 1.0)
        elapsed = time.perf_counter() - started
        label = "on" if monitoring_enabled else "off"
        return MetricsReport(
            unauthorized_attempts=summary.unauthorized_attempts,
            successful_breaches=summary.successful_breaches,
            lockouts=summary.lockouts,
            throughput_rps=len(schedule) / elapsed if elapsed > 0 else 0.0,
            notes=(
                f"credential stuffing, monitoring {label}: "
                f"{outcomes['success']} logins, {outcomes['failure']} rejected, "
                f"{outcomes['blocked']} refused while locked"
            ),
            context={
                "monitoring": label,
                "n_attempts": n_attempts,
                "seed": seed,
                "accounts": n_accounts,
                "outcomes": outcomes,
            },
            raw={"events": [ev.as_record() for ev in platform.monitor.events()]},
        )
    finally:
        platform.close()


def table2(seed: int = 7, n_attempts: int = 1000) -> dict:
    """Both arms plus the on/off breach ratio (the reproduced security claim)."""
    off = attack_sim(n_attempts, monitoring_enabled=False, seed=seed)
    on = attack_sim(n_attempts, monitoring_enabled=True, seed=seed)
    ratio = (on.successful_breaches / off.successful_breaches
             if off.successful_breaches else 0.0)
    return {
        "monitoring_off": off,
        "monitoring_on": on,
        "breach_ratio": ratio,
        "target_ratio": 5 / 23,
    }


def render_table2(result: dict) -> str:
    off = result["monitoring_off"]
    on = result["monitoring_on"]
    lines = [
        "security monitoring: credential-stuffing outcomes",
        f"{'':28s}{'monitoring off':>16s}{'monitoring on':>16s}",
        f"{'unauthorized attempts':28s}{off.unauthorized_attempts:>16d}{on.unauthorized_attempts:>16d}",
        f"{'successful breaches':28s}{off.successful_breaches:>16d}{on.successful_breaches:>16d}",
        f"{'lockouts':28s}{off.lockouts:>16d}{on.lockouts:>16d}",
        "",
        f"breach ratio on/off: {result['breach_ratio']:.4f}"
        f"  (target {result['target_ratio']:.4f})",
    ]
    return "\n".join(lines)
