"""Deterministic issuer-bank simulator.

The verdict is a pure function of (instrument, amount) given the rule table,
so replays are reproducible.  Rules match on the instrument suffix, mirroring
conventional gateway sandboxes: one suffix declines for insufficient funds,
one times out, one declines do-not-honor, and everything else approves.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from importlib import resources
from typing import Optional


@dataclass(frozen=True)
class IssuerVerdict:
    verdict: str  # approved | declined | timeout
    reason: Optional[str]
    auth_code: Optional[str]


def load_default_rules() -> dict:
    raw = resources.files("securemart.fixtures").joinpath("issuer_rules.json").read_text()
    return json.loads(raw)


class IssuerSimulator:
    def __init__(self, rules: Optional[dict] = None):
        table = rules if rules is not None else load_default_rules()
        self.rules: list[dict] = table["rules"]
        self.default: dict = table.get("default", {"verdict": "approved"})

    def decide(self, instrument: str, amount: int) -> IssuerVerdict:
        rule = self.default
        for candidate in self.rules:
            if instrument.endswith(candidate["suffix"]):
                rule = candidate
                break
        verdict = rule["verdict"]
        if verdict == "approved":
            return IssuerVerdict("approved", None, self._auth_code(instrument, amount))
        if verdict == "timeout":
            return IssuerVerdict("timeout", rule.get("reason", "issuer_timeout"), None)
        return IssuerVerdict("declined", rule.get("reason", "declined"), None)

    @staticmethod
    def _auth_code(instrument: str, amount: int) -> str:
        return hashlib.sha256(f"{instrument}|{amount}".encode()).hexdigest()[:8].upper()
