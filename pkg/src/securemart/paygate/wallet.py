"""Sandbox wallet simulator (the local analog of a hosted wallet service).

The simulator vouches for the payment instrument: it issues short-lived
tokens bound to (amount, currency), and the platform never sees a PAN on the
wallet path.  Token state lives inside the simulator only, as it would on a
provider's servers.
"""

from __future__ import annotations

import secrets
import threading
import time
from typing import Callable, Optional

from ..errors import PayloadMismatch, WalletTokenExpired, WalletTokenInvalid

DEFAULT_TTL_S = 600.0


class WalletSimulator:
    def __init__(self, clock: Callable[[], float] = time.time):
        self.clock = clock
        self._lock = threading.Lock()
        self._tokens: dict[str, dict] = {}

    def issue_token(self, amount: int, currency: str = "USD",
                    ttl_s: float = DEFAULT_TTL_S) -> dict:
        token = "wsim_" + secrets.token_urlsafe(24)
        entry = {
            "token": token,
            "instrument": f"wallet:{secrets.token_hex(6)}",
            "amount": amount,
            "currency": currency,
            "expires_at": self.clock() + ttl_s,
        }
        with self._lock:
            self._tokens[token] = entry
        return {k: entry[k] for k in ("token", "amount", "currency", "expires_at")}

    def redeem(self, token: str, amount: int, currency: str = "USD") -> str:
        """Validate the token binding and return the vouched instrument ref."""
        with self._lock:
            entry = self._tokens.get(token)
        if entry is None:
            raise WalletTokenInvalid("unknown wallet token")
        if self.clock() >= entry["expires_at"]:
            raise WalletTokenExpired("wallet token expired")
        if entry["amount"] != amount or entry["currency"] != currency:
            raise PayloadMismatch("wallet token bound to a different amount")
        return entry["instrument"]

    def clear(self) -> None:
        with self._lock:
            self._tokens.clear()
