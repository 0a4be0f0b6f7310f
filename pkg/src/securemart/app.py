"""Composition root: wires the store, services, and gateway into one platform.

A Platform owns every stateful service and a shared clock, so tests and the
harness can run many isolated platforms side by side, freeze time, or point
one at a persistence file, without any module-level globals.
"""

from __future__ import annotations

import json
import logging
import secrets
import threading
import time
from collections import deque
from typing import Callable, Optional

from .auth import AuthService, IdentityProvider, OtpOutbox, generate_provider_keypair
from .catalog import Catalog
from .config import PlatformConfig
from .kernel import DocumentStore
from .monitor import SecurityMonitor
from .orders import OrderService
from .paygate import PaymentGateway

log = logging.getLogger(__name__)


class RingLogHandler(logging.Handler):
    """Keeps the most recent formatted log lines in memory.

    Exists so hygiene checks can scan everything the platform has logged
    for card numbers, passwords, and codes without touching the filesystem.
    """

    def __init__(self, capacity: int = 10000):
        super().__init__()
        self._lines: deque = deque(maxlen=capacity)
        self._lock_ring = threading.Lock()
        self.setFormatter(logging.Formatter("%(levelname)s %(name)s %(message)s"))

    def emit(self, record: logging.LogRecord) -> None:
        try:
            line = self.format(record)
        except Exception:
            return
        with self._lock_ring:
            self._lines.append(line)

    def lines(self) -> list:
        with self._lock_ring:
            return list(self._lines)


class Platform:
    """Every service, wired together over one document store and one clock."""

    def __init__(
        self,
        config: Optional[PlatformConfig] = None,
        *,
        clock: Callable[[], float] = time.time,
        store: Optional[DocumentStore] = None,
        otp_key: Optional[bytes] = None,
        fault_hook=None,
    ):
        self.config = config if config is not None else PlatformConfig.from_env()
        self.clock = clock
        self.started_at = clock()
        # single swappable hook; the API boundary and the gateway hops both
        # consult it, so the harness can rewire faults mid-run
        self.fault_hook = fault_hook

        self.store = store if store is not None else DocumentStore(self.config.store_path)
        self.monitor = SecurityMonitor(
            threshold=self.config.lockout_threshold,
            window_s=self.config.lockout_window_s,
            lockout_duration_s=self.config.lockout_duration_s,
            clock=clock,
            enabled=self.config.monitoring_enabled,
        )
        self.outbox = OtpOutbox()

        provider_pubkey = self._load_provider_pubkey()
        self.auth = AuthService(
            self.store,
            self.monitor,
            self.outbox,
            self.config,
            clock=clock,
            otp_key=otp_key if otp_key is not None else secrets.token_bytes(32),
            provider_pubkey_pem=provider_pubkey,
        )
        self.catalog = Catalog(self.store)
        self.orders = OrderService(
            self.store, self.catalog, order_ttl_s=self.config.order_ttl_s, clock=clock
        )
        self.gateway = PaymentGateway(
            self.store,
            self.orders,
            clock=clock,
            payment_timeout_s=self.config.payment_timeout_s,
            fault_hook=self.cross_hop,
        )

        self.log_ring = RingLogHandler()
        logging.getLogger("securemart").addHandler(self.log_ring)
        # set by seeds.apply_seed; reset_environment's no-snapshot fallback
        self.seed_snapshot: Optional[str] = None

    def _load_provider_pubkey(self) -> Optional[bytes]:
        """Trusted federated-provider key: from disk if configured, otherwise a
        generated sandbox provider whose private half stays on this platform."""
        self.sandbox_provider: Optional[IdentityProvider] = None
        path = self.config.provider_pubkey_path
        if path:
            with open(path, "rb") as fh:
                return fh.read()
        private_pem, public_pem = generate_provider_keypair()
        self.sandbox_provider = IdentityProvider(private_pem, self.config.provider_issuer)
        return public_pem

    def cross_hop(self, hop: str, context: dict) -> None:
        """Consult the active fault hook before traffic crosses a hop."""
        hook = self.fault_hook
        if hook is not None:
            hook(hop, context)

    # -- lifecycle ----------------------------------------------------------------

    def sweep(self) -> dict:
        """Run every time-based janitor once; returns what each one touched."""
        return {
            "orders_cancelled": self.orders.sweep_stale(),
            "intents_failed": self.gateway.sweep_stale(),
        }

    def store_healthy(self) -> bool:
        try:
            return self.store.ping()
        except Exception:
            return False

    def close(self) -> None:
        logging.getLogger("securemart").removeHandler(self.log_ring)
        self.store.close()

    # -- hygiene surface ------------------------------------------------------------

    def scannable_text(self) -> str:
        """Everything the platform has persisted or logged, as one scannable blob."""
        docs = "\n".join(
            json.dumps(
                {"collection": d.collection, "id": d.id, "revision": d.revision, "body": d.body},
                sort_keys=True,
            )
            for d in self.store.dump()
        )
        parts = [
            docs,
            self.gateway.export_flow_log(),
            self.monitor.export_jsonl(),
            "\n".join(self.log_ring.lines()),
        ]
        return "\n".join(parts)
