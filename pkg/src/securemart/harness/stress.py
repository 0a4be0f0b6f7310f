"""Concurrent load drill gating on the platform's safety invariants.

Sessions hammer the buy path in parallel while faults drop hops at a seeded
rate.  Stock is deliberately short of total demand so the oversell guard is
under real contention.  The drill is deterministic in its counts: demand per
product is fixed by the seed, stock never returns mid-run (failed payments
park orders in AwaitingPayment until the post-run sweep), and fault decisions
depend only on (seed, hop, crossing index), so which session absorbs a drop
varies with scheduling but how many drop does not.

Wall-clock duration is translated into a per-session journey budget (one
journey per nominal second); a literal timer would tie outcome counts to
machine speed and break run-to-run comparison.
"""

from __future__ import annotations

import hashlib
import threading
import time
from collections import Counter
from typing import Dict, List, Optional

from ..api import ApiService
from ..app import Platform
from ..config import FAST_HASH_OVERRIDES, PlatformConfig
from ..errors import InvariantViolation
from ..orders import ACTIVE_STATUSES, LEGAL_TRANSITIONS
from ..paygate.gateway import INITIATED, INTENT_TRANSITIONS, TERMINAL_STATUSES
from .client import ApiClient
from .faults import NO_FAULTS, FaultInjector, FaultProfile
from .metrics import MetricsReport, percentile

JOURNEYS_PER_SECOND = 1.0
STOCK_FRACTION = 0.6   # of total demand; shortage is the point
N_PRODUCTS = 3

# api error codes that are an injected fault surfacing, not a defect
EXPECTED_FAULT_CODES = frozenset({"transport_dropped"})


class _OffsetClock:
    """Wall clock plus an adjustable offset, to age records for the sweep."""

    def __init__(self) -> None:
        self.offset = 0.0

    def __call__(self) -> float:
        return time.time() + self.offset

    def advance(self, seconds: float) -> None:
        self.offset += seconds


def _unit(seed: int, *parts) -> float:
    key = "|".join(str(p) for p in (seed,) + parts)
    digest = hashlib.sha256(key.encode()).digest()
    return int.from_bytes(digest[:8], "big") / 2**64


class _Session(threading.Thread):
    def __init__(self, index: int, api: ApiService, picks: List[int],
                 product_ids: List[str], seed: int, barrier: threading.Barrier):
        super().__init__(name=f"stress-{index}", daemon=True)
        self.index = index
        self.client = ApiClient(api, remote_addr=f"10.2.{index // 200}.{index % 200 + 1}")
        self.picks = picks
        self.product_ids = product_ids
        self.seed = seed
        self.barrier = barrier
        self.outcomes: Counter = Counter()
        self.latencies_ms: List[float] = []
        self.defects: List[str] = []

    def _call(self, verb: str, path: str, body: Optional[dict] = None):
        t0 = time.perf_counter()
        response = self.client.call(verb, path, body)
        self.latencies_ms.append((time.perf_counter() - t0) * 1000.0)
        if response.status >= 500 and response.body.get("error_code") not in EXPECTED_FAULT_CODES:
            self.defects.append(
                f"session {self.index}: {verb} {path} -> {response.status} {response.body}"
            )
        return response

    def run(self) -> None:
        self.barrier.wait()
        for j in range(len(self.picks)):
            try:
                self._journey(j)
            except Exception as exc:  # a journey must never take the thread down
                self.defects.append(f"session {self.index} journey {j}: {exc!r}")
                self.outcomes["errored"] += 1

    def _journey(self, j: int) -> None:
        product_id = self.product_ids[self.picks[j]]
        added = self._call("POST", "/api/cart/items", {"product_id": product_id, "qty": 1})
        if not added.ok:
            self.outcomes["cart_rejected"] += 1
            self._call("DELETE", "/api/cart")
            return

        order = self._call("POST", "/api/checkout")
        if not order.ok:
            code = order.body.get("error_code", "")
            if code == "insufficient_stock":
                self.outcomes["checkout_sold_out"] += 1
            elif code in EXPECTED_FAULT_CODES:
                self.outcomes["client_dropped"] += 1
            else:
                self.outcomes["checkout_rejected"] += 1
            self._call("DELETE", "/api/cart")
            return

        intent = self._call("POST", "/api/payments/intent", {
            "order_id": order.body["id"],
            "amount": order.body["total"],
            "method": "wallet",
            "idempotency_key": f"stress-{self.seed}-{self.index}-{j}",
        })
        if not intent.ok:
            self.outcomes["intent_rejected"] += 1
            return
        token = self._call("POST", "/dev/wallet/tokens", {"amount": order.body["total"]})
        if not token.ok:
            self.outcomes["wallet_rejected"] += 1
            return
        paid = self._call("POST", "/api/payments/wallet", {
            "intent_id": intent.body["intent_id"],
            "wallet_token": token.body["token"],
        })
        if not paid.ok:
            code = paid.body.get("error_code", "")
            key = "client_dropped" if code in EXPECTED_FAULT_CODES else "pay_rejected"
            self.outcomes[key] += 1
            return
        status = paid.body["status"]
        if status == "Approved":
            self.outcomes["approved"] += 1
        elif status == "Failed":
            self.outcomes["transport_failed"] += 1
        else:
            self.outcomes["declined"] += 1


def _check_invariants(platform: Platform, initial_stock: Dict[str, int],
                      defects: List[str]) -> List[str]:
    violations = list(defects)

    stock_now: Dict[str, int] = {}
    for doc in platform.store.list("products"):
        stock_now[doc.id] = doc.body["stock"]
        if doc.body["stock"] < 0:
            violations.append(f"negative stock on {doc.id}: {doc.body['stock']}")

    # conservation: what left the shelf is exactly what active orders hold
    held: Dict[str, int] = {pid: 0 for pid in initial_stock}
    for doc in platform.store.list("orders"):
        status = doc.body["status"]
        if status in ACTIVE_STATUSES:
            for line in doc.body["lines"]:
                held[line["product_id"]] = held.get(line["product_id"], 0) + line["qty"]
        trail = [h["status"] for h in doc.body["history"]]
        if trail[0] != "Draft":
            violations.append(f"order {doc.id} history starts at {trail[0]}")
        for a, b in zip(trail, trail[1:]):
            if b not in LEGAL_TRANSITIONS.get(a, frozenset()):
                violations.append(f"order {doc.id} illegal transition {a}->{b}")
    for pid, initial in initial_stock.items():
        if stock_now.get(pid, 0) + held.get(pid, 0) != initial:
            violations.append(
                f"conservation broken on {pid}: "
                f"{stock_now.get(pid)} on shelf + {held.get(pid)} held != {initial}"
            )

    for doc in platform.store.list("payment_intents"):
        if doc.body["status"] not in TERMINAL_STATUSES:
            violations.append(f"intent {doc.id} non-terminal after sweep: {doc.body['status']}")
        path = [INITIATED] + platform.gateway.status_trail(doc.id)
        for a, b in zip(path, path[1:]):
            if b not in INTENT_TRANSITIONS.get(a, frozenset()):
                violations.append(f"intent {doc.id} illegal transition {a}->{b}")
    return violations


def stress(load: dict, fault: FaultProfile = NO_FAULTS, seed: int = 7) -> MetricsReport:
    """Drive concurrent buy sessions; raise InvariantViolation on any breach."""
    sessions = int(load["concurrent_sessions"])
    duration_s = float(load["duration_s"])
    budget = max(1, round(duration_s * JOURNEYS_PER_SECOND))

    started = time.perf_counter()
    clock = _OffsetClock()
    injector = FaultInjector(fault, seed)
    config = PlatformConfig(
        otp_required_for_login=False,
        otp_required_for_payment=False,
        sandbox=True,
        **FAST_HASH_OVERRIDES,
    )
    platform = Platform(config, clock=clock, fault_hook=injector)
    try:
        picks = [[int(_unit(seed, "pick", i, j) * N_PRODUCTS) for j in range(budget)]
                 for i in range(sessions)]
        demand = Counter(p for row in picks for p in row)

        admin = platform.auth.register("ops@stress.test", "stress-admin-pass", role="admin")
        category = platform.catalog.create_category(admin, "Load Test")
        product_ids: List[str] = []
        initial_stock: Dict[str, int] = {}
        for p in range(N_PRODUCTS):
            stock = max(1, int(demand.get(p, 0) * STOCK_FRACTION))
            product = platform.catalog.create_product(admin, {
                "name": f"Load Item {p}",
                "category_id": category.id,
                "unit_price": 700 + 100 * p,
                "stock": stock,
            })
            product_ids.append(product.id)
            initial_stock[product.id] = stock

        api = ApiService(platform)
        workers = []
        barrier = threading.Barrier(sessions)
        for i in range(sessions):
            worker = _Session(i, api, picks[i], product_ids, seed, barrier)
            response = worker.client.register(f"load{i}@stress.test", f"stress-pass-{i:04d}")
            if response.status != 201:
                raise RuntimeError(f"stress setup register failed: {response.body}")
            login = worker.client.login(f"load{i}@stress.test", f"stress-pass-{i:04d}")
            if not login.ok:
                raise RuntimeError(f"stress setup login failed: {login.body}")
            workers.append(worker)

        for worker in workers:
            worker.start()
        for worker in workers:
            worker.join()
        elapsed = time.perf_counter() - started

        # quiesce: age everything past its deadline, then run the janitors
        clock.advance(max(config.payment_timeout_s, config.order_ttl_s) + 60.0)
        swept = {key: len(ids) for key, ids in platform.sweep().items()}

        outcomes: Counter = Counter()
        latencies: List[float] = []
        defects: List[str] = []
        for worker in workers:
            outcomes.update(worker.outcomes)
            latencies.extend(worker.latencies_ms)
            defects.extend(worker.defects)

        violations = _check_invariants(platform, initial_stock, defects)
        if violations:
            raise InvariantViolation("; ".join(violations[:10]))

        return MetricsReport(
            throughput_rps=len(latencies) / elapsed if elapsed > 0 else 0.0,
            p95_latency_ms=percentile(latencies, 95.0),
            notes=(
                f"{sessions} sessions x {budget} journeys, "
                f"drop_probability {fault.drop_probability}: "
                f"{outcomes.get('approved', 0)} approved, "
                f"{outcomes.get('transport_failed', 0)} transport-failed, "
                f"{outcomes.get('checkout_sold_out', 0)} sold out; zero invariant violations"
            ),
            context={
                "concurrent_sessions": sessions,
                "duration_s": duration_s,
                "journeys_per_session": budget,
                "seed": seed,
                "outcomes": dict(sorted(outcomes.items())),
                "swept": swept,
                "hop_crossings": injector.crossings(),
                "initial_stock": initial_stock,
            },
            raw={"latencies_ms": latencies},
        )
    finally:
        platform.close()
