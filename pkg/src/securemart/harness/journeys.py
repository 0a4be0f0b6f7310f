"""Shopper-journey metrics under calibrated step-latency profiles.

Every simulated shopper drives a real purchase through the API (register,
login, search, cart, checkout, pay), which grounds the flow: the steps being
timed are steps the platform actually executes.  The reported times come
from a per-step latency model, not wall clock, because the thing measured
(a human working through fewer or more pages, with fewer or more chances to
mistype) does not exist in-process.  Each profile's step means and error
rate are calibration constants chosen to land on previously published field
measurements for the legacy and streamlined flows; reports say so.
"""

from __future__ import annotations

import json
import random
import time
from importlib import resources
from typing import Dict, List

from ..api import ApiService
from ..app import Platform
from ..config import FAST_HASH_OVERRIDES, PlatformConfig
from ..errors import UnknownProfile
from .client import ApiClient
from .clock import SimClock
from .metrics import MetricsReport, percentile

MODEL_NOTE = (
    "calibrated simulation: step latencies and error rates are model "
    "constants tuned to previously published measurements of the legacy "
    "and streamlined flows, not new empirical claims"
)


def load_profiles() -> dict:
    raw = resources.files("securemart.fixtures").joinpath("profiles.json").read_text()
    return json.loads(raw)


def _build_platform(clock: SimClock) -> Platform:
    config = PlatformConfig(
        otp_required_for_login=False,
        otp_required_for_payment=False,
        sandbox=True,
        **FAST_HASH_OVERRIDES,
    )
    return Platform(config, clock=clock)


def _seed_catalog(platform: Platform, stock: int) -> List[str]:
    admin = platform.auth.register("ops@journeys.test", "journeys-admin-pass", role="admin")
    category = platform.catalog.create_category(admin, "Essentials")
    names = [("Ceramic Mug", 1250), ("Desk Lamp", 3400), ("Notebook", 650)]
    ids = []
    for name, price in names:
        product = platform.catalog.create_product(admin, {
            "name": name,
            "category_id": category.id,
            "unit_price": price,
            "stock": stock,
        })
        ids.append(product.id)
    return ids


def _purchase(client: ApiClient, product_id: str, method: str,
              idempotency_key: str, latencies_ms: List[float]) -> str:
    """One real end-to-end purchase; returns the final order status."""
    def call(verb, path, body=None, query=None):
        t0 = time.perf_counter()
        response = client.call(verb, path, body, query=query or {})
        latencies_ms.append((time.perf_counter() - t0) * 1000.0)
        if not response.ok:
            raise RuntimeError(f"journey call {verb} {path} failed: {response.body}")
        return response.body

    found = call("GET", "/api/products/search", query={"q": ""})
    if not any(p["id"] == product_id for p in found["products"]):
        raise RuntimeError(f"seeded product {product_id} missing from search")
    call("POST", "/api/cart/items", {"product_id": product_id, "qty": 1})
    order = call("POST", "/api/checkout")
    intent = call("POST", "/api/payments/intent", {
        "order_id": order["id"],
        "amount": order["total"],
        "method": method,
        "idempotency_key": idempotency_key,
    })
    if method == "wallet":
        token = call("POST", "/dev/wallet/tokens", {"amount": order["total"]})
        result = call("POST", "/api/payments/wallet", {
            "intent_id": intent["intent_id"],
            "wallet_token": token["token"],
        })
    else:
        envelope = client.seal_card_payload({
            "order_id": order["id"],
            "amount": order["total"],
            "currency": "USD",
            "pan": "4242424242424242",
            "expiry_month": 12,
            "expiry_year": 2031,
            "cvv": "123",
        })
        result = call("POST", "/api/payments/submit", {
            "intent_id": intent["intent_id"],
            "envelope": envelope,
        })
    if result["status"] != "Approved":
        raise RuntimeError(f"journey payment not approved: {result}")
    final = call("GET", f"/api/orders/{order['id']}")
    return final["status"]


def journey_metrics(config_profile: str, n_users: int = 200, seed: int = 7) -> MetricsReport:
    """Simulate ``n_users`` scripted shoppers through one flow profile."""
    profiles = load_profiles()
    if config_profile not in profiles:
        raise UnknownProfile(f"unknown journey profile {config_profile!r}")
    profile = profiles[config_profile]

    nav_steps = profile["navigation_steps"]
    checkout_steps = profile["checkout_steps"]
    steps_per_user = len(nav_steps) + len(checkout_steps)
    total_slots = n_users * steps_per_user
    n_errors = round(profile["error_rate_pct"] / 100.0 * total_slots)

    rng = random.Random(f"journeys|{config_profile}|{seed}|{n_users}")
    error_slots = frozenset(rng.sample(range(total_slots), n_errors))
    jitter = profile["jitter"]
    penalty = profile["error_penalty_s"]

    started = time.perf_counter()
    clock = SimClock()
    platform = _build_platform(clock)
    try:
        product_ids = _seed_catalog(platform, stock=n_users + 10)
        api = ApiService(platform)

        users = []
        latencies_ms: List[float] = []
        nav_total = 0.0
        txn_total = 0.0
        for i in range(n_users):
            clock.advance(1.0)
            # the grounding purchase: this shopper really buys something
            client = ApiClient(api, remote_addr=f"10.1.{i // 200}.{i % 200 + 1}")
            email = f"shopper{i}@journeys.test"
            response = client.register(email, f"journey-pass-{i:04d}")
            if response.status != 201:
                raise RuntimeError(f"journey register failed: {response.body}")
            response = client.login(email, f"journey-pass-{i:04d}")
            if not response.ok:
                raise RuntimeError(f"journey login failed: {response.body}")
            status = _purchase(
                client,
                product_ids[i % len(product_ids)],
                profile["payment_method"],
                f"jm-{config_profile}-{seed}-{i}",
                latencies_ms,
            )
            if status != "Paid":
                raise RuntimeError(f"journey order ended {status}, expected Paid")

            # the timing model: per-step means, uniform jitter, a fixed
            # retry penalty whenever this slot drew an injected user error
            nav_s, nav_errors = 0.0, 0
            for j, step in enumerate(nav_steps):
                nav_s += step["mean_s"] * (1.0 + jitter * rng.uniform(-1.0, 1.0))
                if i * steps_per_user + j in error_slots:
                    nav_s += penalty
                    nav_errors += 1
            checkout_s, checkout_errors = 0.0, 0
            for j, step in enumerate(checkout_steps):
                checkout_s += step["mean_s"] * (1.0 + jitter * rng.uniform(-1.0, 1.0))
                if i * steps_per_user + len(nav_steps) + j in error_slots:
                    checkout_s += penalty
                    checkout_errors += 1

            nav_total += nav_s
            txn_total += nav_s + checkout_s
            users.append({
                "user": i,
                "navigation_s": nav_s,
                "checkout_s": checkout_s,
                "errors_nav": nav_errors,
                "errors_checkout": checkout_errors,
                "status": status,
            })

        elapsed = time.perf_counter() - started
        return MetricsReport(
            avg_navigation_time_s=nav_total / n_users,
            transaction_completion_time_s=txn_total / n_users,
            user_error_rate_pct=100.0 * n_errors / total_slots,
            throughput_rps=len(latencies_ms) / elapsed if elapsed > 0 else 0.0,
            p95_latency_ms=percentile(latencies_ms, 95.0),
            notes=f"{config_profile} profile, {n_users} journeys; {MODEL_NOTE}",
            context={
                "profile": config_profile,
                "n_users": n_users,
                "seed": seed,
                "steps_per_journey": steps_per_user,
                "errors_injected": n_errors,
                "payment_method": profile["payment_method"],
                "targets": profile["targets"],
            },
            raw={
                "users": users,
                "error_slots": sorted(error_slots),
                "latencies_ms": latencies_ms,
            },
        )
    finally:
        platform.close()


def table1(seed: int = 7, n_users: int = 200) -> Dict[str, MetricsReport]:
    return {
        "baseline": journey_metrics("baseline", n_users=n_users, seed=seed),
        "optimized": journey_metrics("optimized", n_users=n_users, seed=seed),
    }


def render_table1(result: Dict[str, MetricsReport]) -> str:
    base = result["baseline"]
    opt = result["optimized"]
    rows = [
        ("avg navigation time (s)", base.avg_navigation_time_s, opt.avg_navigation_time_s),
        ("transaction completion (s)", base.transaction_completion_time_s,
         opt.transaction_completion_time_s),
        ("user error rate (%)", base.user_error_rate_pct, opt.user_error_rate_pct),
    ]
    lines = [
        "usability model: legacy vs streamlined flow",
        f"{'':30s}{'baseline':>12s}{'optimized':>12s}",
    ]
    for label, b, o in rows:
        lines.append(f"{label:30s}{b:>12.2f}{o:>12.2f}")
    lines.append("")
    lines.append(MODEL_NOTE)
    return "\n".join(lines)
