"""Scripted end-to-end scenarios driven through the real API.

A scenario is a fixed vocabulary of shopper actions with an expected
outcome per step.  The environment is snapshotted before the run and
restored afterwards, pass or fail, so repeated runs start identical.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from ..api import ApiService
from ..app import Platform
from ..errors import StepFailed, ValidationError
from ..schemas import validate
from .client import ApiClient
from .metrics import MetricsReport, percentile

ACTIONS = (
    "register", "login", "otp", "search", "add_to_cart",
    "checkout", "pay", "verify_order",
)


@dataclass(frozen=True)
class Scenario:
    name: str
    steps: Tuple[dict, ...]
    config_profile: str = "baseline"

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        validate(data, "scenario.schema.json")
        return cls(
            name=data["name"],
            steps=tuple(dict(step) for step in data["steps"]),
            config_profile=data.get("config_profile", "baseline"),
        )

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "Scenario":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


@dataclass(frozen=True)
class StepRecord:
    index: int
    action: str
    expected: str
    outcome: str
    ok: bool
    wall_ms: float
    detail: str = ""

    def as_dict(self) -> dict:
        return {
            "index": self.index,
            "action": self.action,
            "expected": self.expected,
            "outcome": self.outcome,
            "ok": self.ok,
            "wall_ms": round(self.wall_ms, 3),
            "detail": self.detail,
        }


@dataclass
class ScenarioResult:
    scenario: str
    step_log: List[StepRecord]
    report: MetricsReport

    @property
    def passed(self) -> bool:
        return all(step.ok for step in self.step_log)


class _Runner:
    """One scenario execution: carries ids discovered along the way."""

    def __init__(self, platform: Platform, seed: int):
        self.platform = platform
        self.client = ApiClient(ApiService(platform))
        self.rng = random.Random(seed)
        self.seed = seed
        self.email: Optional[str] = None
        self.password: Optional[str] = None
        self.challenge_id: Optional[str] = None
        self.products: Dict[str, str] = {}
        self.order_id: Optional[str] = None
        self.order_total: Optional[int] = None
        self.intent: Optional[dict] = None

    def run_step(self, index: int, step: dict) -> Tuple[str, str]:
        action = step["action"]
        params = step.get("params", {})
        handler = getattr(self, f"_do_{action}", None)
        if handler is None:
            raise ValidationError(f"unknown scenario action {action!r}")
        return handler(index, params)

    # each handler returns (outcome, detail)

    def _do_register(self, index: int, params: dict) -> Tuple[str, str]:
        self.email = params["email"]
        self.password = params["password"]
        response = self.client.register(self.email, self.password)
        if response.status == 201:
            return "registered", ""
        return response.body.get("error_code", "error"), ""

    def _do_login(self, index: int, params: dict) -> Tuple[str, str]:
        email = params.get("email", self.email)
        password = params.get("password", self.password)
        self.email = email
        response = self.client.login(email, password)
        if not response.ok:
            return response.body.get("error_code", "error"), ""
        if response.body.get("otp_required"):
            self.challenge_id = response.body["challenge_id"]
            return "otp_challenge", ""
        return "session", ""

    def _do_otp(self, index: int, params: dict) -> Tuple[str, str]:
        if self.challenge_id is None:
            raise ValidationError("otp step with no pending challenge")
        code = params.get("code") or self.client.latest_otp_code(self.email or "")
        if code is None:
            return "no_code_delivered", ""
        response = self.client.verify_otp(self.challenge_id, code)
        if response.ok:
            return "session", ""
        return response.body.get("error_code", "error"), ""

    def _do_search(self, index: int, params: dict) -> Tuple[str, str]:
        response = self.client.call(
            "GET", "/api/products/search", query={"q": params.get("q", "")}
        )
        if not response.ok:
            return response.body.get("error_code", "error"), ""
        for product in response.body["products"]:
            self.products[product["name"]] = product["id"]
        return "ok", f"{len(response.body['products'])} results"

    def _resolve_product(self, params: dict) -> str:
        if "product_id" in params:
            return params["product_id"]
        name = params.get("product", "")
        if name not in self.products:
            response = self.client.call(
                "GET", "/api/products/search", query={"q": name}
            )
            if response.ok:
                for product in response.body["products"]:
                    self.products[product["name"]] = product["id"]
        if name not in self.products:
            raise ValidationError(f"scenario references unknown product {name!r}")
        return self.products[name]

    def _do_add_to_cart(self, index: int, params: dict) -> Tuple[str, str]:
        product_id = self._resolve_product(params)
        response = self.client.call("POST", "/api/cart/items", {
            "product_id": product_id,
            "qty": params.get("qty", 1),
        })
        if not response.ok:
            return response.body.get("error_code", "error"), ""
        return "ok", f"total={response.body['total']}"

    def _do_checkout(self, index: int, params: dict) -> Tuple[str, str]:
        response = self.client.call("POST", "/api/checkout")
        if not response.ok:
            return response.body.get("error_code", "error"), ""
        self.order_id = response.body["id"]
        self.order_total = response.body["total"]
        return response.body["status"], f"total={self.order_total}"

    def _payment_step_up(self) -> Optional[dict]:
        if not self.platform.config.otp_required_for_payment:
            return None
        response = self.client.call("POST", "/api/payments/otp")
        if not response.ok:
            raise ValidationError(f"payment challenge failed: {response.body}")
        code = self.client.latest_otp_code(self.email or "")
        if code is None:
            raise ValidationError("no payment OTP delivered")
        return {"challenge_id": response.body["challenge_id"], "code": code}

    def _do_pay(self, index: int, params: dict) -> Tuple[str, str]:
        if self.order_id is None:
            raise ValidationError("pay step before checkout")
        method = params.get("method", "card")
        create = self.client.call("POST", "/api/payments/intent", {
            "order_id": self.order_id,
            "amount": self.order_total,
            "method": method,
            "idempotency_key": f"scn-{self.seed}-{index}-{self.order_id}",
        })
        if not create.ok:
            return create.body.get("error_code", "error"), ""
        self.intent = create.body

        body: Dict[str, Any] = {"intent_id": create.body["intent_id"]}
        step_up = self._payment_step_up()
        if step_up:
            body.update(step_up)

        if method == "wallet":
            token = self.client.call("POST", "/dev/wallet/tokens", {
                "amount": self.order_total,
            })
            if not token.ok:
                return token.body.get("error_code", "error"), ""
            body["wallet_token"] = token.body["token"]
            response = self.client.call("POST", "/api/payments/wallet", body)
        else:
            payload = {
                "order_id": self.order_id,
                "amount": self.order_total,
                "currency": "USD",
                "pan": params.get("pan", "4242424242424242"),
                "expiry_month": params.get("expiry_month", 12),
                "expiry_year": params.get("expiry_year", 2031),
                "cvv": params.get("cvv", "123"),
            }
            body["envelope"] = self.client.seal_card_payload(payload)
            response = self.client.call("POST", "/api/payments/submit", body)

        if not response.ok:
            return response.body.get("error_code", "error"), ""
        self.intent = response.body
        reason = response.body.get("decline_reason") or ""
        return response.body["status"], reason

    def _do_verify_order(self, index: int, params: dict) -> Tuple[str, str]:
        order_id = params.get("order_id", self.order_id)
        if order_id is None:
            raise ValidationError("verify_order step before checkout")
        response = self.client.call("GET", f"/api/orders/{order_id}")
        if not response.ok:
            return response.body.get("error_code", "error"), ""
        detail = ""
        confirmation = (self.intent or {}).get("confirmation")
        if response.body["status"] == "Paid" and confirmation:
            check = self.client.call(
                "POST", "/api/payments/receipt/verify", {"receipt": confirmation}
            )
            detail = "receipt_verified" if check.ok and check.body["valid"] else "receipt_invalid"
        return response.body["status"], detail


def run_scenario(platform: Platform, scenario: Scenario, seed: int = 0) -> ScenarioResult:
    """Execute every step against the live API; restore the environment after.

    Raises StepFailed (with the partial log attached as ``step_log``) the
    moment an outcome differs from the step's expectation.
    """
    from . import reset_environment

    snapshot = platform.store.snapshot()
    runner = _Runner(platform, seed)
    step_log: List[StepRecord] = []
    started = time.perf_counter()
    try:
        for index, step in enumerate(scenario.steps):
            t0 = time.perf_counter()
            outcome, detail = runner.run_step(index, step)
            wall_ms = (time.perf_counter() - t0) * 1000.0
            expected = step["expected_outcome"]
            ok = outcome == expected
            step_log.append(StepRecord(index, step["action"], expected, outcome, ok, wall_ms, detail))
            if not ok:
                failure = StepFailed(index, expected, outcome)
                failure.step_log = step_log
                raise failure
    finally:
        reset_environment(platform, snapshot)

    elapsed = time.perf_counter() - started
    walls = [s.wall_ms for s in step_log]
    failed = sum(1 for s in step_log if not s.ok)
    report = MetricsReport(
        user_error_rate_pct=100.0 * failed / len(step_log) if step_log else 0.0,
        throughput_rps=len(step_log) / elapsed if elapsed > 0 else 0.0,
        p95_latency_ms=percentile(walls, 95),
        notes=f"scenario {scenario.name!r}: {len(step_log)} steps, {failed} failed",
        context={"scenario": scenario.name, "seed": seed, "steps": len(step_log)},
        raw={"step_log": [s.as_dict() for s in step_log]},
    )
    return ScenarioResult(scenario.name, step_log, report)
