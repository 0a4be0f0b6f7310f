"""JSON service boundary: a pure function from ApiRequest to ApiResponse.

Every route, its guard level, and its HTTP status mapping live here and
nowhere else.  The HTTP adapter and the test harness both call ``route``;
neither gets extra powers the other lacks.  Every response carries a
``request_id``; every failure uses one envelope shape:

    {"error_code": ..., "message": ..., "request_id": ...}

Unexpected exceptions become an opaque 500 envelope.  Messages never carry
passwords, codes, or card numbers because no module puts them in error text.
"""

from __future__ import annotations

import base64
import logging
import secrets
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

from .app import Platform
from .auth import OtpChallengeRef, Principal, Session
from .config import VERSION
from .errors import (
    Forbidden,
    NotFound,
    PlatformError,
    Unauthenticated,
    UnknownOrder,
    ValidationError,
)
from .paygate.gateway import HopDropped

log = logging.getLogger(__name__)

HOP_CLIENT_API = "client-api"

# error code -> HTTP status; anything unlisted is a 500
STATUS_BY_CODE: Dict[str, int] = {
    "unauthenticated": 401,
    "invalid_credentials": 401,
    "invalid_code": 401,
    "signature_invalid": 401,
    "wrong_audience": 401,
    "expired": 401,
    "forbidden": 403,
    "not_found": 404,
    "unknown_category": 404,
    "unknown_product": 404,
    "unknown_order": 404,
    "unknown_intent": 404,
    "unknown_snapshot": 404,
    "unknown_profile": 404,
    "revision_conflict": 409,
    "email_taken": 409,
    "category_in_use": 409,
    "insufficient_stock": 409,
    "illegal_transition": 409,
    "already_consumed": 409,
    "intent_not_approved": 409,
    "amount_mismatch": 409,
    "validation_error": 422,
    "weak_password": 422,
    "empty_cart": 422,
    "invalid_card": 422,
    "expired_card": 422,
    "envelope_tampered": 422,
    "payload_mismatch": 422,
    "wallet_token_invalid": 422,
    "wallet_token_expired": 422,
    "step_failed": 422,
    "locked_out": 423,
    "too_many_attempts": 423,
}


@dataclass(frozen=True)
class ApiRequest:
    method: str
    path: str
    body: Optional[dict] = None
    headers: Mapping[str, str] = field(default_factory=dict)
    query: Mapping[str, str] = field(default_factory=dict)
    remote_addr: str = "local"


@dataclass(frozen=True)
class ApiResponse:
    status: int
    body: dict
    request_id: str
    headers: Mapping[str, str] = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return 200 <= self.status < 300


@dataclass(frozen=True)
class RouteSpec:
    method: str
    path: str          # template, e.g. /api/orders/{order_id}
    guard: str         # public | session | admin | sandbox
    handler: Callable

    @property
    def segments(self) -> Tuple[str, ...]:
        return tuple(s for s in self.path.split("/") if s)


def _match(template_segments: Tuple[str, ...], path: str) -> Optional[Dict[str, str]]:
    got = tuple(s for s in path.split("/") if s)
    if len(got) != len(template_segments):
        return None
    params: Dict[str, str] = {}
    for want, have in zip(template_segments, got):
        if want.startswith("{") and want.endswith("}"):
            params[want[1:-1]] = have
        elif want != have:
            return None
    return params


def _require(body: Optional[dict], *names: str) -> dict:
    if not isinstance(body, dict):
        raise ValidationError("request body must be a JSON object")
    missing = [n for n in names if n not in body]
    if missing:
        raise ValidationError("missing field(s): " + ", ".join(missing))
    return body


def _int_arg(source: Mapping[str, Any], name: str, default: int) -> int:
    raw = source.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} must be an integer") from None


class ApiService:
    """Binds the route table to one Platform instance."""

    def __init__(self, platform: Platform):
        self.platform = platform
        self.routes: List[RouteSpec] = self._build_routes()

    # -- dispatch ---------------------------------------------------------------

    def route(self, request: ApiRequest) -> ApiResponse:
        request_id = "req_" + secrets.token_hex(8)
        try:
            self.platform.cross_hop(HOP_CLIENT_API, {"path": request.path})
            spec, params = self._resolve(request)
            principal = self._guard(spec, request)
            result = spec.handler(request, params, principal)
            status, body = result if isinstance(result, tuple) else (200, result)
            body = dict(body)
            body["request_id"] = request_id
            return ApiResponse(status, body, request_id)
        except HopDropped as drop:
            return self._error(503, "transport_dropped", f"hop {drop.hop} dropped", request_id)
        except PlatformError as err:
            status = STATUS_BY_CODE.get(err.code, 500)
            return self._error(status, err.code, err.message, request_id)
        except Exception:
            log.exception("unhandled error on %s %s", request.method, request.path)
            return self._error(500, "internal_error", "internal error", request_id)

    @staticmethod
    def _error(status: int, code: str, message: str, request_id: str) -> ApiResponse:
        return ApiResponse(
            status,
            {"error_code": code, "message": message, "request_id": request_id},
            request_id,
        )

    def _resolve(self, request: ApiRequest) -> Tuple[RouteSpec, Dict[str, str]]:
        for spec in self.routes:
            params = _match(spec.segments, request.path)
            if params is None:
                continue
            if spec.method != request.method.upper():
                continue
            if spec.guard == "sandbox" and not self.platform.config.sandbox:
                break  # hidden outside sandbox mode
            return spec, params
        raise NotFound(f"no route for {request.method} {request.path}")

    def _guard(self, spec: RouteSpec, request: ApiRequest) -> Optional[Principal]:
        if spec.guard in ("public", "sandbox"):
            return None
        principal = self._authenticate(request)
        if spec.guard == "admin" and principal.role != "admin":
            raise Forbidden("admin role required")
        return principal

    def _authenticate(self, request: ApiRequest) -> Principal:
        header = ""
        for name, value in request.headers.items():
            if name.lower() == "authorization":
                header = value
                break
        if not header.startswith("Bearer "):
            raise Unauthenticated("missing bearer token")
        return self.platform.auth.validate_session(header[len("Bearer "):].strip())

    # -- route table --------------------------------------------------------------

    def _build_routes(self) -> List[RouteSpec]:
        r = RouteSpec
        return [
            # public
            r("POST", "/api/auth/register", "public", self._register),
            r("POST", "/api/auth/login", "public", self._login),
            r("POST", "/api/auth/otp/verify", "public", self._otp_verify),
            r("POST", "/api/auth/federated", "public", self._federated),
            r("GET", "/api/products", "public", self._products_list),
            r("GET", "/api/products/search", "public", self._products_search),
            r("GET", "/api/products/{product_id}", "public", self._product_get),
            r("GET", "/api/categories", "public", self._categories_list),
            r("GET", "/api/manifest", "public", self._manifest),
            r("GET", "/health", "public", self._health),
            # session
            r("POST", "/api/auth/logout", "session", self._logout),
            r("GET", "/api/cart", "session", self._cart_get),
            r("POST", "/api/cart/items", "session", self._cart_add),
            r("PUT", "/api/cart/items/{product_id}", "session", self._cart_set),
            r("DELETE", "/api/cart/items/{product_id}", "session", self._cart_remove),
            r("DELETE", "/api/cart", "session", self._cart_clear),
            r("POST", "/api/checkout", "session", self._checkout),
            r("GET", "/api/orders", "session", self._orders_list),
            r("GET", "/api/orders/{order_id}", "session", self._order_get),
            r("POST", "/api/orders/{order_id}/cancel", "session", self._order_cancel),
            r("POST", "/api/payments/client-key", "session", self._payment_client_key),
            r("POST", "/api/payments/intent", "session", self._payment_intent),
            r("GET", "/api/payments/intent/{intent_id}", "session", self._payment_intent_get),
            r("POST", "/api/payments/otp", "session", self._payment_otp),
            r("POST", "/api/payments/submit", "session", self._payment_submit),
            r("POST", "/api/payments/wallet", "session", self._payment_wallet),
            r("POST", "/api/payments/receipt/verify", "session", self._receipt_verify),
            # admin
            r("GET", "/admin/products", "admin", self._admin_products_list),
            r("POST", "/admin/products", "admin", self._admin_product_create),
            r("PUT", "/admin/products/{product_id}", "admin", self._admin_product_update),
            r("DELETE", "/admin/products/{product_id}", "admin", self._admin_product_delete),
            r("GET", "/admin/categories", "admin", self._admin_categories_list),
            r("POST", "/admin/categories", "admin", self._admin_category_create),
            r("DELETE", "/admin/categories/{category_id}", "admin", self._admin_category_delete),
            r("GET", "/admin/orders", "admin", self._admin_orders_list),
            r("POST", "/admin/orders/{order_id}/status", "admin", self._admin_order_status),
            r("GET", "/admin/security/report", "admin", self._admin_security_report),
            # sandbox-only diagnostics
            r("GET", "/dev/otp-outbox", "sandbox", self._dev_otp_outbox),
            r("POST", "/dev/wallet/tokens", "sandbox", self._dev_wallet_token),
            r("POST", "/dev/federated/assertion", "sandbox", self._dev_federated_assertion),
        ]

    def manifest(self) -> dict:
        routes = [
            {"method": s.method, "path": s.path, "guard": s.guard}
            for s in self.routes
            if s.guard != "sandbox" or self.platform.config.sandbox
        ]
        return {"version": VERSION, "sandbox": self.platform.config.sandbox, "routes": routes}

    # -- auth handlers ---------------------------------------------------------------

    def _register(self, request, params, principal):
        body = _require(request.body, "email", "password")
        created = self.platform.auth.register(str(body["email"]), str(body["password"]))
        return 201, {
            "account_id": created.account_id,
            "email": created.email,
            "role": created.role,
        }

    def _login(self, request, params, principal):
        body = _require(request.body, "email", "password")
        tag = ""
        for name, value in request.headers.items():
            if name.lower() == "x-client-tag":
                tag = str(value)
                break
        outcome = self.platform.auth.login_password(
            str(body["email"]), str(body["password"]), request.remote_addr, label=tag
        )
        if isinstance(outcome, OtpChallengeRef):
            return {
                "otp_required": True,
                "challenge_id": outcome.challenge_id,
                "expires_at": outcome.expires_at,
            }
        return self._session_payload(outcome)

    def _otp_verify(self, request, params, principal):
        body = _require(request.body, "challenge_id", "code")
        session = self.platform.auth.verify_otp(str(body["challenge_id"]), str(body["code"]))
        return self._session_payload(session)

    def _federated(self, request, params, principal):
        body = _require(request.body, "payload", "signature")
        session = self.platform.auth.federated_sign_in(
            {"payload": body["payload"], "signature": body["signature"]},
            client_addr=request.remote_addr,
        )
        return self._session_payload(session)

    def _logout(self, request, params, principal):
        header = ""
        for name, value in request.headers.items():
            if name.lower() == "authorization":
                header = value
        self.platform.auth.logout(header[len("Bearer "):].strip())
        return {"logged_out": True}

    @staticmethod
    def _session_payload(session: Session) -> dict:
        return {
            "otp_required": False,
            "token": session.token,
            "account_id": session.account_id,
            "role": session.role,
            "email": session.email,
            "expires_at": session.expires_at,
        }

    # -- catalog handlers ---------------------------------------------------------------

    def _products_list(self, request, params, principal):
        products = self.platform.catalog.list_products(
            category=request.query.get("category") or None,
            active_only=True,
            offset=_int_arg(request.query, "offset", 0),
            limit=_int_arg(request.query, "limit", 50),
        )
        return {"products": [p.as_dict() for p in products]}

    def _products_search(self, request, params, principal):
        hits = self.platform.catalog.search_products(request.query.get("q", ""))
        return {"products": [p.as_dict() for p in hits]}

    def _product_get(self, request, params, principal):
        return self.platform.catalog.get_product(params["product_id"]).as_dict()

    def _categories_list(self, request, params, principal):
        return {"categories": [c.as_dict() for c in self.platform.catalog.list_categories()]}

    # -- cart / order handlers -------------------------------------------------------------

    def _cart_get(self, request, params, principal):
        return self.platform.orders.get_cart(principal.account_id)

    def _cart_add(self, request, params, principal):
        body = _require(request.body, "product_id", "qty")
        return self.platform.orders.add_to_cart(
            principal.account_id, str(body["product_id"]), body["qty"]
        )

    def _cart_set(self, request, params, principal):
        body = _require(request.body, "qty")
        return self.platform.orders.set_cart_line(
            principal.account_id, params["product_id"], body["qty"]
        )

    def _cart_remove(self, request, params, principal):
        return self.platform.orders.remove_from_cart(
            principal.account_id, params["product_id"]
        )

    def _cart_clear(self, request, params, principal):
        return self.platform.orders.clear_cart(principal.account_id)

    def _checkout(self, request, params, principal):
        order = self.platform.orders.begin_checkout(principal.account_id)
        return 201, order.as_dict()

    def _orders_list(self, request, params, principal):
        orders = self.platform.orders.list_orders(principal.account_id)
        return {"orders": [o.as_dict() for o in orders]}

    def _order_get(self, request, params, principal):
        order = self._owned_order(params["order_id"], principal)
        return order.as_dict()

    def _order_cancel(self, request, params, principal):
        self._owned_order(params["order_id"], principal)
        return self.platform.orders.cancel_order(params["order_id"]).as_dict()

    def _owned_order(self, order_id: str, principal: Principal):
        order = self.platform.orders.get_order(order_id)
        if order.account_id != principal.account_id and principal.role != "admin":
            # 404, not 403: order ids are not enumerable by other shoppers
            raise UnknownOrder(order_id)
        return order

    # -- payment handlers ---------------------------------------------------------------

    def _payment_client_key(self, request, params, principal):
        body = _require(request.body, "key")
        try:
            key = base64.b64decode(str(body["key"]), validate=True)
        except Exception:
            raise ValidationError("key must be base64") from None
        return 201, {"key_id": self.platform.gateway.register_client_key(key)}

    def _payment_intent(self, request, params, principal):
        body = _require(request.body, "order_id", "amount")
        self._owned_order(str(body["order_id"]), principal)
        intent = self.platform.gateway.create_intent(
            str(body["order_id"]),
            body["amount"],
            method=str(body.get("method", "card")),
            currency=str(body.get("currency", "USD")),
            idempotency_key=(
                str(body["idempotency_key"]) if body.get("idempotency_key") else None
            ),
        )
        return 201, intent

    def _payment_intent_get(self, request, params, principal):
        intent = self.platform.gateway.get_intent(params["intent_id"])
        self._owned_order(intent["order_id"], principal)
        return intent

    def _payment_otp(self, request, params, principal):
        challenge = self.platform.auth.issue_payment_challenge(
            principal, request.remote_addr
        )
        return {
            "otp_required": True,
            "challenge_id": challenge.challenge_id,
            "expires_at": challenge.expires_at,
        }

    def _step_up(self, request, principal) -> None:
        """Payment confirmation requires a fresh OTP when so configured."""
        if not self.platform.config.otp_required_for_payment:
            return
        body = _require(request.body, "challenge_id", "code")
        self.platform.auth.verify_payment_otp(
            principal, str(body["challenge_id"]), str(body["code"])
        )

    def _payment_submit(self, request, params, principal):
        body = _require(request.body, "intent_id", "envelope")
        intent = self.platform.gateway.get_intent(str(body["intent_id"]))
        self._owned_order(intent["order_id"], principal)
        self._step_up(request, principal)
        return self.platform.gateway.submit_card_payment(
            str(body["intent_id"]), body["envelope"]
        )

    def _payment_wallet(self, request, params, principal):
        body = _require(request.body, "intent_id", "wallet_token")
        intent = self.platform.gateway.get_intent(str(body["intent_id"]))
        self._owned_order(intent["order_id"], principal)
        self._step_up(request, principal)
        return self.platform.gateway.submit_wallet_payment(
            str(body["intent_id"]), str(body["wallet_token"])
        )

    def _receipt_verify(self, request, params, principal):
        body = _require(request.body, "receipt")
        return {"valid": self.platform.gateway.verify_receipt(body["receipt"])}

    # -- admin handlers ---------------------------------------------------------------

    def _admin_products_list(self, request, params, principal):
        products = self.platform.catalog.list_products(
            category=request.query.get("category") or None,
            active_only=False,
            offset=_int_arg(request.query, "offset", 0),
            limit=_int_arg(request.query, "limit", 100),
        )
        return {"products": [p.as_dict() for p in products]}

    def _admin_product_create(self, request, params, principal):
        body = _require(request.body, "name", "category_id", "unit_price", "stock")
        product = self.platform.catalog.create_product(principal, body)
        return 201, product.as_dict()

    def _admin_product_update(self, request, params, principal):
        body = _require(request.body)
        expected = body.get("expected_revision")
        product = self.platform.catalog.update_product(
            principal, params["product_id"], body, expected_revision=expected
        )
        return product.as_dict()

    def _admin_product_delete(self, request, params, principal):
        self.platform.catalog.delete_product(principal, params["product_id"])
        return {"deleted": params["product_id"]}

    def _admin_categories_list(self, request, params, principal):
        return {"categories": [c.as_dict() for c in self.platform.catalog.list_categories()]}

    def _admin_category_create(self, request, params, principal):
        body = _require(request.body, "name")
        category = self.platform.catalog.create_category(principal, str(body["name"]))
        return 201, category.as_dict()

    def _admin_category_delete(self, request, params, principal):
        self.platform.catalog.delete_category(principal, params["category_id"])
        return {"deleted": params["category_id"]}

    def _admin_orders_list(self, request, params, principal):
        orders = self.platform.orders.list_orders(None)
        return {"orders": [o.as_dict() for o in orders]}

    def _admin_order_status(self, request, params, principal):
        body = _require(request.body, "status")
        order = self.platform.orders.advance_status(params["order_id"], str(body["status"]))
        return order.as_dict()

    def _admin_security_report(self, request, params, principal):
        try:
            start = float(request.query.get("start", float("-inf")))
            end = float(request.query.get("end", float("inf")))
        except (TypeError, ValueError):
            raise ValidationError("start/end must be numbers") from None
        summary = self.platform.monitor.security_report(start, end)
        return {
            **summary.as_dict(),
            "recent_lockouts": self.platform.monitor.recent_lockouts(),
        }

    # -- misc handlers ----------------------------------------------------------------

    def _manifest(self, request, params, principal):
        return self.manifest()

    def _health(self, request, params, principal):
        healthy = self.platform.store_healthy()
        return {
            "status": "ok" if healthy else "degraded",
            "version": VERSION,
            "uptime_s": max(0.0, self.platform.clock() - self.platform.started_at),
        }

    # -- sandbox handlers ---------------------------------------------------------------

    def _dev_otp_outbox(self, request, params, principal):
        return {"entries": self.platform.outbox.entries()}

    def _dev_wallet_token(self, request, params, principal):
        body = _require(request.body, "amount")
        return 201, self.platform.gateway.wallet.issue_token(body["amount"])

    def _dev_federated_assertion(self, request, params, principal):
        provider = self.platform.sandbox_provider
        if provider is None:
            raise NotFound("no sandbox identity provider configured")
        body = _require(request.body, "subject", "email")
        ttl = float(body.get("ttl_s", 600.0))
        assertion = provider.mint_assertion(
            str(body["subject"]),
            str(body["email"]),
            self.platform.config.provider_audience,
            self.platform.clock() + ttl,
        )
        return 201, assertion
