"""Carts, checkout orchestration, and the order-tracking state machine.

One active cart per account (cart id == account id); line prices are frozen
at add-to-cart time so later catalog edits cannot race a checkout.  Checkout
reserves stock line by line through catalog CAS and compensates already-taken
lines if any line comes up short, giving all-or-nothing semantics without
multi-document transactions.  Unpaid orders are auto-cancelled by the TTL
sweep so reserved stock cannot leak.

Order totals are recomputed from the frozen lines and asserted on every
transition; the transition graph is::

    Draft -> AwaitingPayment -> Paid -> Shipped -> Delivered
    Draft | AwaitingPayment -> Cancelled
"""

from __future__ import annotations

import time
import uuid
from dataclasses import dataclass
from typing import Callable, Optional

from .catalog import Catalog
from .errors import (
    AmountMismatch,
    EmptyCart,
    IllegalTransition,
    InsufficientStock,
    IntentNotApproved,
    NotFound,
    RevisionConflict,
    UnknownOrder,
    UnknownProduct,
    ValidationError,
)
from .kernel import DocumentStore

CARTS = "carts"
ORDERS = "orders"
PAYMENT_INTENTS = "payment_intents"  # owned by paygate; read here to gate Paid

LEGAL_TRANSITIONS: dict[str, frozenset[str]] = {
    "Draft": frozenset({"AwaitingPayment", "Cancelled"}),
    "AwaitingPayment": frozenset({"Paid", "Cancelled"}),
    "Paid": frozenset({"Shipped"}),
    "Shipped": frozenset({"Delivered"}),
    "Delivered": frozenset(),
    "Cancelled": frozenset(),
}

ACTIVE_STATUSES = ("AwaitingPayment", "Paid", "Shipped", "Delivered")


def cart_total(lines: list[dict]) -> int:
    """Sum of qty x unit_price_at_add over the lines, in minor units."""
    return sum(line["qty"] * line["unit_price_at_add"] for line in lines)


@dataclass(frozen=True)
class Order:
    id: str
    account_id: str
    lines: list
    total: int
    status: str
    payment_intent_id: Optional[str]
    history: list

    @classmethod
    def from_doc(cls, doc) -> "Order":
        b = doc.body
        return cls(doc.id, b["account_id"], b["lines"], b["total"], b["status"],
                   b.get("payment_intent_id"), b["history"])

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "account_id": self.account_id,
            "lines": self.lines,
            "total": self.total,
            "status": self.status,
            "payment_intent_id": self.payment_intent_id,
            "history": self.history,
        }


class OrderService:
    def __init__(self, store: DocumentStore, catalog: Catalog,
                 order_ttl_s: float = 1800.0,
                 clock: Callable[[], float] = time.time):
        self.store = store
        self.catalog = catalog
        self.order_ttl_s = order_ttl_s
        self.clock = clock

    # -- cart -----------------------------------------------------------------

    def get_cart(self, account_id: str) -> dict:
        try:
            doc = self.store.get(CARTS, account_id)
            lines = doc.body["lines"]
        except NotFound:
            lines = []
        return {"account_id": account_id, "lines": lines, "total": cart_total(lines)}

    def add_to_cart(self, account_id: str, product_id: str, qty: int) -> dict:
        if not isinstance(qty, int) or isinstance(qty, bool) or qty < 1:
            raise ValidationError("qty must be an integer >= 1")
        product = self.catalog.get_product(product_id)
        if not product.active:
            raise UnknownProduct(product_id)
        return self._mutate_cart(account_id, self._merge_line,
                                 product_id=product_id, qty=qty,
                                 unit_price=product.unit_price)

    def set_cart_line(self, account_id: str, product_id: str, qty: int) -> dict:
        if not isinstance(qty, int) or isinstance(qty, bool) or qty < 0:
            raise ValidationError("qty must be an integer >= 0")
        return self._mutate_cart(account_id, self._set_line,
                                 product_id=product_id, qty=qty)

    def remove_from_cart(self, account_id: str, product_id: str) -> dict:
        return self.set_cart_line(account_id, product_id, 0)

    def clear_cart(self, account_id: str) -> dict:
        return self._mutate_cart(account_id, lambda lines, **_: [])

    @staticmethod
    def _merge_line(lines: list, product_id: str, qty: int, unit_price: int) -> list:
        out = [dict(l) for l in lines]
        for line in out:
            if line["product_id"] == product_id:
                line["qty"] += qty
                return out
        out.append({"product_id": product_id, "qty": qty, "unit_price_at_add": unit_price})
        return out

    @staticmethod
    def _set_line(lines: list, product_id: str, qty: int) -> list:
        out = [dict(l) for l in lines if l["product_id"] != product_id]
        if qty > 0:
            kept = next((l for l in lines if l["product_id"] == product_id), None)
            if kept is None:
                raise UnknownProduct(product_id)
            out.append({"product_id": product_id, "qty": qty,
                        "unit_price_at_add": kept["unit_price_at_add"]})
        return out

    def _mutate_cart(self, account_id: str, fn, **kwargs) -> dict:
        while True:
            try:
                doc = self.store.get(CARTS, account_id)
                lines, revision = doc.body["lines"], doc.revision
            except NotFound:
                lines, revision = [], 0
            new_lines = fn(lines, **kwargs)
            body = {"account_id": account_id, "lines": new_lines, "updated_at": self.clock()}
            try:
                self.store.put(CARTS, account_id, body, expected_revision=revision)
            except RevisionConflict:
                continue
            return {"account_id": account_id, "lines": new_lines,
                    "total": cart_total(new_lines)}

    # -- checkout ----------------------------------------------------------------

    def begin_checkout(self, account_id: str) -> Order:
        """Reserve stock for the active cart and open an order awaiting payment.

        Stock is taken per line via CAS; on any shortfall every already-taken
        line is compensated back, so a failed checkout mutates nothing.
        """
        cart = self.get_cart(account_id)
        lines = cart["lines"]
        if not lines:
            raise EmptyCart(account_id)

        taken: list[dict] = []
        try:
            for line in lines:
                self.catalog.adjust_stock(line["product_id"], -line["qty"])
                taken.append(line)
        except (InsufficientStock, RevisionConflict, UnknownProduct):
            for line in taken:
                self.catalog.adjust_stock(line["product_id"], line["qty"])
            raise

        now = self.clock()
        order_id = uuid.uuid4().hex[:12]
        frozen = [dict(l) for l in lines]
        body = {
            "account_id": account_id,
            "lines": frozen,
            "total": cart_total(frozen),
            "status": "Draft",
            "payment_intent_id": None,
            "history": [{"status": "Draft", "at": now}],
            "created_at": now,
        }
        self.store.put(ORDERS, order_id, body)
        order = self._transition(order_id, "AwaitingPayment")
        self.clear_cart(account_id)
        return order

    # -- order lifecycle -------------------------------------------------------------

    def get_order(self, order_id: str) -> Order:
        try:
            return Order.from_doc(self.store.get(ORDERS, order_id))
        except NotFound:
            raise UnknownOrder(order_id) from None

    def list_orders(self, account_id: Optional[str] = None) -> list[Order]:
        orders = [Order.from_doc(d) for d in self.store.list(ORDERS)]
        if account_id is not None:
            orders = [o for o in orders if o.account_id == account_id]
        orders.sort(key=lambda o: (o.history[0]["at"], o.id))
        return orders

    def confirm_order(self, order_id: str, payment_intent_id: str) -> Order:
        """AwaitingPayment -> Paid, gated on an Approved intent for this order."""
        order = self.get_order(order_id)
        if order.status != "AwaitingPayment":
            raise IllegalTransition(f"{order.status} -> Paid")
        try:
            intent = self.store.get(PAYMENT_INTENTS, payment_intent_id)
        except NotFound:
            raise IntentNotApproved(f"unknown intent {payment_intent_id}") from None
        if intent.body["order_id"] != order_id:
            raise IntentNotApproved("intent references a different order")
        if intent.body["status"] != "Approved":
            raise IntentNotApproved(f"intent status {intent.body['status']}")
        if intent.body["amount"] != order.total:
            raise AmountMismatch(f"intent {intent.body['amount']} != order {order.total}")
        return self._transition(order_id, "Paid", payment_intent_id=payment_intent_id)

    def cancel_order(self, order_id: str) -> Order:
        order = self.get_order(order_id)
        if order.status not in ("Draft", "AwaitingPayment"):
            raise IllegalTransition(f"{order.status} -> Cancelled")
        cancelled = self._transition(order_id, "Cancelled")
        for line in cancelled.lines:
            self.catalog.adjust_stock(line["product_id"], line["qty"])
        return cancelled

    def advance_status(self, order_id: str, status: str) -> Order:
        """Admin-driven fulfilment updates (Paid -> Shipped -> Delivered)."""
        if status == "Cancelled":
            return self.cancel_order(order_id)
        if status == "Paid":
            raise IllegalTransition("Paid requires a payment confirmation")
        return self._transition(order_id, status)

    def sweep_stale(self, now: Optional[float] = None) -> list[str]:
        """Auto-cancel orders stuck AwaitingPayment past the TTL; returns ids."""
        now = self.clock() if now is None else now
        cancelled = []
        for doc in self.store.list(ORDERS):
            if doc.body["status"] != "AwaitingPayment":
                continue
            awaiting_since = next(
                h["at"] for h in reversed(doc.body["history"])
                if h["status"] == "AwaitingPayment"
            )
            if now - awaiting_since >= self.order_ttl_s:
                try:
                    self.cancel_order(doc.id)
                    cancelled.append(doc.id)
                except IllegalTransition:
                    pass  # paid concurrently; leave it alone
        return cancelled

    def _transition(self, order_id: str, status: str, **extra) -> Order:
        while True:
            doc = self.store.get(ORDERS, order_id)
            body = doc.body
            current = body["status"]
            if status not in LEGAL_TRANSITIONS.get(current, frozenset()):
                raise IllegalTransition(f"{current} -> {status}")
            if body["total"] != cart_total(body["lines"]):
                raise ValidationError(
                    f"order {order_id}: stored total {body['total']} does not match lines"
                )
            update = dict(body)
            update["status"] = status
            update["history"] = body["history"] + [{"status": status, "at": self.clock()}]
            update.update(extra)
            try:
                self.store.put(ORDERS, order_id, update, expected_revision=doc.revision)
                return Order.from_doc(self.store.get(ORDERS, order_id))
            except RevisionConflict:
                continue

    # -- invariants --------------------------------------------------------------------

    def reserved_by_product(self) -> dict[str, int]:
        """qty held by orders in active statuses, per product (conservation checks)."""
        reserved: dict[str, int] = {}
        for doc in self.store.list(ORDERS):
            if doc.body["status"] in ACTIVE_STATUSES:
                for line in doc.body["lines"]:
                    pid = line["product_id"]
                    reserved[pid] = reserved.get(pid, 0) + line["qty"]
        return reserved
