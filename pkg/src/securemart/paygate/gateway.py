"""Payment gateway: intents, card vault, issuer dialogue, receipts.

Card data crosses the gateway boundary exactly once, inside an encrypted
envelope. The gateway opens it, walks the processor/issuer hops, vaults
the instrument, and never writes a primary account number to the store,
the flow log, or any error message. ``last4`` is the only clear fragment.
"""

from __future__ import annotations

import hashlib
import hmac
import json
import secrets
import threading
import time
from typing import Any, Callable, Dict, List, Optional

from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from ..errors import (
    AmountMismatch,
    EnvelopeTampered,
    ExpiredCard,
    IllegalTransition,
    InvalidCard,
    NotFound,
    PayloadMismatch,
    RevisionConflict,
    UnknownIntent,
    ValidationError,
)
from ..kernel import DocumentStore
from .envelope import open_envelope
from .issuer import IssuerSimulator
from .luhn import luhn_valid
from .wallet import WalletSimulator

INTENTS = "payment_intents"
VAULT = "card_vault"

INITIATED = "Initiated"
SUBMITTED = "Submitted"
ISSUER_VERIFIED = "IssuerVerified"
APPROVED = "Approved"
DECLINED = "Declined"
FAILED = "Failed"

TERMINAL_STATUSES = frozenset({APPROVED, DECLINED, FAILED})

INTENT_TRANSITIONS: Dict[str, frozenset] = {
    INITIATED: frozenset({SUBMITTED, FAILED}),
    SUBMITTED: frozenset({ISSUER_VERIFIED, FAILED}),
    ISSUER_VERIFIED: frozenset({APPROVED, DECLINED}),
    APPROVED: frozenset(),
    DECLINED: frozenset(),
    FAILED: frozenset(),
}

HOP_CLIENT_GATEWAY = "client-gateway"
HOP_GATEWAY_PROCESSOR = "gateway-processor"
HOP_PROCESSOR_ISSUER = "processor-issuer"


class HopDropped(Exception):
    """Raised by a fault hook to sever one transport hop mid-flight."""

    def __init__(self, hop: str):
        super().__init__(hop)
        self.hop = hop


# fault_hook(hop, context) is called before traffic crosses each hop; a
# HopDropped from it fails the intent instead of reaching the far side.
FaultHook = Callable[[str, Dict[str, Any]], None]


def _canonical(payload: Dict[str, Any]) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")


class PaymentGateway:
    def __init__(
        self,
        store: DocumentStore,
        orders,
        issuer: Optional[IssuerSimulator] = None,
        wallet: Optional[WalletSimulator] = None,
        *,
        clock: Callable[[], float] = time.time,
        payment_timeout_s: float = 120.0,
        fault_hook: Optional[FaultHook] = None,
    ):
        self._store = store
        self._orders = orders
        self.issuer = issuer if issuer is not None else IssuerSimulator()
        self.wallet = wallet if wallet is not None else WalletSimulator(clock=clock)
        self._clock = clock
        self._timeout_s = float(payment_timeout_s)
        self.fault_hook = fault_hook

        self._vault_key = AESGCM.generate_key(bit_length=256)
        self._receipt_key = secrets.token_bytes(32)

        self._lock = threading.Lock()
        self._client_keys: Dict[str, bytes] = {}
        self._seen_nonces: Dict[str, set] = {}
        self._idempotency: Dict[str, str] = {}
        self._issuer_calls: Dict[str, int] = {}
        self._flow_log: List[Dict[str, Any]] = []

    # -- client key registry ------------------------------------------------

    def register_client_key(self, key: bytes) -> str:
        """Enroll a client-held envelope key; returns its key id."""
        if not isinstance(key, (bytes, bytearray)) or len(key) != 32:
            raise ValidationError("client key must be 32 bytes")
        key_id = "ck_" + secrets.token_hex(8)
        with self._lock:
            self._client_keys[key_id] = bytes(key)
            self._seen_nonces[key_id] = set()
        return key_id

    def _key_for(self, key_id: str) -> bytes:
        with self._lock:
            key = self._client_keys.get(key_id)
        if key is None:
            raise EnvelopeTampered("unrecognized envelope key id")
        return key

    def _check_nonce(self, key_id: str, nonce_b64: str) -> None:
        with self._lock:
            seen = self._seen_nonces.setdefault(key_id, set())
            if nonce_b64 in seen:
                raise EnvelopeTampered("envelope nonce replayed")
            seen.add(nonce_b64)

    # -- intents ------------------------------------------------------------

    def create_intent(
        self,
        order_id: str,
        amount: int,
        *,
        method: str = "card",
        currency: str = "USD",
        idempotency_key: Optional[str] = None,
    ) -> Dict[str, Any]:
        """Open a payment intent for an order awaiting payment.

        Replaying the same idempotency key returns the original intent,
        whatever state it has since reached, and never creates a second.
        """
        if method not in ("card", "wallet"):
            raise ValidationError("method must be 'card' or 'wallet'")
        if not isinstance(amount, int) or isinstance(amount, bool) or amount <= 0:
            raise ValidationError("amount must be a positive integer of cents")

        # replay wins before any validation: the original intent may have
        # already moved the order past AwaitingPayment
        if idempotency_key is not None:
            with self._lock:
                existing = self._idempotency.get(idempotency_key)
            if existing is not None:
                return self.get_intent(existing)

        order = self._orders.get_order(order_id)
        if order.status != "AwaitingPayment":
            raise IllegalTransition(
                f"order {order_id} is {order.status}; payment needs AwaitingPayment"
            )
        if order.total != amount:
            raise AmountMismatch(f"order total is {order.total}, intent asked {amount}")

        now = self._clock()
        body = {
            "order_id": order_id,
            "amount": amount,
            "currency": currency,
            "method": method,
            "status": INITIATED,
            "idempotency_key": idempotency_key,
            "decline_reason": None,
            "card_token_id": None,
            "confirmation": None,
            "created_at": now,
            "updated_at": now,
        }
        with self._lock:
            if idempotency_key is not None:
                existing = self._idempotency.get(idempotency_key)
                if existing is not None:
                    return self.get_intent(existing)
            intent_id = "pi_" + secrets.token_hex(10)
            self._store.put(INTENTS, intent_id, body, expected_revision=0)
            if idempotency_key is not None:
                self._idempotency[idempotency_key] = intent_id
        self._log(intent_id, HOP_CLIENT_GATEWAY, "intent_created", method)
        return self.get_intent(intent_id)

    def get_intent(self, intent_id: str) -> Dict[str, Any]:
        try:
            doc = self._store.get(INTENTS, intent_id)
        except NotFound:
            raise UnknownIntent(f"no payment intent {intent_id}") from None
        return self._public(intent_id, doc.body)

    @staticmethod
    def _public(intent_id: str, body: Dict[str, Any]) -> Dict[str, Any]:
        return {
            "intent_id": intent_id,
            "order_id": body["order_id"],
            "amount": body["amount"],
            "currency": body["currency"],
            "method": body["method"],
            "status": body["status"],
            "decline_reason": body.get("decline_reason"),
            "card_token_id": body.get("card_token_id"),
            "confirmation": body.get("confirmation"),
            "created_at": body["created_at"],
        }

    def _transition(self, intent_id: str, new_status: str, **patch: Any) -> Dict[str, Any]:
        while True:
            try:
                doc = self._store.get(INTENTS, intent_id)
            except NotFound:
                raise UnknownIntent(f"no payment intent {intent_id}") from None
            body = doc.body
            current = body["status"]
            if new_status not in INTENT_TRANSITIONS[current]:
                raise IllegalTransition(f"intent cannot move {current} -> {new_status}")
            updated = dict(body)
            updated.update(patch)
            updated["status"] = new_status
            updated["updated_at"] = self._clock()
            try:
                self._store.put(INTENTS, intent_id, updated, expected_revision=doc.revision)
            except RevisionConflict:
                continue
            self._log(intent_id, "gateway", "status", new_status)
            return updated

    # -- card vault ----------------------------------------------------------

    def tokenize_card(
        self, pan: str, expiry_month: int, expiry_year: int, cvv: str
    ) -> Dict[str, Any]:
        """Vault a validated card; the caller keeps only an opaque token."""
        if not luhn_valid(pan):
            raise InvalidCard("card number failed checksum")
        self._check_expiry(expiry_month, expiry_year)
        if not (isinstance(cvv, str) and cvv.isdigit() and len(cvv) in (3, 4)):
            raise InvalidCard("security code must be 3 or 4 digits")

        token_id = "card_" + secrets.token_hex(10)
        nonce = secrets.token_bytes(12)
        secret = _canonical({"pan": pan, "cvv": cvv})
        sealed = AESGCM(self._vault_key).encrypt(nonce, secret, token_id.encode("ascii"))
        body = {
            "nonce": nonce.hex(),
            "sealed": sealed.hex(),
            "last4": pan[-4:],
            "expiry_month": expiry_month,
            "expiry_year": expiry_year,
            "created_at": self._clock(),
        }
        self._store.put(VAULT, token_id, body, expected_revision=0)
        return {
            "card_token_id": token_id,
            "last4": pan[-4:],
            "expiry_month": expiry_month,
            "expiry_year": expiry_year,
        }

    def detokenize(self, card_token_id: str) -> Dict[str, str]:
        """Recover the vaulted instrument. Internal to payment execution."""
        try:
            doc = self._store.get(VAULT, card_token_id)
        except NotFound:
            raise InvalidCard(f"no vaulted card {card_token_id}") from None
        body = doc.body
        clear = AESGCM(self._vault_key).decrypt(
            bytes.fromhex(body["nonce"]),
            bytes.fromhex(body["sealed"]),
            card_token_id.encode("ascii"),
        )
        return json.loads(clear.decode("utf-8"))

    def _check_expiry(self, month: Any, year: Any) -> None:
        ok_types = isinstance(month, int) and isinstance(year, int)
        if not ok_types or isinstance(month, bool) or isinstance(year, bool):
            raise InvalidCard("expiry must be integer month and year")
        if not 1 <= month <= 12:
            raise InvalidCard("expiry month out of range")
        now = time.gmtime(self._clock())
        if (year, month) < (now.tm_year, now.tm_mon):
            raise ExpiredCard(f"card expired {month:02d}/{year}")

    # -- payment execution ----------------------------------------------------

    def submit_card_payment(self, intent_id: str, envelope: Dict[str, Any]) -> Dict[str, Any]:
        """Open the sealed card envelope and run the intent to a terminal state.

        Re-submitting an intent that already left Initiated returns its
        current state without another issuer round trip.
        """
        current = self._intent_body(intent_id)
        if current["status"] != INITIATED:
            self._log(intent_id, HOP_CLIENT_GATEWAY, "replay_ignored", current["status"])
            return self._public(intent_id, current)
        if current["method"] != "card":
            raise ValidationError("intent is not a card payment")

        if not isinstance(envelope, dict) or "key_id" not in envelope:
            raise EnvelopeTampered("envelope missing key id")
        key_id = str(envelope["key_id"])
        key = self._key_for(key_id)
        try:
            payload = open_envelope(key, envelope)
        except EnvelopeTampered:
            self._log(intent_id, HOP_CLIENT_GATEWAY, "envelope_rejected", "authentication failed")
            raise
        # a nonce is spent only by an authentic envelope; a corrupted copy must
        # not burn the legitimate retry
        self._check_nonce(key_id, str(envelope.get("nonce", "")))

        self._match_payload(intent_id, current, payload)
        pan = str(payload.get("pan", ""))
        if not luhn_valid(pan):
            raise InvalidCard("card number failed checksum")
        self._check_expiry(payload.get("expiry_month"), payload.get("expiry_year"))
        cvv = str(payload.get("cvv", ""))
        if not (cvv.isdigit() and len(cvv) in (3, 4)):
            raise InvalidCard("security code must be 3 or 4 digits")

        self._log(intent_id, HOP_CLIENT_GATEWAY, "envelope_opened", "payload verified")
        body = self._transition(intent_id, SUBMITTED)
        return self._run_issuer_walk(intent_id, body, pan, vault_after={
            "pan": pan,
            "cvv": cvv,
            "expiry_month": int(payload["expiry_month"]),
            "expiry_year": int(payload["expiry_year"]),
        })

    def submit_wallet_payment(self, intent_id: str, wallet_token: str) -> Dict[str, Any]:
        """Redeem a wallet token and run the intent to a terminal state."""
        current = self._intent_body(intent_id)
        if current["status"] != INITIATED:
            self._log(intent_id, HOP_CLIENT_GATEWAY, "replay_ignored", current["status"])
            return self._public(intent_id, current)
        if current["method"] != "wallet":
            raise ValidationError("intent is not a wallet payment")

        instrument = self.wallet.redeem(wallet_token, current["amount"], current["currency"])
        self._log(intent_id, HOP_CLIENT_GATEWAY, "wallet_redeemed", "token verified")
        body = self._transition(intent_id, SUBMITTED)
        return self._run_issuer_walk(intent_id, body, instrument, vault_after=None)

    def _match_payload(
        self, intent_id: str, body: Dict[str, Any], payload: Dict[str, Any]
    ) -> None:
        mismatches = []
        if payload.get("order_id") != body["order_id"]:
            mismatches.append("order_id")
        if payload.get("amount") != body["amount"]:
            mismatches.append("amount")
        if payload.get("currency", body["currency"]) != body["currency"]:
            mismatches.append("currency")
        if mismatches:
            self._log(intent_id, HOP_CLIENT_GATEWAY, "payload_mismatch", ",".join(mismatches))
            raise PayloadMismatch(
                "sealed payload disagrees with intent on: " + ", ".join(mismatches)
            )

    def _run_issuer_walk(
        self,
        intent_id: str,
        body: Dict[str, Any],
        instrument: str,
        vault_after: Optional[Dict[str, Any]],
    ) -> Dict[str, Any]:
        try:
            self._cross_hop(HOP_GATEWAY_PROCESSOR, intent_id)
            self._cross_hop(HOP_PROCESSOR_ISSUER, intent_id)
        except HopDropped as drop:
            failed = self._transition(
                intent_id, FAILED, decline_reason=f"transport_{drop.hop}"
            )
            self._log(intent_id, drop.hop, "dropped", "transport fault")
            return self._public(intent_id, failed)

        key = body.get("idempotency_key")
        with self._lock:
            counter_key = key if key is not None else f"intent:{intent_id}"
            self._issuer_calls[counter_key] = self._issuer_calls.get(counter_key, 0) + 1
        verdict = self.issuer.decide(instrument, body["amount"])
        self._log(intent_id, HOP_PROCESSOR_ISSUER, "issuer_verdict", verdict.verdict)

        if verdict.verdict == "timeout":
            body = self._transition(intent_id, FAILED, decline_reason=verdict.reason)
            return self._public(intent_id, body)

        body = self._transition(intent_id, ISSUER_VERIFIED)
        if verdict.verdict == "declined":
            body = self._transition(intent_id, DECLINED, decline_reason=verdict.reason)
            return self._public(intent_id, body)

        patch: Dict[str, Any] = {}
        if vault_after is not None:
            token = self.tokenize_card(
                vault_after["pan"],
                vault_after["expiry_month"],
                vault_after["expiry_year"],
                vault_after["cvv"],
            )
            patch["card_token_id"] = token["card_token_id"]
        patch["confirmation"] = self._seal_receipt(
            intent_id, body["order_id"], body["amount"], verdict.auth_code or ""
        )
        body = self._transition(intent_id, APPROVED, **patch)
        self._confirm_order(intent_id, body)
        return self._public(intent_id, body)

    def _confirm_order(self, intent_id: str, body: Dict[str, Any]) -> None:
        try:
            self._orders.confirm_order(body["order_id"], intent_id)
            self._log(intent_id, "gateway-order", "order_confirmed", body["order_id"])
        except Exception as exc:  # order raced to Cancelled; keep the approval on record
            self._log(intent_id, "gateway-order", "order_confirm_failed", type(exc).__name__)

    def _cross_hop(self, hop: str, intent_id: str) -> None:
        if self.fault_hook is not None:
            self.fault_hook(hop, {"intent_id": intent_id})
        self._log(intent_id, hop, "forwarded", "")

    def _intent_body(self, intent_id: str) -> Dict[str, Any]:
        try:
            return self._store.get(INTENTS, intent_id).body
        except NotFound:
            raise UnknownIntent(f"no payment intent {intent_id}") from None

    # -- receipts -------------------------------------------------------------

    def _seal_receipt(
        self, intent_id: str, order_id: str, amount: int, auth_code: str
    ) -> Dict[str, Any]:
        receipt = {
            "intent_id": intent_id,
            "order_id": order_id,
            "amount": amount,
            "auth_code": auth_code,
            "issued_at": round(self._clock(), 3),
        }
        tag = hmac.new(self._receipt_key, _canonical(receipt), hashlib.sha256).hexdigest()
        return {**receipt, "tag": tag}

    def verify_receipt(self, receipt: Dict[str, Any]) -> bool:
        """True iff the receipt was sealed here and is byte-for-byte intact."""
        if not isinstance(receipt, dict) or "tag" not in receipt:
            return False
        claimed = receipt["tag"]
        unsigned = {k: v for k, v in receipt.items() if k != "tag"}
        expected = hmac.new(self._receipt_key, _canonical(unsigned), hashlib.sha256).hexdigest()
        return isinstance(claimed, str) and hmac.compare_digest(expected, claimed)

    # -- bookkeeping ----------------------------------------------------------

    def issuer_call_count(self, idempotency_key: str) -> int:
        with self._lock:
            return self._issuer_calls.get(idempotency_key, 0)

    def sweep_stale(self) -> List[str]:
        """Fail intents stuck outside a terminal state past the payment window."""
        cutoff = self._clock() - self._timeout_s
        failed = []
        for doc in self._store.list(INTENTS):
            intent_id, body = doc.id, doc.body
            if body["status"] in TERMINAL_STATUSES or body["updated_at"] > cutoff:
                continue
            try:
                if body["status"] == ISSUER_VERIFIED:
                    # terminal move from here is Approved/Declined only; a stuck
                    # verification decays to Declined rather than limbo
                    self._transition(intent_id, DECLINED, decline_reason="payment_window_expired")
                else:
                    self._transition(intent_id, FAILED, decline_reason="payment_window_expired")
                failed.append(intent_id)
            except (IllegalTransition, UnknownIntent):
                continue
        return failed

    def _log(self, intent_id: str, hop: str, event: str, detail: str) -> None:
        entry = {
            "ts": round(self._clock(), 6),
            "intent_id": intent_id,
            "hop": hop,
            "event": event,
            "detail": detail,
        }
        with self._lock:
            self._flow_log.append(entry)

    def flow_log(self, intent_id: Optional[str] = None) -> List[Dict[str, Any]]:
        with self._lock:
            entries = list(self._flow_log)
        if intent_id is None:
            return entries
        return [e for e in entries if e["intent_id"] == intent_id]

    def export_flow_log(self) -> str:
        return "\n".join(json.dumps(e, sort_keys=True) for e in self.flow_log())

    def status_trail(self, intent_id: str) -> List[str]:
        """Ordered status labels an intent has passed through."""
        return [e["detail"] for e in self.flow_log(intent_id) if e["event"] == "status"]

    def reset_runtime_state(self) -> None:
        """Drop idempotency, nonce, and log state; vault keys survive."""
        with self._lock:
            self._idempotency.clear()
            self._issuer_calls.clear()
            self._flow_log.clear()
            for seen in self._seen_nonces.values():
                seen.clear()
