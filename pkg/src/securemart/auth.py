"""Accounts, password + OTP two-factor login, federated sign-in, sessions.

Data-handling rules enforced here:

* plaintext passwords and OTP codes are never persisted or logged — accounts
  store a salted scrypt digest, challenges store a code digest, and the code
  itself travels only through the pluggable delivery outbox;
* credential failure is indistinguishable for unknown email vs wrong
  password, and both paths do the same hash work;
* sessions are opaque random bearer tokens (>=128 bits) and are issued only
  after a completed second factor (OTP or the federated provider) unless the
  login OTP gate is explicitly switched off in config.

OTP codes derive as ``HMAC(service_otp_key, challenge_id)`` put through the
classic dynamic truncation, reduced mod 10^6 and zero-padded to 6 digits.
"""

from __future__ import annotations

import base64
import hashlib
import hmac
import json
import re
import secrets
import threading
import time
import uuid
from dataclasses import dataclass
from typing import Callable, Optional

from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives import serialization
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)

from .config import PlatformConfig
from .errors import (
    AlreadyConsumed,
    EmailTaken,
    Expired,
    Forbidden,
    InvalidCode,
    InvalidCredentials,
    LockedOut,
    RevisionConflict,
    SignatureInvalid,
    TooManyAttempts,
    Unauthenticated,
    ValidationError,
    WeakPassword,
    WrongAudience,
)
from .kernel import DocumentStore, NotFound
from .monitor import SecurityMonitor

ACCOUNTS = "accounts"
EMAIL_INDEX = "account_email_index"
FEDERATED_INDEX = "federated_index"
CHALLENGES = "otp_challenges"
SESSIONS = "sessions"

_EMAIL_RE = re.compile(r"^[^@\s]+@[^@\s]+\.[^@\s]+$")
MIN_PASSWORD_LEN = 8


@dataclass(frozen=True)
class Principal:
    account_id: str
    role: str
    email: str


@dataclass(frozen=True)
class OtpChallengeRef:
    challenge_id: str
    expires_at: float

    def as_dict(self) -> dict:
        return {"challenge_id": self.challenge_id, "expires_at": self.expires_at}


@dataclass(frozen=True)
class Session:
    token: str
    account_id: str
    role: str
    email: str
    issued_at: float
    expires_at: float

    def as_dict(self) -> dict:
        return {
            "token": self.token,
            "account_id": self.account_id,
            "role": self.role,
            "email": self.email,
            "issued_at": self.issued_at,
            "expires_at": self.expires_at,
        }


class OtpOutbox:
    """Pluggable OTP delivery sink; in sandbox mode it backs /dev/otp-outbox."""

    def __init__(self):
        self._lock = threading.Lock()
        self._entries: list[dict] = []

    def deliver(self, challenge_id: str, email: str, code: str, issued_at: float) -> None:
        with self._lock:
            self._entries.append({
                "challenge_id": challenge_id,
                "email": email,
                "code": code,
                "issued_at": issued_at,
            })

    def entries(self) -> list[dict]:
        with self._lock:
            return [dict(e) for e in self._entries]

    def latest_for(self, email: str) -> Optional[dict]:
        for entry in reversed(self.entries()):
            if entry["email"] == email:
                return entry
        return None

    def clear(self) -> None:
        with self._lock:
            self._entries.clear()


# -- password hashing ----------------------------------------------------------

def hash_password(password: str, n: int, r: int, p: int, salt: Optional[bytes] = None) -> str:
    salt = salt if salt is not None else secrets.token_bytes(16)
    digest = hashlib.scrypt(password.encode(), salt=salt, n=n, r=r, p=p, dklen=32)
    return f"scrypt${n}${r}${p}${salt.hex()}${digest.hex()}"


def verify_password(password: str, encoded: str) -> bool:
    try:
        scheme, n, r, p, salt_hex, digest_hex = encoded.split("$")
        if scheme != "scrypt":
            return False
        digest = hashlib.scrypt(
            password.encode(), salt=bytes.fromhex(salt_hex),
            n=int(n), r=int(r), p=int(p), dklen=32,
        )
        return hmac.compare_digest(digest.hex(), digest_hex)
    except (ValueError, TypeError):
        return False


# -- OTP derivation ----------------------------------------------------------------

def derive_otp_code(otp_key: bytes, challenge_id: str, digits: int = 6) -> str:
    """HMAC the challenge id, dynamic-truncate, reduce mod 10^digits."""
    mac = hmac.new(otp_key, challenge_id.encode(), hashlib.sha256).digest()
    offset = mac[-1] & 0x0F
    binary = int.from_bytes(mac[offset:offset + 4], "big") & 0x7FFFFFFF
    return str(binary % 10 ** digits).zfill(digits)


def _code_digest(challenge_id: str, code: str) -> str:
    return hashlib.sha256(f"{challenge_id}:{code}".encode()).hexdigest()


# -- federated provider (local simulator with real verification semantics) ---------

def generate_provider_keypair() -> tuple[bytes, bytes]:
    """(private_pem, public_pem) for a sandbox identity provider."""
    private = Ed25519PrivateKey.generate()
    private_pem = private.private_bytes(
        serialization.Encoding.PEM,
        serialization.PrivateFormat.PKCS8,
        serialization.NoEncryption(),
    )
    public_pem = private.public_key().public_bytes(
        serialization.Encoding.PEM,
        serialization.PublicFormat.SubjectPublicKeyInfo,
    )
    return private_pem, public_pem


def canonical_assertion_payload(payload: dict) -> bytes:
    return json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()


class IdentityProvider:
    """Signs federated assertions the way an external provider would."""

    def __init__(self, private_pem: bytes, issuer: str):
        self._key = serialization.load_pem_private_key(private_pem, password=None)
        self.issuer = issuer

    def mint_assertion(self, subject: str, email: str, audience: str, expires_at: float) -> dict:
        payload = {
            "issuer": self.issuer,
            "audience": audience,
            "subject": subject,
            "email": email,
            "expires_at": expires_at,
        }
        raw = canonical_assertion_payload(payload)
        signature = self._key.sign(raw)
        return {
            "payload": base64.b64encode(raw).decode(),
            "signature": base64.b64encode(signature).decode(),
        }


class AuthService:
    def __init__(
        self,
        store: DocumentStore,
        security: SecurityMonitor,
        outbox: OtpOutbox,
        config: PlatformConfig,
        clock: Callable[[], float] = time.time,
        otp_key: Optional[bytes] = None,
        provider_pubkey_pem: Optional[bytes] = None,
    ):
        self.store = store
        self.security = security
        self.outbox = outbox
        self.config = config
        self.clock = clock
        self.otp_key = otp_key if otp_key is not None else secrets.token_bytes(32)
        self._provider_pubkey: Optional[Ed25519PublicKey] = None
        if provider_pubkey_pem:
            self.set_provider_pubkey(provider_pubkey_pem)
        # same-cost verification target for unknown emails
        self._decoy_hash = hash_password(
            secrets.token_hex(8), config.scrypt_n, config.scrypt_r, config.scrypt_p
        )

    def set_provider_pubkey(self, public_pem: bytes) -> None:
        key = serialization.load_pem_public_key(public_pem)
        if not isinstance(key, Ed25519PublicKey):
            raise ValidationError("provider key must be Ed25519")
        self._provider_pubkey = key

    # -- registration ------------------------------------------------------------

    def register(self, email: str, password: str, role: str = "user") -> Principal:
        email = self._normalized_email(email)
        if len(password or "") < MIN_PASSWORD_LEN:
            raise WeakPassword(f"password must be at least {MIN_PASSWORD_LEN} characters")
        account_id = uuid.uuid4().hex[:12]
        try:
            self.store.put(EMAIL_INDEX, email, {"account_id": account_id}, expected_revision=0)
        except RevisionConflict:
            raise EmailTaken(email) from None
        encoded = hash_password(
            password, self.config.scrypt_n, self.config.scrypt_r, self.config.scrypt_p
        )
        self.store.put(ACCOUNTS, account_id, {
            "email": email,
            "password_hash": encoded,
            "role": role,
            "federated_subject": None,
            "created_at": self.clock(),
        })
        return Principal(account_id, role, email)

    def set_role(self, admin: Principal, account_id: str, role: str) -> None:
        if admin.role != "admin":
            raise Forbidden("admin role required")
        if role not in ("user", "admin"):
            raise ValidationError(f"unknown role: {role}")
        doc = self.store.get(ACCOUNTS, account_id)
        body = dict(doc.body)
        body["role"] = role
        self.store.put(ACCOUNTS, account_id, body, expected_revision=doc.revision)

    # -- password + OTP login -------------------------------------------------------

    def login_password(
        self,
        email: str,
        password: str,
        client_addr: str,
        label: str = "",
    ):
        """First factor.  Returns an OtpChallengeRef (or a Session when the
        login OTP gate is switched off)."""
        email = (email or "").strip().lower()
        verdict = self.security.check_allowed(email, client_addr)
        if not verdict["allowed"]:
            raise LockedOut("too many failures", locked_until=verdict["locked_until"])

        account = self._account_by_email(email)
        stored_hash = account["body"]["password_hash"] if account else self._decoy_hash
        ok = bool(stored_hash) and verify_password(password, stored_hash)
        if account is None or not ok:
            self.security.record("login_failure", email, client_addr, detail=label)
            raise InvalidCredentials("invalid email or password")

        if not self.config.otp_required_for_login:
            session = self._issue_session(account["id"], account["body"], client_addr, label)
            return session

        return self._issue_challenge(account["id"], account["body"]["email"], client_addr, label)

    def _issue_challenge(self, account_id: str, email: str, client_addr: str, label: str) -> OtpChallengeRef:
        now = self.clock()
        challenge_id = uuid.uuid4().hex
        code = derive_otp_code(self.otp_key, challenge_id, self.config.otp_digits)
        self.store.put(CHALLENGES, challenge_id, {
            "account_id": account_id,
            "email": email,
            "client_addr": client_addr,
            "label": label,
            "code_digest": _code_digest(challenge_id, code),
            "issued_at": now,
            "expires_at": now + self.config.otp_ttl_s,
            "attempts_remaining": self.config.otp_max_attempts,
            "consumed": False,
        })
        self.outbox.deliver(challenge_id, email, code, now)
        return OtpChallengeRef(challenge_id, now + self.config.otp_ttl_s)

    def issue_payment_challenge(self, principal: Principal, client_addr: str) -> OtpChallengeRef:
        """Fresh OTP challenge gating a payment confirmation."""
        return self._issue_challenge(principal.account_id, principal.email, client_addr, "")

    def verify_otp(self, challenge_id: str, code: str) -> Session:
        """Second login factor: a correct code turns the challenge into a session."""
        body = self._consume_challenge(challenge_id, code)
        account = self.store.get(ACCOUNTS, body["account_id"])
        return self._issue_session(
            body["account_id"], account.body, body["client_addr"], body["label"]
        )

    def verify_payment_otp(self, principal: Principal, challenge_id: str, code: str) -> None:
        """Step-up check before a payment; consumes the challenge, mints nothing."""
        body = self._consume_challenge(challenge_id, code)
        if body["account_id"] != principal.account_id:
            raise InvalidCode("challenge belongs to a different account")

    def _consume_challenge(self, challenge_id: str, code: str) -> dict:
        """Consume-or-decrement is CAS-guarded, so a racing duplicate of the
        same code cannot be double-spent.  Returns the challenge body on match."""
        while True:
            try:
                doc = self.store.get(CHALLENGES, challenge_id)
            except NotFound:
                raise InvalidCode("unknown challenge") from None
            body = doc.body
            now = self.clock()
            if body["consumed"]:
                raise AlreadyConsumed(challenge_id)
            if now >= body["expires_at"]:
                raise Expired("challenge expired")
            if body["attempts_remaining"] <= 0:
                raise TooManyAttempts(challenge_id)

            matches = hmac.compare_digest(
                _code_digest(challenge_id, code or ""), body["code_digest"]
            )
            update = dict(body)
            if matches:
                update["consumed"] = True
            else:
                update["attempts_remaining"] = body["attempts_remaining"] - 1
            try:
                self.store.put(CHALLENGES, challenge_id, update, expected_revision=doc.revision)
            except RevisionConflict:
                continue  # racing attempt got there first; re-read and re-decide
            if matches:
                return body
            self.security.record(
                "otp_failure", body["email"], body["client_addr"], detail=body["label"]
            )
            raise InvalidCode("wrong code")

    # -- federated sign-in --------------------------------------------------------------

    def federated_sign_in(self, assertion: dict, client_addr: str = "federated") -> Session:
        if self._provider_pubkey is None:
            raise ValidationError("no federated provider configured")
        try:
            raw = base64.b64decode(assertion["payload"])
            signature = base64.b64decode(assertion["signature"])
        except (KeyError, TypeError, ValueError):
            raise SignatureInvalid("malformed assertion") from None
        try:
            self._provider_pubkey.verify(signature, raw)
        except InvalidSignature:
            raise SignatureInvalid("assertion signature does not verify") from None
        try:
            payload = json.loads(raw)
        except ValueError:
            raise SignatureInvalid("assertion payload is not JSON") from None

        if payload.get("issuer") != self.config.provider_issuer:
            raise SignatureInvalid(f"unexpected issuer: {payload.get('issuer')}")
        if payload.get("audience") != self.config.provider_audience:
            raise WrongAudience(str(payload.get("audience")))
        if self.clock() >= float(payload.get("expires_at", 0)):
            raise Expired("assertion expired")

        account_id, body = self._provision_federated(payload)
        return self._issue_session(account_id, body, client_addr, "")

    def _provision_federated(self, payload: dict) -> tuple[str, dict]:
        index_id = f"{payload['issuer']}|{payload['subject']}"
        try:
            ref = self.store.get(FEDERATED_INDEX, index_id)
            account = self.store.get(ACCOUNTS, ref.body["account_id"])
            return account.id, account.body
        except NotFound:
            pass
        account_id = uuid.uuid4().hex[:12]
        email = str(payload.get("email") or f"{payload['subject']}@federated.local").lower()
        body = {
            "email": email,
            "password_hash": None,  # federated-only account
            "role": "user",
            "federated_subject": payload["subject"],
            "created_at": self.clock(),
        }
        try:
            self.store.put(FEDERATED_INDEX, index_id, {"account_id": account_id},
                           expected_revision=0)
        except RevisionConflict:
            ref = self.store.get(FEDERATED_INDEX, index_id)
            account = self.store.get(ACCOUNTS, ref.body["account_id"])
            return account.id, account.body
        self.store.put(ACCOUNTS, account_id, body)
        self.store.put(EMAIL_INDEX, email, {"account_id": account_id})
        return account_id, body

    # -- sessions ------------------------------------------------------------------------

    def _issue_session(self, account_id: str, account_body: dict, client_addr: str, label: str) -> Session:
        now = self.clock()
        token = secrets.token_urlsafe(32)  # 256 bits
        session = Session(
            token=token,
            account_id=account_id,
            role=account_body["role"],
            email=account_body["email"],
            issued_at=now,
            expires_at=now + self.config.session_ttl_s,
        )
        self.store.put(SESSIONS, token, {
            "account_id": account_id,
            "role": session.role,
            "email": session.email,
            "issued_at": now,
            "expires_at": session.expires_at,
            "revoked": False,
        })
        self.security.record("login_success", session.email, client_addr, detail=label)
        return session

    def validate_session(self, token: str) -> Principal:
        try:
            doc = self.store.get(SESSIONS, token or "")
        except NotFound:
            raise Unauthenticated("unknown session token") from None
        body = doc.body
        if body["revoked"] or self.clock() >= body["expires_at"]:
            raise Unauthenticated("session revoked or expired")
        return Principal(body["account_id"], body["role"], body["email"])

    def logout(self, token: str) -> None:
        """Revoke a session; idempotent, unknown tokens are ignored."""
        try:
            doc = self.store.get(SESSIONS, token or "")
        except NotFound:
            return
        if doc.body["revoked"]:
            return
        body = dict(doc.body)
        body["revoked"] = True
        try:
            self.store.put(SESSIONS, token, body, expected_revision=doc.revision)
        except RevisionConflict:
            return  # concurrent logout already won
        self.security.record("session_revoked", body["email"], "-")

    # -- helpers ---------------------------------------------------------------------------

    def get_account(self, account_id: str) -> dict:
        doc = self.store.get(ACCOUNTS, account_id)
        return {"id": doc.id, **doc.body}

    def _account_by_email(self, email: str) -> Optional[dict]:
        try:
            ref = self.store.get(EMAIL_INDEX, email)
            doc = self.store.get(ACCOUNTS, ref.body["account_id"])
            return {"id": doc.id, "body": doc.body}
        except NotFound:
            return None

    def _normalized_email(self, email: str) -> str:
        email = (email or "").strip().lower()
        if not _EMAIL_RE.match(email):
            raise ValidationError(f"not a valid email address: {email!r}")
        return email
