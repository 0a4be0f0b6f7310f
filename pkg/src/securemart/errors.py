"""Exception taxonomy shared by every module.

Each error carries a stable snake_case ``code`` that the API layer maps to an
HTTP status and puts in the uniform error envelope.  Raise these instead of
returning sentinel values; the service boundary is the only place they are
translated.
"""

from __future__ import annotations


class PlatformError(Exception):
    """Base class for every domain error the platform can raise."""

    code = "internal_error"

    def __init__(self, message: str = "", **details):
        super().__init__(message or self.code)
        self.message = message or self.code
        self.details = details


# --- store kernel ---------------------------------------------------------

class RevisionConflict(PlatformError):
    code = "revision_conflict"


class NotFound(PlatformError):
    code = "not_found"


class UnknownSnapshot(PlatformError):
    code = "unknown_snapshot"


# --- validation / generic -------------------------------------------------

class ValidationError(PlatformError):
    code = "validation_error"


class Forbidden(PlatformError):
    code = "forbidden"


class Unauthenticated(PlatformError):
    code = "unauthenticated"


# --- catalog ---------------------------------------------------------------

class UnknownCategory(PlatformError):
    code = "unknown_category"


class UnknownProduct(PlatformError):
    code = "unknown_product"


class CategoryInUse(PlatformError):
    code = "category_in_use"


class InsufficientStock(PlatformError):
    code = "insufficient_stock"


# --- accounts / auth --------------------------------------------------------

class EmailTaken(PlatformError):
    code = "email_taken"


class WeakPassword(PlatformError):
    code = "weak_password"


class InvalidCredentials(PlatformError):
    code = "invalid_credentials"


class LockedOut(PlatformError):
    code = "locked_out"


class InvalidCode(PlatformError):
    code = "invalid_code"


class Expired(PlatformError):
    """Expired OTP challenge, federated assertion, or wallet token."""

    code = "expired"


class TooManyAttempts(PlatformError):
    code = "too_many_attempts"


class AlreadyConsumed(PlatformError):
    code = "already_consumed"


class SignatureInvalid(PlatformError):
    code = "signature_invalid"


class WrongAudience(PlatformError):
    code = "wrong_audience"


# --- cart / orders ----------------------------------------------------------

class EmptyCart(PlatformError):
    code = "empty_cart"


class IllegalTransition(PlatformError):
    code = "illegal_transition"


class AmountMismatch(PlatformError):
    code = "amount_mismatch"


class IntentNotApproved(PlatformError):
    code = "intent_not_approved"


class UnknownOrder(PlatformError):
    code = "unknown_order"


# --- payments ---------------------------------------------------------------

class InvalidCard(PlatformError):
    code = "invalid_card"


class ExpiredCard(PlatformError):
    code = "expired_card"


class UnknownIntent(PlatformError):
    code = "unknown_intent"


class EnvelopeTampered(PlatformError):
    code = "envelope_tampered"


class PayloadMismatch(PlatformError):
    code = "payload_mismatch"


class WalletTokenInvalid(PlatformError):
    code = "wallet_token_invalid"


class WalletTokenExpired(PlatformError):
    code = "wallet_token_expired"


# --- harness ----------------------------------------------------------------

class UnknownProfile(PlatformError):
    code = "unknown_profile"


class StepFailed(PlatformError):
    code = "step_failed"

    def __init__(self, index: int, expected: str, actual: str):
        super().__init__(
            f"step {index}: expected {expected!r}, got {actual!r}",
            index=index, expected=expected, actual=actual,
        )
        self.index = index
        self.expected = expected
        self.actual = actual


class InvariantViolation(PlatformError):
    code = "invariant_violation"
