"""Platform configuration with environment overrides."""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from typing import Optional

VERSION = "0.1.0"


def _env_int(name: str, default: int) -> int:
    raw = os.environ.get(name)
    return int(raw) if raw else default


def _env_float(name: str, default: float) -> float:
    raw = os.environ.get(name)
    return float(raw) if raw else default


def _env_bool(name: str, default: bool) -> bool:
    raw = os.environ.get(name)
    if raw is None:
        return default
    return raw.strip().lower() in ("1", "true", "yes", "on")


@dataclass(frozen=True)
class PlatformConfig:
    # OTP second factor
    otp_digits: int = 6
    otp_ttl_s: float = 300.0
    otp_max_attempts: int = 3
    otp_required_for_login: bool = True
    otp_required_for_payment: bool = True

    # lockout thresholds (failures K within window W lock for duration D)
    lockout_threshold: int = 5
    lockout_window_s: float = 900.0
    lockout_duration_s: float = 1800.0
    monitoring_enabled: bool = True

    # sessions and orders
    session_ttl_s: float = 86400.0
    order_ttl_s: float = 1800.0
    payment_timeout_s: float = 120.0

    # password hashing (scrypt); harness profiles lower cost for throughput
    scrypt_n: int = 2 ** 14
    scrypt_r: int = 8
    scrypt_p: int = 1

    # federated identity provider
    provider_issuer: str = "https://id.sandbox-provider.test"
    provider_audience: str = "securemart"
    provider_pubkey_path: Optional[str] = None

    # service
    store_path: Optional[str] = None
    sandbox: bool = False
    version: str = VERSION

    @classmethod
    def from_env(cls, **overrides) -> "PlatformConfig":
        cfg = cls(
            otp_ttl_s=_env_float("OTP_TTL_S", cls.otp_ttl_s),
            otp_max_attempts=_env_int("OTP_MAX_ATTEMPTS", cls.otp_max_attempts),
            otp_required_for_login=_env_bool("OTP_LOGIN_REQUIRED", cls.otp_required_for_login),
            otp_required_for_payment=_env_bool("OTP_PAYMENT_REQUIRED", cls.otp_required_for_payment),
            lockout_threshold=_env_int("LOCKOUT_THRESHOLD", cls.lockout_threshold),
            lockout_window_s=_env_float("LOCKOUT_WINDOW_S", cls.lockout_window_s),
            lockout_duration_s=_env_float("LOCKOUT_DURATION_S", cls.lockout_duration_s),
            provider_issuer=os.environ.get("PROVIDER_ISSUER", cls.provider_issuer),
            provider_audience=os.environ.get("PROVIDER_AUDIENCE", cls.provider_audience),
            provider_pubkey_path=os.environ.get("PROVIDER_PUBKEY_PATH"),
            store_path=os.environ.get("STORE_PATH"),
        )
        return replace(cfg, **overrides) if overrides else cfg

    def with_overrides(self, **overrides) -> "PlatformConfig":
        return replace(self, **overrides)


# Lightweight hashing profile for tests and the harness: same scheme, cheaper
# parameters, so thousand-login simulations stay inside their time budgets.
FAST_HASH_OVERRIDES = {"scrypt_n": 2 ** 11, "scrypt_r": 8, "scrypt_p": 1}
