import base64
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from securemart.auth import IdentityProvider, derive_otp_code, generate_provider_keypair
from securemart.errors import (
    AlreadyConsumed,
    EmailTaken,
    Expired,
    Forbidden,
    InvalidCode,
    InvalidCredentials,
    LockedOut,
    SignatureInvalid,
    TooManyAttempts,
    Unauthenticated,
    ValidationError,
    WeakPassword,
    WrongAudience,
)

from oracles import otp_oracle

ADDR = "10.9.0.1"


# -- registration -------------------------------------------------------------------

def test_register_then_password_login(platform):
    platform.auth.register("a@b.test", "hunter2secure")
    session = platform.auth.login_password("a@b.test", "hunter2secure", ADDR)
    principal = platform.auth.validate_session(session.token)
    assert (principal.email, principal.role) == ("a@b.test", "user")


def test_duplicate_email_rejected_case_insensitively(platform):
    platform.auth.register("dup@b.test", "hunter2secure")
    with pytest.raises(EmailTaken):
        platform.auth.register("DUP@B.TEST", "hunter2secure")


def test_weak_password_rejected(platform):
    with pytest.raises(WeakPassword):
        platform.auth.register("weak@b.test", "short")


def test_malformed_email_rejected(platform):
    with pytest.raises(ValidationError):
        platform.auth.register("not-an-email", "hunter2secure")


def test_plaintext_password_never_persisted(platform):
    password = "hunter2secure-xyzzy"
    platform.auth.register("secret@b.test", password)
    platform.auth.login_password("secret@b.test", password, ADDR)
    blob = json.dumps([d.body for d in platform.store.dump()])
    assert password not in blob
    assert password not in platform.scannable_text()


# -- password login -----------------------------------------------------------------

def test_wrong_password_fails_and_is_recorded(platform):
    platform.auth.register("w@b.test", "hunter2secure")
    before = len(platform.monitor.events())
    with pytest.raises(InvalidCredentials):
        platform.auth.login_password("w@b.test", "wrong-password", ADDR)
    failures = [e for e in platform.monitor.events()[before:] if e.kind == "login_failure"]
    assert len(failures) == 1


def test_unknown_email_indistinguishable_from_bad_password(platform):
    platform.auth.register("known@b.test", "hunter2secure")
    with pytest.raises(InvalidCredentials) as bad_pw:
        platform.auth.login_password("known@b.test", "wrong-password", ADDR)
    with pytest.raises(InvalidCredentials) as bad_email:
        platform.auth.login_password("ghost@b.test", "wrong-password", ADDR)
    assert str(bad_pw.value) == str(bad_email.value)
    assert bad_pw.value.code == bad_email.value.code


def test_lockout_refuses_even_correct_password(platform, clock):
    platform.auth.register("locked@b.test", "hunter2secure")
    for _ in range(5):
        with pytest.raises(InvalidCredentials):
            platform.auth.login_password("locked@b.test", "wrong-password", ADDR)
    with pytest.raises(LockedOut):
        platform.auth.login_password("locked@b.test", "hunter2secure", ADDR)
    # release is inclusive: at exactly lockout expiry the login goes through
    clock.advance(platform.config.lockout_duration_s)
    session = platform.auth.login_password("locked@b.test", "hunter2secure", ADDR)
    assert session.token


# -- OTP second factor ----------------------------------------------------------------

@pytest.fixture
def challenge(otp_platform):
    otp_platform.auth.register("otp@b.test", "hunter2secure")
    return otp_platform.auth.login_password("otp@b.test", "hunter2secure", ADDR)


def test_login_yields_challenge_and_outbox_code(otp_platform, challenge):
    entry = otp_platform.outbox.latest_for("otp@b.test")
    assert entry["challenge_id"] == challenge.challenge_id
    assert len(entry["code"]) == 6 and entry["code"].isdigit()


def test_oracle_computed_code_yields_session(otp_platform, challenge):
    code = otp_oracle(otp_platform.auth.otp_key, challenge.challenge_id)
    assert code == otp_platform.outbox.latest_for("otp@b.test")["code"]
    session = otp_platform.auth.verify_otp(challenge.challenge_id, code)
    assert otp_platform.auth.validate_session(session.token).email == "otp@b.test"


def test_code_is_single_use(otp_platform, challenge):
    code = otp_platform.outbox.latest_for("otp@b.test")["code"]
    otp_platform.auth.verify_otp(challenge.challenge_id, code)
    with pytest.raises(AlreadyConsumed):
        otp_platform.auth.verify_otp(challenge.challenge_id, code)


def test_attempt_cap_stops_after_three(otp_platform, challenge):
    code = otp_platform.outbox.latest_for("otp@b.test")["code"]
    wrong = "000000" if code != "000000" else "000001"
    for _ in range(3):
        with pytest.raises(InvalidCode):
            otp_platform.auth.verify_otp(challenge.challenge_id, wrong)
    # the cap halts everything, including the correct code
    with pytest.raises(TooManyAttempts):
        otp_platform.auth.verify_otp(challenge.challenge_id, code)


def test_challenge_expires_at_boundary(otp_platform, clock, challenge):
    code = otp_platform.outbox.latest_for("otp@b.test")["code"]
    clock.advance(otp_platform.config.otp_ttl_s)
    with pytest.raises(Expired):
        otp_platform.auth.verify_otp(challenge.challenge_id, code)


def test_unknown_challenge_rejected(otp_platform):
    with pytest.raises(InvalidCode):
        otp_platform.auth.verify_otp("no-such-challenge", "123456")


def test_otp_failures_recorded_with_monitor(otp_platform, challenge):
    before = len([e for e in otp_platform.monitor.events() if e.kind == "otp_failure"])
    with pytest.raises(InvalidCode):
        otp_platform.auth.verify_otp(challenge.challenge_id, "999999x")
    after = len([e for e in otp_platform.monitor.events() if e.kind == "otp_failure"])
    assert after == before + 1


def test_payment_otp_consumes_without_session(otp_platform, challenge):
    auth = otp_platform.auth
    code = otp_platform.outbox.latest_for("otp@b.test")["code"]
    session = auth.verify_otp(challenge.challenge_id, code)
    principal = auth.validate_session(session.token)

    step_up = auth.issue_payment_challenge(principal, ADDR)
    step_code = otp_platform.outbox.latest_for("otp@b.test")["code"]
    sessions_before = len(otp_platform.store.list("sessions"))
    auth.verify_payment_otp(principal, step_up.challenge_id, step_code)
    assert len(otp_platform.store.list("sessions")) == sessions_before


def test_payment_otp_rejects_foreign_challenge(otp_platform):
    auth = otp_platform.auth
    auth.register("alice@b.test", "hunter2secure")
    auth.register("bob@b.test", "hunter2secure")
    alice_ref = auth.login_password("alice@b.test", "hunter2secure", ADDR)
    alice_code = otp_platform.outbox.latest_for("alice@b.test")["code"]
    alice = auth.validate_session(auth.verify_otp(alice_ref.challenge_id, alice_code).token)

    bob_ref = auth.login_password("bob@b.test", "hunter2secure", ADDR)
    bob_code = otp_platform.outbox.latest_for("bob@b.test")["code"]
    with pytest.raises(InvalidCode):
        auth.verify_payment_otp(alice, bob_ref.challenge_id, bob_code)


@given(st.binary(min_size=16, max_size=48), st.text(min_size=1, max_size=64))
@settings(max_examples=200, deadline=None)
def test_code_derivation_matches_oracle(key, challenge_id):
    assert derive_otp_code(key, challenge_id) == otp_oracle(key, challenge_id)


# -- sessions --------------------------------------------------------------------------

def test_session_expires_after_ttl(platform, clock):
    platform.auth.register("ttl@b.test", "hunter2secure")
    session = platform.auth.login_password("ttl@b.test", "hunter2secure", ADDR)
    clock.advance(platform.config.session_ttl_s)
    with pytest.raises(Unauthenticated):
        platform.auth.validate_session(session.token)


def test_logout_revokes_and_is_idempotent(platform):
    platform.auth.register("out@b.test", "hunter2secure")
    session = platform.auth.login_password("out@b.test", "hunter2secure", ADDR)
    platform.auth.logout(session.token)
    with pytest.raises(Unauthenticated):
        platform.auth.validate_session(session.token)
    platform.auth.logout(session.token)          # second revoke: no error
    platform.auth.logout("never-issued-token")   # unknown: no error


def test_session_tokens_are_long_and_unique(platform):
    tokens = set()
    for i in range(20):
        platform.auth.register(f"u{i}@b.test", "hunter2secure")
        session = platform.auth.login_password(f"u{i}@b.test", "hunter2secure", ADDR)
        assert len(session.token) >= 32
        tokens.add(session.token)
    assert len(tokens) == 20


def test_set_role_requires_admin(platform, admin):
    shopper = platform.auth.register("promo@b.test", "hunter2secure")
    with pytest.raises(Forbidden):
        platform.auth.set_role(shopper, shopper.account_id, "admin")
    platform.auth.set_role(admin, shopper.account_id, "admin")
    session = platform.auth.login_password("promo@b.test", "hunter2secure", ADDR)
    assert session.role == "admin"


# -- federated sign-in -------------------------------------------------------------------

@pytest.fixture
def provider(platform):
    return platform.sandbox_provider


def assertion_for(platform, provider, subject="sub-1", email="fed@b.test", **overrides):
    params = dict(
        subject=subject,
        email=email,
        audience=platform.config.provider_audience,
        expires_at=platform.clock() + 600,
    )
    params.update(overrides)
    return provider.mint_assertion(**params)


def test_federated_round_trip_and_reuse(platform, provider):
    session = platform.auth.federated_sign_in(assertion_for(platform, provider))
    principal = platform.auth.validate_session(session.token)
    assert principal.email == "fed@b.test"

    again = platform.auth.federated_sign_in(assertion_for(platform, provider))
    assert again.account_id == session.account_id  # keyed by (issuer, subject)


def test_flipped_payload_byte_rejected(platform, provider):
    assertion = assertion_for(platform, provider)
    raw = bytearray(base64.b64decode(assertion["payload"]))
    raw[len(raw) // 2] ^= 0x01
    tampered = dict(assertion, payload=base64.b64encode(bytes(raw)).decode())
    with pytest.raises(SignatureInvalid):
        platform.auth.federated_sign_in(tampered)


def test_wrong_audience_rejected(platform, provider):
    assertion = assertion_for(platform, provider, audience="someone-else")
    with pytest.raises(WrongAudience):
        platform.auth.federated_sign_in(assertion)


def test_expired_assertion_rejected(platform, provider):
    assertion = assertion_for(platform, provider, expires_at=platform.clock() - 1)
    with pytest.raises(Expired):
        platform.auth.federated_sign_in(assertion)


def test_wrong_issuer_rejected(platform):
    private_pem, _ = generate_provider_keypair()
    rogue = IdentityProvider(private_pem, issuer="https://rogue.example")
    assertion = rogue.mint_assertion(
        "sub-1", "fed@b.test", platform.config.provider_audience,
        platform.clock() + 600,
    )
    with pytest.raises(SignatureInvalid):
        platform.auth.federated_sign_in(assertion)


def test_unconfigured_key_cannot_verify_foreign_assertions(platform):
    # an assertion signed by some other provider's key must not verify
    private_pem, _ = generate_provider_keypair()
    imposter = IdentityProvider(private_pem, issuer=platform.config.provider_issuer)
    assertion = imposter.mint_assertion(
        "sub-1", "fed@b.test", platform.config.provider_audience,
        platform.clock() + 600,
    )
    with pytest.raises(SignatureInvalid):
        platform.auth.federated_sign_in(assertion)
