"""Release gate.  One test per shipping criterion, run at full stated scale.

Each test here is a contract: the published seeds, the published sizes, the
published tolerances.  They call the same entry points an operator would
(the CLI for the two report tables, the library for the property suites),
so this file is slower than the per-module suites.  Nothing in here may be
weakened to make a build pass; a red line below means the build is wrong.
"""

import base64
import hashlib
import json
import random
import re
import time
from collections import Counter

import pytest

from securemart import cli
from securemart.errors import (
    EnvelopeTampered,
    Expired,
    InvalidCode,
    InvalidCredentials,
    LockedOut,
    SignatureInvalid,
    TooManyAttempts,
    WrongAudience,
)
from securemart.harness import FaultProfile, attack_sim, journey_metrics, stress
from securemart.orders import cart_total
from securemart.paygate import luhn_valid, new_client_key, open_envelope, seal_envelope
from securemart.paygate.gateway import INITIATED, INTENT_TRANSITIONS

from conftest import make_platform, seed_product
from oracles import (
    luhn_oracle,
    otp_oracle,
    recount_attack_report,
    recount_cart_total,
    recount_journey_report,
)


def run_cli_json(capsys, argv):
    """Invoke the real CLI and hand back its machine-readable payload."""
    started = time.perf_counter()
    code = cli.main(["--json"] + argv)
    elapsed = time.perf_counter() - started
    assert code == 0
    return json.loads(capsys.readouterr().out), elapsed


# -- 1. credential-stuffing reduction ------------------------------------------------


def test_monitoring_cuts_breaches_to_published_ratio(capsys):
    payload, elapsed = run_cli_json(capsys, ["harness", "table2", "--seed", "7"])

    off = payload["monitoring_off"]["successful_breaches"]
    on = payload["monitoring_on"]["successful_breaches"]
    ratio = payload["breach_ratio"]

    assert off > 0, "the unmonitored arm must actually be breachable"
    assert on <= 0.25 * off, f"monitoring on: {on} breaches vs {off} off"
    assert abs(ratio - 5 / 23) <= 0.03, f"breach ratio {ratio:.4f} off target"
    assert elapsed < 60.0, f"table2 took {elapsed:.1f}s"


# -- 2. journey-time model -----------------------------------------------------------

JOURNEY_TARGETS = {
    # profile -> (navigation s, transaction s, error %)
    "baseline": (15.5, 30.2, 5.4),
    "optimized": (8.1, 15.8, 2.1),
}


def test_journey_model_reproduces_published_numbers(capsys):
    payload, elapsed = run_cli_json(capsys, ["harness", "table1", "--seed", "7"])

    for profile, (nav, txn, err) in JOURNEY_TARGETS.items():
        report = payload[profile]
        assert report["avg_navigation_time_s"] == pytest.approx(nav, rel=0.10)
        assert report["transaction_completion_time_s"] == pytest.approx(txn, rel=0.10)
        assert report["user_error_rate_pct"] == pytest.approx(err, rel=0.10)
        # the report must say what it is: a calibrated model, not a measurement
        assert "calibrated simulation" in report["notes"]
    assert elapsed < 120.0, f"table1 took {elapsed:.1f}s"


# -- 3. payment flow properties ------------------------------------------------------

FIXTURE_PANS = (
    "4242424242424242",  # approved
    "4000000000000002",  # declined: insufficient_funds
    "4000000000000119",  # issuer timeout
    "4000000000009995",  # declined: do_not_honor
)
RESERVED_SUFFIXES = ("0002", "0119", "9995")


def fresh_pan(rng):
    # random Luhn-valid PANs that the issuer fixture approves
    while True:
        body = "4" + "".join(str(rng.randrange(10)) for _ in range(14))
        pan = next(body + str(d) for d in range(10) if luhn_oracle(body + str(d)))
        if pan[-4:] not in RESERVED_SUFFIXES:
            return pan


def sealed_card(key, key_id, intent, pan, rng):
    return seal_envelope(key, key_id, {
        "pan": pan,
        "expiry_month": 12,
        "expiry_year": 2031,
        "cvv": "123",
        "amount": intent["amount"],
        "currency": intent["currency"],
        "order_id": intent["order_id"],
        "nonce": f"{rng.getrandbits(64):016x}",
    })


def flip_one_bit(envelope, field, bit):
    blob = bytearray(base64.b64decode(envelope[field]))
    blob[bit // 8] ^= 1 << (bit % 8)
    return dict(envelope, **{field: base64.b64encode(bytes(blob)).decode()})


def test_payment_suite_leaks_no_pan_and_never_double_charges(platform, admin):
    rng = random.Random(7)
    gateway = platform.gateway
    products = [
        seed_product(platform, admin, name=f"Gate item {i}",
                     price=rng.randint(150, 9950), stock=10_000)
        for i in range(25)
    ]
    key, key_id = new_client_key(), None
    key_id = gateway.register_client_key(key)

    used_pans = set(FIXTURE_PANS)
    outcomes = Counter()
    keys_used = []
    for i in range(500):
        account = f"accept-{i}"
        platform.orders.add_to_cart(account, rng.choice(products).id, rng.randint(1, 3))
        order = platform.orders.begin_checkout(account)
        idem = f"accept-key-{i}"
        keys_used.append(idem)
        method = "wallet" if rng.random() < 0.25 else "card"
        intent = gateway.create_intent(
            order.id, order.total, method=method, idempotency_key=idem)

        if method == "wallet":
            token = gateway.wallet.issue_token(order.total)
            result = gateway.submit_wallet_payment(intent["intent_id"], token["token"])
        else:
            pan = fresh_pan(rng) if rng.random() < 0.5 else rng.choice(FIXTURE_PANS)
            used_pans.add(pan)
            envelope = sealed_card(key, key_id, intent, pan, rng)
            if rng.random() < 0.10:
                # a corrupted copy first: must be rejected without burning the nonce
                field = "ciphertext" if rng.random() < 0.5 else "nonce"
                bit = rng.randrange(len(base64.b64decode(envelope[field])) * 8)
                with pytest.raises(EnvelopeTampered):
                    gateway.submit_card_payment(
                        intent["intent_id"], flip_one_bit(envelope, field, bit))
            result = gateway.submit_card_payment(intent["intent_id"], envelope)

        if rng.random() < 0.20:
            # client retry of the same idempotency key: same intent, no new charge
            replay = gateway.create_intent(
                order.id, order.total, method=method, idempotency_key=idem)
            assert replay["intent_id"] == intent["intent_id"]
            assert replay["status"] == result["status"]
        outcomes[result["status"]] += 1

    # the traffic mix actually exercised every verdict
    assert outcomes["Approved"] > 0 and outcomes["Declined"] > 0
    assert outcomes["Failed"] > 0

    # no plaintext PAN anywhere the platform persists or logs
    text = platform.scannable_text()
    pan_scan = re.compile("|".join(sorted(used_pans)))
    hit = pan_scan.search(text)
    assert hit is None, f"plaintext PAN persisted: ...{hit.group()[-4:]}"

    # every intent walked a legal path
    for doc in platform.store.list("payment_intents"):
        trail = [INITIATED] + gateway.status_trail(doc.id)
        for a, b in zip(trail, trail[1:]):
            assert b in INTENT_TRANSITIONS[a], f"{doc.id}: {a} -> {b}"

    # at most one issuer call ever happens per idempotency key
    calls = {k: gateway.issuer_call_count(k) for k in keys_used}
    assert all(n <= 1 for n in calls.values()), {
        k: n for k, n in calls.items() if n > 1}

    # 10,000 single-bit corruptions of a sealed envelope: zero false accepts
    target = sealed_card(key, key_id, {"amount": 4500, "currency": "USD",
                                       "order_id": "ord-bitflip"}, FIXTURE_PANS[0], rng)
    false_accepts = 0
    for _ in range(10_000):
        field = "ciphertext" if rng.random() < 0.8 else "nonce"
        bit = rng.randrange(len(base64.b64decode(target[field])) * 8)
        try:
            open_envelope(key, flip_one_bit(target, field, bit))
            false_accepts += 1
        except EnvelopeTampered:
            pass
    assert false_accepts == 0
    assert open_envelope(key, target)["pan"] == FIXTURE_PANS[0]  # intact copy still opens


# -- 4. authentication properties ----------------------------------------------------


def test_auth_suite_otp_space_federated_and_lockout(otp_platform, clock):
    auth = otp_platform.auth
    store = otp_platform.store

    # the full 6-digit space matches the stored verifier at exactly one code,
    # and that code is the one an independent HMAC derivation predicts
    auth.register("otp-target@accept.test", "otp-target-pass-1")
    challenge = auth.login_password("otp-target@accept.test", "otp-target-pass-1", "10.9.0.1")
    cid = challenge.challenge_id
    stored_digest = store.get("otp_challenges", cid).body["code_digest"]
    prefix = f"{cid}:".encode()
    matches = [
        code for code in (f"{n:06d}" for n in range(10 ** 6))
        if hashlib.sha256(prefix + code.encode()).hexdigest() == stored_digest
    ]
    assert matches == [otp_oracle(auth.otp_key, cid)]

    # the online path halts after 3 attempts, even for the true code
    real_code = matches[0]
    wrong = "000000" if real_code != "000000" else "000001"
    for _ in range(3):
        with pytest.raises(InvalidCode):
            auth.verify_otp(cid, wrong)
    with pytest.raises(TooManyAttempts):
        auth.verify_otp(cid, real_code)

    # federated assertions: tampered, misdirected, stale all bounce
    provider = otp_platform.sandbox_provider
    good = dict(subject="sub-accept", email="fed@accept.test",
                audience=otp_platform.config.provider_audience,
                expires_at=otp_platform.clock() + 600)
    assert auth.federated_sign_in(provider.mint_assertion(**good)).token

    flipped = provider.mint_assertion(**good)
    raw = bytearray(base64.b64decode(flipped["payload"]))
    raw[len(raw) // 2] ^= 0x01
    flipped["payload"] = base64.b64encode(bytes(raw)).decode()
    with pytest.raises(SignatureInvalid):
        auth.federated_sign_in(flipped)
    with pytest.raises(WrongAudience):
        auth.federated_sign_in(
            provider.mint_assertion(**dict(good, audience="someone-else")))
    with pytest.raises(Expired):
        auth.federated_sign_in(
            provider.mint_assertion(**dict(good, expires_at=otp_platform.clock() - 1)))

    # 5 failures lock the account: the CORRECT password is refused until expiry
    assert otp_platform.config.lockout_threshold == 5
    auth.register("victim@accept.test", "victim-true-pass-1")
    for _ in range(5):
        with pytest.raises(InvalidCredentials):
            auth.login_password("victim@accept.test", "guess-wrong", "10.9.0.2")
    with pytest.raises(LockedOut):
        auth.login_password("victim@accept.test", "victim-true-pass-1", "10.9.0.2")
    clock.advance(otp_platform.config.lockout_duration_s + 1)
    assert auth.login_password(
        "victim@accept.test", "victim-true-pass-1", "10.9.0.2").challenge_id


# -- 5. concurrency and conservation under faults ------------------------------------


def test_stress_run_conserves_stock_and_settles_every_intent():
    # stress() itself raises InvariantViolation on any negative stock, any
    # conservation drift at quiescence, or any non-terminal intent after the
    # timeout sweep; this call completing IS the pass
    report = stress(
        {"concurrent_sessions": 100, "duration_s": 30.0},
        FaultProfile(drop_probability=0.1, applied_to=("gateway-processor",)),
        seed=7,
    )
    outcomes = report.context["outcomes"]
    assert outcomes["approved"] > 0
    assert outcomes["transport_failed"] > 0  # the fault profile really fired
    assert report.throughput_rps > 0


# -- 6. oracle equivalences ----------------------------------------------------------


def test_shipped_code_agrees_with_reference_oracles():
    rng = random.Random(20260815)

    # checksum gate vs digit-walk oracle, 100k random accepted-length strings
    disagreements = sum(
        1 for _ in range(100_000)
        if luhn_valid(s := "".join(str(rng.randrange(10))
                                   for _ in range(rng.randint(12, 19)))) != luhn_oracle(s)
    )
    assert disagreements == 0

    # cart arithmetic vs independent recount, 1,000 randomized carts
    for _ in range(1_000):
        lines = [
            {"unit_price_at_add": rng.randint(0, 99_999), "qty": rng.randint(1, 9)}
            for _ in range(rng.randrange(0, 12))
        ]
        assert cart_total(lines) == recount_cart_total(lines)

    # both simulation reports recount exactly from their own raw event logs
    for seed in (1, 7):
        for profile in ("baseline", "optimized"):
            report = journey_metrics(profile, n_users=40, seed=seed)
            recount = recount_journey_report(report)
            assert report.avg_navigation_time_s == pytest.approx(
                recount["avg_navigation_time_s"])
            assert report.transaction_completion_time_s == pytest.approx(
                recount["transaction_completion_time_s"])
            assert report.user_error_rate_pct == pytest.approx(
                recount["user_error_rate_pct"])
        for enabled in (False, True):
            report = attack_sim(120, monitoring_enabled=enabled, seed=seed)
            recount = recount_attack_report(report)
            assert report.unauthorized_attempts == recount["unauthorized_attempts"]
            assert report.successful_breaches == recount["successful_breaches"]
            assert report.lockouts == recount["lockouts"]
