"""Message-level authenticated encryption for payment payloads.

The client seals the canonical payment payload with AES-256-GCM under a key
shared with the gateway; the key id travels in clear and is bound into the
authentication tag as associated data.  Any single-bit change to nonce,
ciphertext, tag, or key id makes ``open_envelope`` raise EnvelopeTampered.
A fresh random 96-bit nonce is drawn per seal, so nonces never repeat under
one key.
"""

from __future__ import annotations

import base64
import json
import secrets

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from ..errors import EnvelopeTampered

NONCE_BYTES = 12


def new_client_key() -> bytes:
    return secrets.token_bytes(32)


def seal_envelope(key: bytes, key_id: str, payload: dict) -> dict:
    """Encrypt+authenticate the payload; returns the wire-format envelope."""
    nonce = secrets.token_bytes(NONCE_BYTES)
    plaintext = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode()
    ciphertext = AESGCM(key).encrypt(nonce, plaintext, key_id.encode())
    return {
        "key_id": key_id,
        "nonce": base64.b64encode(nonce).decode(),
        "ciphertext": base64.b64encode(ciphertext).decode(),
    }


def open_envelope(key: bytes, envelope: dict) -> dict:
    """Decrypt and verify; raises EnvelopeTampered unless the envelope is
    byte-identical to what the client sealed."""
    try:
        nonce = base64.b64decode(envelope["nonce"], validate=True)
        ciphertext = base64.b64decode(envelope["ciphertext"], validate=True)
        key_id = envelope["key_id"]
    except (KeyError, TypeError, ValueError):
        raise EnvelopeTampered("malformed envelope") from None
    if len(nonce) != NONCE_BYTES:
        raise EnvelopeTampered("bad nonce length")
    try:
        plaintext = AESGCM(key).decrypt(nonce, ciphertext, key_id.encode())
    except InvalidTag:
        raise EnvelopeTampered("integrity check failed") from None
    try:
        return json.loads(plaintext)
    except ValueError:
        raise EnvelopeTampered("payload is not JSON") from None
