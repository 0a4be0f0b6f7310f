"""Locally simulated payment stack: client-sealed envelopes, gateway,
processor and issuer hops, card tokenization, wallet pay, and signed
confirmation receipts."""

from .envelope import new_client_key, open_envelope, seal_envelope
from .gateway import HopDropped, PaymentGateway
from .issuer import IssuerSimulator
from .luhn import luhn_valid
from .wallet import WalletSimulator

__all__ = [
    "HopDropped",
    "IssuerSimulator",
    "PaymentGateway",
    "WalletSimulator",
    "luhn_valid",
    "new_client_key",
    "open_envelope",
    "seal_envelope",
]
