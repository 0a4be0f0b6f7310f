"""Mod-10 checksum gate for card numbers."""

from __future__ import annotations

from ..errors import ValidationError


def luhn_valid(pan: str) -> bool:
    """True iff the digit string passes the Luhn checksum.

    Accepts 12-19 digits (anything else is a ValidationError, not False:
    malformed input is a caller bug, not a failed checksum).
    """
    if not isinstance(pan, str) or not pan.isdigit():
        raise ValidationError("PAN must be a digit string")
    if not 12 <= len(pan) <= 19:
        raise ValidationError("PAN must be 12-19 digits")
    total = 0
    for i, ch in enumerate(reversed(pan)):
        d = ord(ch) - 48
        if i % 2 == 1:
            d *= 2
            if d > 9:
                d -= 9
        total += d
    return total % 10 == 0
