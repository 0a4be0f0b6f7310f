"""Seed ingestion: populate a fresh platform from a JSON fixture.

Seeds run inside the trust boundary (no API, no sessions) so they can
create admin accounts and set exact category ids.  Product rows may
reference their category by id or by name.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

from .app import Platform
from .auth import Principal
from .errors import ValidationError
from .schemas import validate

SEED_PRINCIPAL = Principal(account_id="seed", role="admin", email="seed@internal")


def load_seed(source: Union[str, Path, dict]) -> dict:
    if isinstance(source, dict):
        data = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    if not isinstance(data, dict):
        raise ValidationError("seed file must contain a JSON object")
    validate(data, "seed.schema.json")
    return data


def apply_seed(platform: Platform, source: Union[str, Path, dict]) -> dict:
    """Create the accounts, categories, and products a seed describes.

    Returns counts per entity kind, plus the name->id maps tests lean on.
    """
    data = load_seed(source)
    accounts = {}
    for row in data.get("accounts", []):
        principal = platform.auth.register(
            row["email"], row["password"], role=row.get("role", "user")
        )
        accounts[principal.email] = principal.account_id

    categories = {}
    for row in data.get("categories", []):
        category = platform.catalog.create_category(
            SEED_PRINCIPAL, row["name"], category_id=row.get("id")
        )
        categories[category.name] = category.id

    products = {}
    for row in data.get("products", []):
        draft = dict(row)
        label = draft.pop("category", None)
        if label is not None and "category_id" not in draft:
            if label not in categories:
                raise ValidationError(f"product references unknown category {label!r}")
            draft["category_id"] = categories[label]
        product = platform.catalog.create_product(SEED_PRINCIPAL, draft)
        products[product.name] = product.id

    # the post-seed state is what reset_environment falls back to
    platform.seed_snapshot = platform.store.snapshot()

    return {
        "accounts": accounts,
        "categories": categories,
        "products": products,
    }
