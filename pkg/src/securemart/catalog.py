"""Products, categories, and atomic inventory.

Prices are integer minor currency units throughout — no floats near money.
Stock mutations go through document CAS so the count can never go negative,
even under concurrent checkout load; callers that don't pin a revision get a
bounded retry loop.  Listing order is fixed to (name, id) so pagination and
tests are deterministic.
"""

from __future__ import annotations

import uuid
from dataclasses import dataclass
from typing import Optional

from .errors import (
    CategoryInUse,
    Forbidden,
    InsufficientStock,
    RevisionConflict,
    UnknownCategory,
    UnknownProduct,
    ValidationError,
)
from .kernel import Document, DocumentStore

PRODUCTS = "products"
CATEGORIES = "categories"

MAX_PAGE_LIMIT = 100
# Bounded, but sized so a burst of up to this many simultaneous single
# mutations always resolves: every lost round means another writer committed.
CAS_RETRIES = 256


@dataclass(frozen=True)
class Product:
    id: str
    name: str
    category_id: str
    unit_price: int
    stock: int
    image_ref: str
    active: bool
    revision: int

    @classmethod
    def from_doc(cls, doc: Document) -> "Product":
        b = doc.body
        return cls(doc.id, b["name"], b["category_id"], b["unit_price"],
                   b["stock"], b.get("image_ref", ""), b["active"], doc.revision)

    def as_dict(self) -> dict:
        return {
            "id": self.id,
            "name": self.name,
            "category_id": self.category_id,
            "unit_price": self.unit_price,
            "stock": self.stock,
            "image_ref": self.image_ref,
            "active": self.active,
            "revision": self.revision,
        }


@dataclass(frozen=True)
class Category:
    id: str
    name: str
    revision: int

    def as_dict(self) -> dict:
        return {"id": self.id, "name": self.name, "revision": self.revision}


def _require_admin(principal) -> None:
    if principal is None or getattr(principal, "role", None) != "admin":
        raise Forbidden("admin role required")


class Catalog:
    def __init__(self, store: DocumentStore):
        self.store = store

    # -- categories ------------------------------------------------------------

    def create_category(self, principal, name: str, category_id: Optional[str] = None) -> Category:
        _require_admin(principal)
        name = (name or "").strip()
        if not name:
            raise ValidationError("category name must be non-empty")
        if any(c.name.lower() == name.lower() for c in self.list_categories()):
            raise ValidationError(f"category name already exists: {name}")
        cid = category_id or uuid.uuid4().hex[:12]
        doc = self.store.put(CATEGORIES, cid, {"name": name}, expected_revision=0)
        return Category(cid, name, doc.revision)

    def list_categories(self) -> list[Category]:
        docs = self.store.list(CATEGORIES)
        cats = [Category(d.id, d.body["name"], d.revision) for d in docs]
        return sorted(cats, key=lambda c: (c.name, c.id))

    def get_category(self, category_id: str) -> Category:
        if not self.store.exists(CATEGORIES, category_id):
            raise UnknownCategory(category_id)
        doc = self.store.get(CATEGORIES, category_id)
        return Category(doc.id, doc.body["name"], doc.revision)

    def delete_category(self, principal, category_id: str) -> None:
        _require_admin(principal)
        self.get_category(category_id)
        in_use = any(d.body["category_id"] == category_id for d in self.store.list(PRODUCTS))
        if in_use:
            raise CategoryInUse(category_id)
        self.store.delete(CATEGORIES, category_id)

    # -- products ------------------------------------------------------------------

    def create_product(self, principal, draft: dict) -> Product:
        _require_admin(principal)
        body = self._validated_body(draft)
        pid = uuid.uuid4().hex[:12]
        doc = self.store.put(PRODUCTS, pid, body, expected_revision=0)
        return Product.from_doc(doc)

    def update_product(
        self,
        principal,
        product_id: str,
        patch: dict,
        expected_revision: Optional[int] = None,
    ) -> Product:
        _require_admin(principal)
        current = self._doc(product_id)
        merged = dict(current.body)
        merged.update({k: v for k, v in patch.items() if k in
                       ("name", "category_id", "unit_price", "stock", "image_ref", "active")})
        body = self._validated_body(merged)
        expected = current.revision if expected_revision is None else expected_revision
        doc = self.store.put(PRODUCTS, product_id, body, expected_revision=expected)
        return Product.from_doc(doc)

    def delete_product(self, principal, product_id: str) -> None:
        _require_admin(principal)
        self._doc(product_id)
        self.store.delete(PRODUCTS, product_id)

    def get_product(self, product_id: str) -> Product:
        return Product.from_doc(self._doc(product_id))

    def list_products(
        self,
        category: Optional[str] = None,
        active_only: bool = True,
        offset: int = 0,
        limit: int = 50,
    ) -> list[Product]:
        if not 0 < limit <= MAX_PAGE_LIMIT:
            raise ValidationError(f"limit must be in 1..{MAX_PAGE_LIMIT}")
        if offset < 0:
            raise ValidationError("offset must be >= 0")
        products = [Product.from_doc(d) for d in self.store.list(PRODUCTS)]
        if category is not None:
            products = [p for p in products if p.category_id == category]
        if active_only:
            products = [p for p in products if p.active]
        products.sort(key=lambda p: (p.name, p.id))
        return products[offset:offset + limit]

    def search_products(self, query: str) -> list[Product]:
        """Case-insensitive substring match on name; empty query = all active."""
        needle = (query or "").strip().lower()
        active = [Product.from_doc(d) for d in self.store.list(PRODUCTS) if d.body["active"]]
        hits = [p for p in active if needle in p.name.lower()]
        hits.sort(key=lambda p: (p.name, p.id))
        return hits

    # -- inventory -------------------------------------------------------------------

    def adjust_stock(
        self,
        product_id: str,
        delta: int,
        expected_revision: Optional[int] = None,
    ) -> int:
        """Atomically apply ``delta`` to stock, returning the new count.

        With an explicit revision this is a single CAS attempt; without one it
        retries the CAS loop before surfacing RevisionConflict.  Stock can
        never pass below zero: InsufficientStock leaves state unchanged.
        """
        attempts = 1 if expected_revision is not None else CAS_RETRIES
        last_conflict: Optional[RevisionConflict] = None
        for _ in range(attempts):
            doc = self._doc(product_id)
            revision = expected_revision if expected_revision is not None else doc.revision
            new_stock = doc.body["stock"] + delta
            if new_stock < 0:
                raise InsufficientStock(
                    f"product {product_id}: stock {doc.body['stock']}, delta {delta}",
                    product_id=product_id,
                )
            body = dict(doc.body)
            body["stock"] = new_stock
            try:
                self.store.put(PRODUCTS, product_id, body, expected_revision=revision)
                return new_stock
            except RevisionConflict as conflict:
                last_conflict = conflict
        raise last_conflict  # type: ignore[misc]

    # -- helpers -----------------------------------------------------------------------

    def _doc(self, product_id: str) -> Document:
        if not self.store.exists(PRODUCTS, product_id):
            raise UnknownProduct(product_id)
        return self.store.get(PRODUCTS, product_id)

    def _validated_body(self, draft: dict) -> dict:
        name = str(draft.get("name") or "").strip()
        if not name:
            raise ValidationError("product name must be non-empty")
        category_id = draft.get("category_id")
        if not category_id or not self.store.exists(CATEGORIES, category_id):
            raise UnknownCategory(str(category_id))
        unit_price = draft.get("unit_price")
        if not isinstance(unit_price, int) or isinstance(unit_price, bool) or unit_price < 0:
            raise ValidationError("unit_price must be a non-negative integer (minor units)")
        stock = draft.get("stock")
        if not isinstance(stock, int) or isinstance(stock, bool) or stock < 0:
            raise ValidationError("stock must be a non-negative integer")
        return {
            "name": name,
            "category_id": category_id,
            "unit_price": unit_price,
            "stock": stock,
            "image_ref": str(draft.get("image_ref") or ""),
            "active": bool(draft.get("active", True)),
        }
