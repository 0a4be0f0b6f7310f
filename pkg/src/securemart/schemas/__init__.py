"""Published JSON schemas: error envelope, scenario, fault profile, seed."""

from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources

import jsonschema

from ..errors import ValidationError


@lru_cache(maxsize=None)
def load_schema(name: str) -> dict:
    raw = resources.files(__package__).joinpath(name).read_text(encoding="utf-8")
    return json.loads(raw)


def validate(instance, schema_name: str) -> None:
    """Raise ValidationError when the instance does not match the schema."""
    try:
        jsonschema.validate(instance=instance, schema=load_schema(schema_name))
    except jsonschema.ValidationError as err:
        raise ValidationError(f"{schema_name}: {err.message}") from None
