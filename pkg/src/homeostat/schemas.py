"""Schemas for the JSON documents the CLI writes.

A small structural validator (types, required keys, items, enums) keeps the
output contract testable without an external dependency; the schema
documents live next to this module as package data.
"""

from __future__ import annotations

import json
from importlib import resources

__all__ = ["load_schema", "check_schema", "SchemaError"]

_TYPES = {
    "object": dict,
    "array": list,
    "string": str,
    "boolean": bool,
    "null": type(None),
}


class SchemaError(ValueError):
    pass


def load_schema(name: str) -> dict:
    ref = resources.files("homeostat") / "schemas" / f"{name}.schema.json"
    return json.loads(ref.read_text(encoding="utf-8"))


def _type_ok(doc, kind: str) -> bool:
    if kind == "number":
        return isinstance(doc, (int, float)) and not isinstance(doc, bool)
    if kind == "integer":
        return isinstance(doc, int) and not isinstance(doc, bool)
    return isinstance(doc, _TYPES[kind])


def check_schema(doc, schema: dict, path: str = "$") -> None:
    """Raise :class:`SchemaError` where ``doc`` violates ``schema``."""
    expected = schema.get("type")
    if expected is not None:
        kinds = expected if isinstance(expected, list) else [expected]
        if not any(_type_ok(doc, kind) for kind in kinds):
            raise SchemaError(f"{path}: expected {expected}, got {type(doc).__name__}")
    if "enum" in schema and doc not in schema["enum"]:
        raise SchemaError(f"{path}: {doc!r} not in {schema['enum']}")
    if isinstance(doc, dict):
        for key in schema.get("required", []):
            if key not in doc:
                raise SchemaError(f"{path}: missing required key {key!r}")
        for key, sub in schema.get("properties", {}).items():
            if key in doc:
                check_schema(doc[key], sub, f"{path}.{key}")
    if isinstance(doc, list) and "items" in schema:
        for i, item in enumerate(doc):
            check_schema(item, schema["items"], f"{path}[{i}]")
