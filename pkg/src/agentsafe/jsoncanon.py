"""Canonical JSON: the single serialization used for hashing and wire bodies.

Rules: keys sorted lexicographically, UTF-8, no insignificant whitespace,
floats in Python's shortest round-trip form. Two structurally equal values
always serialize to the same bytes, which is what makes payload hashes and
policy digests stable.
"""

from __future__ import annotations

import hashlib
import json
import math
from typing import Any

from .errors import CanonicalizationError

_SCALARS = (str, int, float, bool, type(None))


def _check(value: Any) -> None:
    if isinstance(value, dict):
        for k, v in value.items():
            if not isinstance(k, str):
                raise CanonicalizationError(f"non-string key {k!r}")
            _check(v)
    elif isinstance(value, (list, tuple)):
        for v in value:
            _check(v)
    elif isinstance(value, float):
        if math.isnan(value) or math.isinf(value):
            raise CanonicalizationError("NaN/Infinity not representable in canonical JSON")
    elif not isinstance(value, _SCALARS):
        raise CanonicalizationError(f"unsupported type {type(value).__name__}")


def dumps(value: Any) -> str:
    """Serialize to canonical JSON text."""
    _check(value)
    return json.dumps(value, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def dumps_bytes(value: Any) -> bytes:
    return dumps(value).encode("utf-8")


def loads(text: str | bytes) -> Any:
    return json.loads(text)


def sha256_hex(data: bytes | str) -> str:
    if isinstance(data, str):
        data = data.encode("utf-8")
    return hashlib.sha256(data).hexdigest()


def digest(value: Any) -> str:
    """SHA-256 hex of the canonical serialization."""
    return sha256_hex(dumps_bytes(value))
