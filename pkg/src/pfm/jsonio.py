"""Canonical JSON encoding.

One serializer for everything that must be byte-stable: chronicle lines,
CLI output, HTTP payloads and golden files. Keys sorted, compact separators,
UTF-8, no NaN/Infinity.
"""

from __future__ import annotations

import json
from typing import Any


def _plain(value: Any) -> Any:
    # numpy scalars sneak into payloads from the stats code; normalize them.
    if hasattr(value, "item") and type(value).__module__ == "numpy":
        return value.item()
    if isinstance(value, dict):
        return {k: _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def canonical_dumps(obj: Any) -> str:
    return json.dumps(
        _plain(obj), sort_keys=True, separators=(",", ":"),
        ensure_ascii=False, allow_nan=False,
    )


def canonical_bytes(obj: Any) -> bytes:
    return canonical_dumps(obj).encode("utf-8")


def canonical_line(obj: Any) -> str:
    """One JSONL record, newline terminated."""
    return canonical_dumps(obj) + "\n"
