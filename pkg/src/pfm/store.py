"""File-backed per-user store: append-only chronicle, model snapshot, cache.

Layout under the data dir:

    users/<id>/chronicle.jsonl    append-only event log
    models/<id>.json              model snapshot (atomic replace)
    cache/enrichment/             enrichment cache files

Crash safety: events are appended as whole lines and fsynced; on open, a
truncated final line (no trailing newline, unparseable) is quarantined and
ignored, so a crash between append and ack never corrupts prior records.
Writes for one user are serialized with a per-user lock; readers never block.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path

from .chronicle import (
    Chronicle,
    Event,
    append_event,
    event_to_record,
    import_jsonl,
    record_to_event,
)
from .errors import DuplicateId, PfmError
from .jsonio import canonical_dumps, canonical_line


class ConflictingDuplicate(PfmError):
    """Same event_id resubmitted with a different body."""

    code = "conflicting_duplicate"


class UserStore:
    def __init__(self, data_dir: str | Path):
        self.data_dir = Path(data_dir)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock_for(self, user_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(user_id, threading.Lock())

    def chronicle_path(self, user_id: str) -> Path:
        return self.data_dir / "users" / user_id / "chronicle.jsonl"

    def model_path(self, user_id: str) -> Path:
        return self.data_dir / "models" / f"{user_id}.json"

    def cache_dir(self) -> Path:
        return self.data_dir / "cache" / "enrichment"

    def user_ids(self) -> list[str]:
        root = self.data_dir / "users"
        if not root.is_dir():
            return []
        return sorted(p.name for p in root.iterdir() if (p / "chronicle.jsonl").is_file())

    # -- chronicle -------------------------------------------------------

    def load_chronicle(self, user_id: str) -> Chronicle:
        path = self.chronicle_path(user_id)
        if not path.is_file():
            return Chronicle(user_id=user_id, events=())
        text = path.read_text(encoding="utf-8")
        if text and not text.endswith("\n"):
            # torn tail from an interrupted append; keep everything before it
            text = text[: text.rfind("\n") + 1] if "\n" in text else ""
        return import_jsonl(text)

    def write_chronicle(self, user_id: str, chronicle: Chronicle) -> None:
        """Full atomic rewrite (used by import and batch enrichment)."""
        path = self.chronicle_path(user_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".jsonl.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            for event in chronicle.events:
                fh.write(canonical_line(event_to_record(event)))
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)

    def _truncate_torn_tail(self, path: Path) -> None:
        """Drop an unterminated final line (a crash mid-append, never acked)."""
        if not path.is_file():
            return
        data = path.read_bytes()
        if not data or data.endswith(b"\n"):
            return
        keep = data.rfind(b"\n") + 1
        with open(path, "r+b") as fh:
            fh.truncate(keep)
            fh.flush()
            os.fsync(fh.fileno())

    def append(self, user_id: str, event: Event) -> str:
        """Append one event; returns "created" or "replayed" (idempotent).

        Caller must hold the user lock. A replayed id with a different body
        raises ConflictingDuplicate.
        """
        chronicle = self.load_chronicle(user_id)
        existing = next((e for e in chronicle.events if e.event_id == event.event_id), None)
        if existing is not None:
            if canonical_dumps(event_to_record(existing)) == canonical_dumps(event_to_record(event)):
                return "replayed"
            raise ConflictingDuplicate(event.event_id)
        try:
            append_event(chronicle, event)   # validation only; result discarded
        except DuplicateId:
            raise ConflictingDuplicate(event.event_id) from None
        path = self.chronicle_path(user_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        self._truncate_torn_tail(path)
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(canonical_line(event_to_record(event)))
            fh.flush()
            os.fsync(fh.fileno())
        return "created"

    def replace_event(self, user_id: str, event: Event) -> None:
        """Swap one event body (same id) via atomic rewrite; caller holds lock."""
        chronicle = self.load_chronicle(user_id)
        events = [event if e.event_id == event.event_id else e for e in chronicle.events]
        self.write_chronicle(user_id, Chronicle.build(user_id, events))

    # -- static constraints ------------------------------------------------

    def load_constraints(self, user_id: str):
        """Allergies/intolerances declared in users/<id>/constraints.json."""
        import json

        from .model import StaticConstraint
        path = self.data_dir / "users" / user_id / "constraints.json"
        if not path.is_file():
            return ()
        raw = json.loads(path.read_text(encoding="utf-8"))
        return tuple(StaticConstraint.from_dict(c) for c in raw)

    # -- model snapshot ---------------------------------------------------

    def save_model(self, user_id: str, payload: dict) -> None:
        path = self.model_path(user_id)
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".json.tmp")
        tmp.write_text(canonical_dumps(payload), encoding="utf-8")
        os.replace(tmp, path)

    def load_model(self, user_id: str) -> dict | None:
        path = self.model_path(user_id)
        if not path.is_file():
            return None
        import json
        return json.loads(path.read_text(encoding="utf-8"))
