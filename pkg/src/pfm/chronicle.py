"""Canonical event model and time-indexed store for one person's chronicle.

Two event kinds share the store: food events (structured around how / what /
when / where / who plus causal attachments) and life events (sleep, exercise,
steps, stress or custom streams with metric attributes). Every stored value
can carry a provenance tag saying whether it was observed by a sensor,
derived from a knowledge source, or prompted from the person.

Timestamps are UTC milliseconds; each event also keeps the local timezone
offset so "before bedtime" style predicates can reason in local time.

Chronicles are immutable values: ``append_event`` returns a new chronicle and
never touches the old one, which makes unlimited concurrent readers safe.
Writers for one user are serialized by the service layer.
"""

from __future__ import annotations

import io
import json
from bisect import bisect_left
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Iterator, Union

from .enrichment import NutritionFacts
from .errors import DuplicateId, InvalidEvent, InvalidRange, ParseError, SchemaVersionMismatch
from .jsonio import canonical_line

if TYPE_CHECKING:
    from .taste import TasteRegion

SCHEMA_VERSION = 1

MS_PER_MINUTE = 60_000
MS_PER_HOUR = 3_600_000
MS_PER_DAY = 86_400_000

BASE_STREAMS = ("sleep", "exercise", "steps", "stress")

#: units expected for metrics the engine itself consumes
KNOWN_METRIC_UNITS = {
    "sleep_quality": "score",
    "sleep_latency": "min",
    "duration": "min",
    "kcal": "kcal",
    "count": "count",
    "stress": "score",
}


class ProvenanceKind(str, Enum):
    OBSERVED = "Observed"
    DERIVED = "Derived"
    SUBJECTIVE = "Subjective"


class InputChannel(str, Enum):
    TEXT = "text"
    BARCODE = "barcode"
    API = "api"
    UI = "ui"


@dataclass(frozen=True)
class Provenance:
    kind: ProvenanceKind
    source: str = ""

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "source": self.source}

    @classmethod
    def from_dict(cls, d: dict) -> "Provenance":
        return cls(kind=ProvenanceKind(d["kind"]), source=d.get("source", ""))


@dataclass(frozen=True)
class MetricValue:
    value: float
    unit: str

    def to_dict(self) -> dict:
        return {"value": self.value, "unit": self.unit}


# ---------------------------------------------------------------------------
# local-time helpers
# ---------------------------------------------------------------------------

def local_ms(ms: int, tz_offset_min: int) -> int:
    return ms + tz_offset_min * MS_PER_MINUTE

def local_day_index(ms: int, tz_offset_min: int) -> int:
    return local_ms(ms, tz_offset_min) // MS_PER_DAY

def local_hour(ms: int, tz_offset_min: int) -> float:
    return (local_ms(ms, tz_offset_min) % MS_PER_DAY) / MS_PER_HOUR

def local_weekday(ms: int, tz_offset_min: int) -> int:
    """Monday == 0. Epoch day zero was a Thursday."""
    return (local_day_index(ms, tz_offset_min) + 3) % 7

def is_weekend(ms: int, tz_offset_min: int) -> bool:
    return local_weekday(ms, tz_offset_min) >= 5


# ---------------------------------------------------------------------------
# events
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FoodEvent:
    event_id: str
    user_id: str
    dish: str
    eaten_at: int                     # UTC ms, start of eating
    logged_at: int                    # UTC ms, when it was recorded
    ingredients: tuple[tuple[str, float], ...] = ()   # (item_id, grams)
    total_g: float = 0.0
    tz_offset_min: int = 0
    place: str | None = None
    lat: float | None = None
    lon: float | None = None
    companions: int = 0
    social: str | None = None
    channel: InputChannel = InputChannel.TEXT
    barcode: str | None = None
    nutrition: NutritionFacts | None = None
    taste: "TasteRegion | None" = None
    rating: int | None = None
    provenance: dict[str, Provenance] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def start_ms(self) -> int:
        return self.eaten_at

    def violations(self) -> list[str]:
        problems = []
        if not self.event_id:
            problems.append("event_id is empty")
        if not self.user_id:
            problems.append("user_id is empty")
        if self.eaten_at > self.logged_at:
            problems.append("eating timestamp after logging timestamp")
        if self.total_g < 0:
            problems.append("total_g < 0")
        for item_id, grams in self.ingredients:
            if grams < 0:
                problems.append(f"ingredient {item_id} quantity < 0")
        if self.rating is not None and not (1 <= self.rating <= 5):
            problems.append(f"rating {self.rating} outside [1, 5]")
        if self.companions < 0:
            problems.append("companions < 0")
        return problems

    def ingredient_ids(self) -> tuple[str, ...]:
        return tuple(item_id for item_id, _ in self.ingredients)

    def with_enrichment(self, nutrition: NutritionFacts, source: str) -> "FoodEvent":
        prov = dict(self.provenance)
        prov["nutrition"] = Provenance(ProvenanceKind.DERIVED, source)
        return replace(self, nutrition=nutrition, provenance=prov)

    def with_rating(self, rating: int, source: str = "user-prompt") -> "FoodEvent":
        prov = dict(self.provenance)
        prov["rating"] = Provenance(ProvenanceKind.SUBJECTIVE, source)
        return replace(self, rating=rating, provenance=prov)


@dataclass(frozen=True)
class LifeEvent:
    event_id: str
    user_id: str
    stream: str
    start: int
    end: int
    tz_offset_min: int = 0
    attributes: dict[str, MetricValue] = field(default_factory=dict)
    provenance: dict[str, Provenance] = field(default_factory=dict)
    extras: dict = field(default_factory=dict)

    @property
    def start_ms(self) -> int:
        return self.start

    def violations(self) -> list[str]:
        problems = []
        if not self.event_id:
            problems.append("event_id is empty")
        if not self.user_id:
            problems.append("user_id is empty")
        if self.start > self.end:
            problems.append("start after end")
        if self.stream not in BASE_STREAMS and not self.stream.startswith("custom:"):
            problems.append(f"unknown stream {self.stream!r}")
        for name, metric in self.attributes.items():
            expected = KNOWN_METRIC_UNITS.get(name)
            if expected is not None and metric.unit != expected:
                problems.append(f"metric {name} must use unit {expected!r}, got {metric.unit!r}")
        return problems

    def metric(self, name: str) -> float | None:
        mv = self.attributes.get(name)
        return mv.value if mv is not None else None


Event = Union[FoodEvent, LifeEvent]


def _sort_key(event: Event) -> tuple[int, str]:
    return (event.start_ms, event.event_id)


# ---------------------------------------------------------------------------
# chronicle
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Chronicle:
    user_id: str
    events: tuple[Event, ...] = ()

    @classmethod
    def build(cls, user_id: str, events: Iterable[Event]) -> "Chronicle":
        """Validate, sort and de-conflict a batch of events."""
        ordered = sorted(events, key=_sort_key)
        seen: set[str] = set()
        for ev in ordered:
            problems = ev.violations()
            if problems:
                raise InvalidEvent(problems)
            if ev.event_id in seen:
                raise DuplicateId(ev.event_id)
            seen.add(ev.event_id)
        return cls(user_id=user_id, events=tuple(ordered))

    def __len__(self) -> int:
        return len(self.events)

    def __iter__(self) -> Iterator[Event]:
        return iter(self.events)

    def event_ids(self) -> set[str]:
        return {e.event_id for e in self.events}

    def span_days(self) -> float:
        if not self.events:
            return 0.0
        return (self.events[-1].start_ms - self.events[0].start_ms) / MS_PER_DAY

    def dominant_tz_offset(self) -> int:
        """Most common tz offset across events (0 for an empty chronicle)."""
        if not self.events:
            return 0
        counts: dict[int, int] = {}
        for ev in self.events:
            counts[ev.tz_offset_min] = counts.get(ev.tz_offset_min, 0) + 1
        return max(sorted(counts), key=lambda k: counts[k])


def append_event(chronicle: Chronicle, event: Event) -> Chronicle:
    """Pure append: returns a new chronicle with the event slotted in order."""
    problems = event.violations()
    if problems:
        raise InvalidEvent(problems)
    if chronicle.user_id and event.user_id != chronicle.user_id:
        raise InvalidEvent([f"event user_id {event.user_id!r} does not match chronicle "
                            f"{chronicle.user_id!r}"])
    keys = [_sort_key(e) for e in chronicle.events]
    key = _sort_key(event)
    idx = bisect_left(keys, key)
    if any(e.event_id == event.event_id for e in chronicle.events):
        raise DuplicateId(event.event_id)
    events = chronicle.events[:idx] + (event,) + chronicle.events[idx:]
    return Chronicle(user_id=chronicle.user_id or event.user_id, events=events)


def window_query(chronicle: Chronicle, from_ms: int, to_ms: int,
                 stream: str | None = None) -> list[Event]:
    """Events with start in [from_ms, to_ms), optionally filtered by stream.

    Filter values: ``food``, ``life`` (any life stream), or a specific life
    stream name such as ``sleep``.
    """
    if from_ms > to_ms:
        raise InvalidRange(f"from {from_ms} > to {to_ms}")
    starts = [e.start_ms for e in chronicle.events]
    lo = bisect_left(starts, from_ms)
    hi = bisect_left(starts, to_ms)
    window = chronicle.events[lo:hi]
    if stream is None:
        return list(window)
    if stream == "food":
        return [e for e in window if isinstance(e, FoodEvent)]
    if stream == "life":
        return [e for e in window if isinstance(e, LifeEvent)]
    return [e for e in window if isinstance(e, LifeEvent) and e.stream == stream]


# ---------------------------------------------------------------------------
# serialization: newline-delimited JSON, schema in docs/chronicle-format.md
# ---------------------------------------------------------------------------

_FOOD_KEYS = {"schema_version", "type", "event_id", "user_id", "what", "when",
              "where", "who", "how", "barcode", "nutrition", "taste", "rating",
              "provenance"}
_LIFE_KEYS = {"schema_version", "type", "event_id", "user_id", "stream",
              "start", "end", "tz_offset_min", "attributes", "provenance"}


def event_to_record(event: Event) -> dict:
    """Canonical JSON-ready dict for one event; optional fields are omitted."""
    if isinstance(event, FoodEvent):
        rec: dict = {
            "schema_version": SCHEMA_VERSION,
            "type": "food",
            "event_id": event.event_id,
            "user_id": event.user_id,
            "what": {
                "dish": event.dish,
                "ingredients": [[i, g] for i, g in event.ingredients],
                "total_g": event.total_g,
            },
            "when": {
                "eaten_at": event.eaten_at,
                "logged_at": event.logged_at,
                "tz_offset_min": event.tz_offset_min,
            },
            "how": event.channel.value,
        }
        where = {}
        if event.place is not None:
            where["place"] = event.place
        if event.lat is not None:
            where["lat"] = event.lat
        if event.lon is not None:
            where["lon"] = event.lon
        if where:
            rec["where"] = where
        who = {"companions": event.companions}
        if event.social is not None:
            who["social"] = event.social
        rec["who"] = who
        if event.barcode is not None:
            rec["barcode"] = event.barcode
        if event.nutrition is not None:
            rec["nutrition"] = event.nutrition.to_dict()
        if event.taste is not None:
            rec["taste"] = event.taste.to_dict()
        if event.rating is not None:
            rec["rating"] = event.rating
        if event.provenance:
            rec["provenance"] = {k: p.to_dict() for k, p in sorted(event.provenance.items())}
        rec.update(event.extras)
        return rec
    rec = {
        "schema_version": SCHEMA_VERSION,
        "type": "life",
        "event_id": event.event_id,
        "user_id": event.user_id,
        "stream": event.stream,
        "start": event.start,
        "end": event.end,
        "tz_offset_min": event.tz_offset_min,
        "attributes": {k: v.to_dict() for k, v in sorted(event.attributes.items())},
    }
    if event.provenance:
        rec["provenance"] = {k: p.to_dict() for k, p in sorted(event.provenance.items())}
    rec.update(event.extras)
    return rec


def record_to_event(rec: dict) -> Event:
    """Parse one record dict; raises ValueError naming the missing/bad field."""
    version = rec.get("schema_version")
    if version is None:
        raise ValueError("missing field 'schema_version'")
    if version != SCHEMA_VERSION:
        raise SchemaVersionMismatch(f"schema_version {version}, supported {SCHEMA_VERSION}")
    kind = rec.get("type")
    if kind not in ("food", "life"):
        raise ValueError(f"field 'type' must be 'food' or 'life', got {kind!r}")
    for name in ("event_id", "user_id"):
        if name not in rec:
            raise ValueError(f"missing field '{name}'")
    provenance = {
        k: Provenance.from_dict(v) for k, v in rec.get("provenance", {}).items()
    }
    if kind == "food":
        for name in ("what", "when"):
            if name not in rec:
                raise ValueError(f"missing field '{name}'")
        what, when = rec["what"], rec["when"]
        for name in ("eaten_at", "logged_at"):
            if name not in when:
                raise ValueError(f"missing field 'when.{name}'")
        where = rec.get("where", {})
        who = rec.get("who", {})
        taste = rec.get("taste")
        if taste is not None:
            from .taste import TasteRegion
            taste = TasteRegion.from_dict(taste)
        return FoodEvent(
            event_id=str(rec["event_id"]),
            user_id=str(rec["user_id"]),
            dish=str(what.get("dish", "")),
            ingredients=tuple((str(i), float(g)) for i, g in what.get("ingredients", [])),
            total_g=float(what.get("total_g", 0.0)),
            eaten_at=int(when["eaten_at"]),
            logged_at=int(when["logged_at"]),
            tz_offset_min=int(when.get("tz_offset_min", 0)),
            place=where.get("place"),
            lat=where.get("lat"),
            lon=where.get("lon"),
            companions=int(who.get("companions", 0)),
            social=who.get("social"),
            channel=InputChannel(rec.get("how", "text")),
            barcode=rec.get("barcode"),
            nutrition=NutritionFacts.from_dict(rec["nutrition"]) if "nutrition" in rec else None,
            taste=taste,
            rating=int(rec["rating"]) if "rating" in rec else None,
            provenance=provenance,
            extras={k: v for k, v in rec.items() if k not in _FOOD_KEYS},
        )
    for name in ("stream", "start", "end"):
        if name not in rec:
            raise ValueError(f"missing field '{name}'")
    return LifeEvent(
        event_id=str(rec["event_id"]),
        user_id=str(rec["user_id"]),
        stream=str(rec["stream"]),
        start=int(rec["start"]),
        end=int(rec["end"]),
        tz_offset_min=int(rec.get("tz_offset_min", 0)),
        attributes={
            k: MetricValue(float(v["value"]), str(v["unit"]))
            for k, v in rec.get("attributes", {}).items()
        },
        provenance=provenance,
        extras={k: v for k, v in rec.items() if k not in _LIFE_KEYS},
    )


def import_jsonl(source) -> Chronicle:
    """Read a chronicle from JSONL text, bytes, a path-free stream, or lines.

    Per-line failures raise ParseError with the 1-based line number; a
    schema_version other than the supported one raises SchemaVersionMismatch.
    """
    if isinstance(source, bytes):
        lines = source.decode("utf-8").splitlines()
    elif isinstance(source, str):
        lines = source.splitlines()
    elif isinstance(source, io.IOBase):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        lines = data.splitlines()
    else:
        lines = [line.rstrip("\n") for line in source]

    events: list[Event] = []
    seen: set[str] = set()
    user_id = ""
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
        try:
            event = record_to_event(rec)
        except SchemaVersionMismatch:
            raise
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(line_no, str(exc)) from exc
        problems = event.violations()
        if problems:
            raise ParseError(line_no, "; ".join(problems))
        if event.event_id in seen:
            raise ParseError(line_no, f"duplicate event_id {event.event_id}")
        seen.add(event.event_id)
        if not user_id:
            user_id = event.user_id
        elif event.user_id != user_id:
            raise ParseError(line_no, f"user_id {event.user_id!r} differs from {user_id!r}")
        events.append(event)
    events.sort(key=_sort_key)
    return Chronicle(user_id=user_id, events=tuple(events))


def export_jsonl(chronicle: Chronicle) -> str:
    """Canonical JSONL text: one event per line, sorted keys, stable order."""
    return "".join(canonical_line(event_to_record(e)) for e in chronicle.events)


def read_chronicle(path: str | Path) -> Chronicle:
    return import_jsonl(Path(path).read_text(encoding="utf-8"))


def write_chronicle(chronicle: Chronicle, path: str | Path) -> None:
    Path(path).write_text(export_jsonl(chronicle), encoding="utf-8")
