"""Temporal event patterns and occurrence matching.

A pattern is an ordered list of per-event predicates with a maximum gap
between consecutive matched events. Matching is leftmost-earliest and
non-overlapping: occurrences never share events, and each occurrence is the
lexicographically smallest feasible index tuple after the previous one, so a
treatment event is never counted twice.

The realized gap between consecutive matched events must be strictly
positive (strict temporal ordering); a max gap of zero therefore matches
nothing, which callers use as an explicit "never" pattern.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..chronicle import Chronicle, Event, FoodEvent, LifeEvent, local_hour, local_weekday

_NUMERIC_OPS = {"<", "<=", ">", ">=", "==", "!="}
VALID_OPS = _NUMERIC_OPS | {"contains", "in"}


def resolve_attr(event: Event, attr: str):
    """Attribute lookup used by pattern predicates; None when unavailable.

    Shared: ``hour`` (local, fractional), ``weekday`` (Mon=0), ``stream``.
    Food events add dish/total_g/rating/companions/place/barcode, the
    nutrition fields (kcal, carb_g, ..., capsaicin_scoville),
    ``micro.<name>`` micronutrient amounts and ``ingredient`` (the id list).
    Life events add their metric attributes plus ``duration_min``.
    """
    if attr == "hour":
        return local_hour(event.start_ms, event.tz_offset_min)
    if attr == "weekday":
        return local_weekday(event.start_ms, event.tz_offset_min)
    if isinstance(event, FoodEvent):
        if attr == "stream":
            return "food"
        if attr in ("dish", "total_g", "rating", "companions", "place", "barcode"):
            return getattr(event, attr)
        if attr == "ingredient":
            return event.ingredient_ids()
        if event.nutrition is not None:
            if attr.startswith("micro."):
                micro = event.nutrition.micronutrients.get(attr[len("micro."):])
                return micro.amount if micro else None
            value = getattr(event.nutrition, attr, None)
            if isinstance(value, (int, float)):
                return value
        return None
    if isinstance(event, LifeEvent):
        if attr == "stream":
            return event.stream
        if attr == "duration_min":
            return (event.end - event.start) / 60_000.0
        return event.metric(attr)
    return None


@dataclass(frozen=True)
class Condition:
    attr: str
    op: str
    value: object

    def __post_init__(self):
        if self.op not in VALID_OPS:
            raise ValueError(f"unknown op {self.op!r}")

    def matches(self, event: Event) -> bool:
        actual = resolve_attr(event, self.attr)
        if actual is None:
            return False
        if self.op == "contains":
            try:
                return self.value in actual
            except TypeError:
                return False
        if self.op == "in":
            return actual in self.value
        if self.op == "==":
            return actual == self.value
        if self.op == "!=":
            return actual != self.value
        try:
            if self.op == "<":
                return actual < self.value
            if self.op == "<=":
                return actual <= self.value
            if self.op == ">":
                return actual > self.value
            return actual >= self.value
        except TypeError:
            return False

    def to_dict(self) -> dict:
        return {"attr": self.attr, "op": self.op, "value": self.value}

    @classmethod
    def from_dict(cls, d: dict) -> "Condition":
        return cls(attr=d["attr"], op=d["op"], value=d["value"])


@dataclass(frozen=True)
class StepPredicate:
    stream: str                       # "food", "life", or a life stream name
    where: tuple[Condition, ...] = ()

    def matches(self, event: Event) -> bool:
        if self.stream == "food":
            if not isinstance(event, FoodEvent):
                return False
        elif self.stream == "life":
            if not isinstance(event, LifeEvent):
                return False
        else:
            if not (isinstance(event, LifeEvent) and event.stream == self.stream):
                return False
        return all(cond.matches(event) for cond in self.where)

    def to_dict(self) -> dict:
        return {"stream": self.stream, "where": [c.to_dict() for c in self.where]}

    @classmethod
    def from_dict(cls, d: dict) -> "StepPredicate":
        return cls(
            stream=d["stream"],
            where=tuple(Condition.from_dict(c) for c in d.get("where", [])),
        )


@dataclass(frozen=True)
class EventPattern:
    steps: tuple[StepPredicate, ...]
    max_gap_minutes: tuple[float, ...] = ()

    def __post_init__(self):
        if len(self.steps) < 1:
            raise ValueError("pattern needs at least one step")
        if len(self.max_gap_minutes) != len(self.steps) - 1:
            raise ValueError("need exactly len(steps) - 1 max gaps")
        for gap in self.max_gap_minutes:
            if gap < 0:
                raise ValueError("max gap must be >= 0")

    def to_dict(self) -> dict:
        return {
            "steps": [s.to_dict() for s in self.steps],
            "max_gap_minutes": list(self.max_gap_minutes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EventPattern":
        return cls(
            steps=tuple(StepPredicate.from_dict(s) for s in d["steps"]),
            max_gap_minutes=tuple(float(g) for g in d.get("max_gap_minutes", [])),
        )


@dataclass(frozen=True)
class Occurrence:
    event_ids: tuple[str, ...]
    start_ms: int          # start of the first matched event
    end_ms: int            # start of the last matched event


def _first_match(events: tuple[Event, ...], pattern: EventPattern,
                 from_idx: int) -> list[int] | None:
    """Lexicographically smallest feasible index tuple at or after from_idx.

    Depth-first with backtracking: the earliest choice for step i is only
    kept if the remaining steps can still complete, so the result really is
    the minimal tuple, not just a greedy guess.
    """
    steps = pattern.steps
    gaps_ms = [g * 60_000.0 for g in pattern.max_gap_minutes]

    def extend(step_idx: int, min_idx: int, prev_time: int) -> list[int] | None:
        for i in range(min_idx, len(events)):
            ev = events[i]
            if step_idx > 0:
                dt = ev.start_ms - prev_time
                if dt <= 0:
                    continue
                if dt > gaps_ms[step_idx - 1]:
                    break     # events are time-sorted; gaps only grow
            if steps[step_idx].matches(ev):
                if step_idx == len(steps) - 1:
                    return [i]
                rest = extend(step_idx + 1, i + 1, ev.start_ms)
                if rest is not None:
                    return [i] + rest
        return None

    return extend(0, from_idx, 0)


def find_occurrences(pattern: EventPattern, chronicle: Chronicle) -> list[Occurrence]:
    """All leftmost-earliest, non-overlapping occurrences of the pattern."""
    events = chronicle.events
    occurrences: list[Occurrence] = []
    idx = 0
    while idx < len(events):
        match = _first_match(events, pattern, idx)
        if match is None:
            break
        occurrences.append(Occurrence(
            event_ids=tuple(events[i].event_id for i in match),
            start_ms=events[match[0]].start_ms,
            end_ms=events[match[-1]].start_ms,
        ))
        idx = match[-1] + 1
    return occurrences
