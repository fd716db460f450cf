"""Shared generators and brute-force oracles for the test suite.

The oracles here are deliberately dumb: full enumeration, nested loops,
sort-and-index arithmetic. They stay independent of the library code paths
they check.
"""

from __future__ import annotations

import numpy as np

from pfm.chronicle import (
    Chronicle,
    FoodEvent,
    InputChannel,
    LifeEvent,
    MetricValue,
    MS_PER_DAY,
    MS_PER_HOUR,
)
from pfm.enrichment import NutritionFacts
from pfm.mining.patterns import Condition, EventPattern, StepPredicate
from pfm.taste import TasteRegion, TasteVector

BASE_MS = 1_704_067_200_000   # 2024-01-01T00:00Z

DISHES = ("oatmeal", "pasta", "salad", "stew", "tacos", "soup")
INGREDIENTS = ("kiwi", "cherry", "milk", "rice", "bean", "pepper")


def rand_taste_vector(rng: np.random.Generator) -> TasteVector:
    return TasteVector(*[float(v) for v in rng.random(6)])


def rand_region(rng: np.random.Generator, max_width: float = 0.4) -> TasteRegion:
    lo = rng.random(6) * (1.0 - max_width)
    hi = lo + rng.random(6) * max_width
    centroid = lo + (hi - lo) * rng.random(6)
    return TasteRegion(
        lo=TasteVector(*[float(v) for v in lo]),
        hi=TasteVector(*[float(v) for v in np.clip(hi, 0, 1)]),
        sample_count=int(rng.integers(1, 10)),
        centroid=TasteVector(*[float(v) for v in np.clip(centroid, 0, 1)]),
    )


def rand_food_event(rng: np.random.Generator, idx: int, t_ms: int,
                    user: str = "u1") -> FoodEvent:
    n_ing = int(rng.integers(0, 3))
    ingredients = tuple(
        (str(rng.choice(INGREDIENTS)), float(rng.uniform(10, 300)))
        for _ in range(n_ing)
    )
    rated = rng.random() < 0.4
    return FoodEvent(
        event_id=f"e{idx:05d}",
        user_id=user,
        dish=str(rng.choice(DISHES)),
        ingredients=ingredients,
        total_g=float(rng.uniform(50, 600)),
        eaten_at=t_ms,
        logged_at=t_ms + int(rng.integers(0, 3_600_000)),
        nutrition=NutritionFacts(
            kcal=float(rng.uniform(50, 1400)),
            carb_g=float(rng.uniform(0, 120)),
            protein_g=float(rng.uniform(0, 60)),
            fat_g=float(rng.uniform(0, 60)),
            sugar_g=float(rng.uniform(0, 60)),
        ),
        taste=rand_region(rng) if rng.random() < 0.6 else None,
        rating=int(rng.integers(1, 6)) if rated else None,
        channel=InputChannel.API,
    )


def rand_life_event(rng: np.random.Generator, idx: int, t_ms: int,
                    user: str = "u1") -> LifeEvent:
    stream = str(rng.choice(("sleep", "exercise", "steps", "stress")))
    duration = int(rng.integers(1, 8 * MS_PER_HOUR))
    attributes = {}
    if stream == "sleep":
        attributes = {
            "sleep_quality": MetricValue(float(rng.uniform(20, 100)), "score"),
            "sleep_latency": MetricValue(float(rng.uniform(2, 60)), "min"),
        }
    elif stream == "exercise":
        attributes = {"duration": MetricValue(float(rng.uniform(10, 90)), "min")}
    elif stream == "steps":
        attributes = {"count": MetricValue(float(rng.integers(500, 20_000)), "count")}
    else:
        attributes = {"stress": MetricValue(float(rng.uniform(0, 100)), "score")}
    return LifeEvent(
        event_id=f"e{idx:05d}",
        user_id=user,
        stream=stream,
        start=t_ms,
        end=t_ms + duration,
        attributes=attributes,
    )


def random_chronicle(rng: np.random.Generator, n_events: int,
                     n_days: int = 30, user: str = "u1") -> Chronicle:
    events = []
    times = sorted(
        int(BASE_MS + rng.integers(0, n_days * MS_PER_DAY)) for _ in range(n_events)
    )
    for idx, t in enumerate(times):
        if rng.random() < 0.5:
            events.append(rand_food_event(rng, idx, t, user))
        else:
            events.append(rand_life_event(rng, idx, t, user))
    return Chronicle.build(user, events)


def random_pattern(rng: np.random.Generator) -> EventPattern:
    n_steps = int(rng.integers(1, 4))
    steps = []
    for _ in range(n_steps):
        kind = rng.random()
        if kind < 0.45:
            conds = []
            if rng.random() < 0.6:
                conds.append(Condition("kcal", ">", float(rng.uniform(200, 1000))))
            if rng.random() < 0.4:
                conds.append(Condition("hour", ">=", float(rng.uniform(0, 20))))
            if rng.random() < 0.3:
                conds.append(Condition("ingredient", "contains",
                                       str(rng.choice(INGREDIENTS))))
            steps.append(StepPredicate(stream="food", where=tuple(conds)))
        elif kind < 0.75:
            conds = []
            if rng.random() < 0.5:
                conds.append(Condition("sleep_quality", ">",
                                       float(rng.uniform(30, 80))))
            steps.append(StepPredicate(stream="sleep", where=tuple(conds)))
        else:
            conds = []
            if rng.random() < 0.5:
                conds.append(Condition("duration_min", ">=",
                                       float(rng.uniform(10, 60))))
            steps.append(StepPredicate(stream="exercise", where=tuple(conds)))
    gaps = tuple(float(rng.uniform(60, 36 * 60)) for _ in range(n_steps - 1))
    return EventPattern(steps=tuple(steps), max_gap_minutes=gaps)


# ---------------------------------------------------------------------------
# oracles
# ---------------------------------------------------------------------------

def occurrences_bruteforce(pattern: EventPattern, chronicle: Chronicle) -> list[tuple[str, ...]]:
    """Exhaustive enumeration of all matches, then the same leftmost-earliest
    non-overlapping selection, done the slow way."""
    events = chronicle.events
    n = len(events)
    k = len(pattern.steps)
    gaps_ms = [g * 60_000.0 for g in pattern.max_gap_minutes]
    matches: list[tuple[int, ...]] = []

    def rec(prefix: list[int]) -> None:
        depth = len(prefix)
        if depth == k:
            matches.append(tuple(prefix))
            return
        start = prefix[-1] + 1 if prefix else 0
        for i in range(start, n):
            if depth > 0:
                dt = events[i].start_ms - events[prefix[-1]].start_ms
                if dt <= 0 or dt > gaps_ms[depth - 1]:
                    continue
            if pattern.steps[depth].matches(events[i]):
                rec(prefix + [i])

    rec([])
    chosen: list[tuple[int, ...]] = []
    last = -1
    while True:
        candidates = [m for m in matches if m[0] > last]
        if not candidates:
            break
        best = min(candidates)
        chosen.append(best)
        last = best[-1]
    return [tuple(events[i].event_id for i in m) for m in chosen]


def _oracle_labels(event, stream: str, by: str, edges: list[float] | None) -> list[str]:
    if stream == "food":
        if not isinstance(event, FoodEvent):
            return []
        if by == "dish":
            return [event.dish] if event.dish else []
        if by == "ingredient":
            return sorted({i for i, _ in event.ingredients})
        return ["food"]
    if not (isinstance(event, LifeEvent) and event.stream == stream):
        return []
    if by == "presence":
        return [stream]
    mv = event.attributes.get(by)
    if mv is None:
        return []
    idx = 0
    for e in edges or []:
        if mv.value > e:
            idx += 1
    return [f"{by}:b{idx}"]


def oracle_metric_edges(chronicle: Chronicle, stream: str, metric: str,
                        bins: int = 3) -> list[float]:
    values = sorted(
        ev.attributes[metric].value
        for ev in chronicle.events
        if isinstance(ev, LifeEvent) and ev.stream == stream and metric in ev.attributes
    )
    if not values or values[0] == values[-1]:
        return []
    lo, hi = values[0], values[-1]
    step = (hi - lo) / bins
    return [lo + step * i for i in range(1, bins)]


def cooccurrence_bruteforce(chronicle: Chronicle, stream_a: str, by_a: str,
                            stream_b: str, by_b: str,
                            window_minutes: float) -> dict[tuple[str, str], int]:
    """Full O(n^2) pair scan with independent labeling and binning."""
    window_ms = window_minutes * 60_000.0
    edges_a = oracle_metric_edges(chronicle, stream_a, by_a) if by_a not in (
        "dish", "ingredient", "presence") else None
    edges_b = oracle_metric_edges(chronicle, stream_b, by_b) if by_b not in (
        "dish", "ingredient", "presence") else None
    counts: dict[tuple[str, str], int] = {}
    for ea in chronicle.events:
        labels_a = _oracle_labels(ea, stream_a, by_a, edges_a)
        if not labels_a:
            continue
        for eb in chronicle.events:
            dt = eb.start_ms - ea.start_ms
            if not (0 < dt <= window_ms):
                continue
            for la in labels_a:
                for lb in _oracle_labels(eb, stream_b, by_b, edges_b):
                    counts[(la, lb)] = counts.get((la, lb), 0) + 1
    return counts


def quantile_sorted_oracle(values: list[float], q: float) -> float:
    """Linear interpolation between order statistics, by hand."""
    ordered = sorted(values)
    if len(ordered) == 1:
        return ordered[0]
    pos = q * (len(ordered) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(ordered) - 1)
    frac = pos - lo
    return ordered[lo] * (1 - frac) + ordered[hi] * frac


def box_overlap_oracle(lo_a, hi_a, lo_b, hi_b, epsilon: float = 0.01) -> float:
    """Intersection volume over smaller volume, plain loops, own inflation."""
    lo_a, hi_a = list(lo_a), list(hi_a)
    lo_b, hi_b = list(lo_b), list(hi_b)

    def inflate(lo, hi):
        if all(h - l > 0 for l, h in zip(lo, hi)):
            return lo, hi
        out_lo, out_hi = [], []
        for l, h in zip(lo, hi):
            if h - l == 0:
                l2, h2 = l - epsilon / 2, h + epsilon / 2
                if l2 < 0:
                    l2, h2 = 0.0, epsilon
                elif h2 > 1:
                    l2, h2 = 1 - epsilon, 1.0
                out_lo.append(l2)
                out_hi.append(h2)
            else:
                out_lo.append(l)
                out_hi.append(h)
        return out_lo, out_hi

    lo_a, hi_a = inflate(lo_a, hi_a)
    lo_b, hi_b = inflate(lo_b, hi_b)
    vol_a = vol_b = vol_i = 1.0
    for i in range(len(lo_a)):
        vol_a *= hi_a[i] - lo_a[i]
        vol_b *= hi_b[i] - lo_b[i]
        width = min(hi_a[i], hi_b[i]) - max(lo_a[i], lo_b[i])
        vol_i *= max(0.0, width)
    smaller = min(vol_a, vol_b)
    return vol_i / smaller if smaller > 0 else 0.0
