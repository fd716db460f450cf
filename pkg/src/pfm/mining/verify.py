"""Two-step hypothesis verification over one person's chronicle.

Treatment units are occurrences of the input pattern; control units are
eligible non-treatment windows: for every local day in the chronicle span on
which the pattern did not occur, one pseudo-unit anchored at the median
treated time-of-day. Both kinds link to an outcome (e.g. the quality score of
the next sleep event within twelve hours) and carry confounder values
computed at their timestamp.

Units are then grouped by contextual matching and each group gets a
permutation test, Benjamini-Hochberg adjustment across groups, and a
bootstrap validity score. Everything is deterministic given the seed.

The control-window definition above is this engine's own operationalization
of "compare against similar situations"; it is the one deliberate modeling
choice here, so it is stated loudly rather than buried.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..chronicle import (
    MS_PER_DAY,
    MS_PER_HOUR,
    MS_PER_MINUTE,
    Chronicle,
    LifeEvent,
    is_weekend,
    local_day_index,
    local_hour,
)
from ..errors import NoControls, NoOccurrences
from .matching import ConfounderSpec, ContextGroup, Unit, contextual_match, signature_for
from .patterns import EventPattern, find_occurrences
from .stats import benjamini_hochberg, bootstrap_sign_validity, permutation_test


@dataclass(frozen=True)
class OutcomeSelector:
    """Where a unit's outcome number comes from.

    The first event of ``stream`` starting within ``within_hours`` after the
    unit is the target; ``metric`` reads its attributes, or one of the
    derived metrics ``start_hour`` (local) / ``duration_min``.
    """

    stream: str = "sleep"
    metric: str = "sleep_quality"
    within_hours: float = 12.0

    def to_dict(self) -> dict:
        return {"stream": self.stream, "metric": self.metric,
                "within_hours": self.within_hours}

    @classmethod
    def from_dict(cls, d: dict) -> "OutcomeSelector":
        return cls(stream=d["stream"], metric=d["metric"],
                   within_hours=float(d.get("within_hours", 12.0)))


#: metrics the outcome selector can derive instead of reading attributes
DERIVED_METRICS = ("start_hour", "duration_min")


def outcome_value(event: LifeEvent, metric: str) -> float | None:
    if metric == "start_hour":
        return local_hour(event.start, event.tz_offset_min)
    if metric == "duration_min":
        return (event.end - event.start) / 60_000.0
    return event.metric(metric)


@dataclass(frozen=True)
class ConfounderSelector:
    """Named confounder plus the recipe for computing it at a unit's time.

    Selectors:
      - ``weekday_weekend``: categorical weekday/weekend.
      - ``daily_sum``: sum of ``metric`` over ``stream`` events that local day
        (0.0 when the day has none).
      - ``daily_any``: categorical yes/no, any ``stream`` event that local day.
      - ``prior_metric``: ``metric`` of the most recent ``stream`` event
        strictly before the unit (missing when there is none).
    """

    name: str
    kind: str                      # "categorical" | "numeric"
    selector: str
    stream: str | None = None
    metric: str | None = None

    def __post_init__(self):
        if self.selector not in ("weekday_weekend", "daily_sum", "daily_any", "prior_metric"):
            raise ValueError(f"unknown confounder selector {self.selector!r}")

    def spec(self) -> ConfounderSpec:
        return ConfounderSpec(name=self.name, kind=self.kind)

    def compute(self, chronicle: Chronicle, t_ms: int, tz_offset_min: int):
        if self.selector == "weekday_weekend":
            return "weekend" if is_weekend(t_ms, tz_offset_min) else "weekday"
        if self.selector in ("daily_sum", "daily_any"):
            day = local_day_index(t_ms, tz_offset_min)
            total, seen = 0.0, False
            for ev in chronicle.events:
                if not (isinstance(ev, LifeEvent) and ev.stream == self.stream):
                    continue
                if local_day_index(ev.start_ms, ev.tz_offset_min) != day:
                    continue
                seen = True
                if self.metric is not None:
                    value = ev.metric(self.metric)
                    if value is not None:
                        total += value
            if self.selector == "daily_any":
                return "yes" if seen else "no"
            return total
        # prior_metric
        best = None
        for ev in chronicle.events:
            if ev.start_ms >= t_ms:
                break
            if isinstance(ev, LifeEvent) and ev.stream == self.stream:
                best = ev
        if best is None or self.metric is None:
            return None
        return outcome_value(best, self.metric)

    def to_dict(self) -> dict:
        d: dict = {"name": self.name, "kind": self.kind, "selector": self.selector}
        if self.stream is not None:
            d["stream"] = self.stream
        if self.metric is not None:
            d["metric"] = self.metric
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ConfounderSelector":
        return cls(name=d["name"], kind=d["kind"], selector=d["selector"],
                   stream=d.get("stream"), metric=d.get("metric"))


@dataclass(frozen=True)
class Hypothesis:
    """Input pattern -> outcome metric, conditioned on confounders.

    An empty confounder tuple means "explicitly unadjusted" (one context
    group), which is also how a naive estimate is produced on purpose.
    """

    input_pattern: EventPattern
    outcome: OutcomeSelector
    confounders: tuple[ConfounderSelector, ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.outcome.metric == "":
            raise ValueError("outcome metric must be named")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "input": self.input_pattern.to_dict(),
            "outcome": self.outcome.to_dict(),
            "confounders": [c.to_dict() for c in self.confounders],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Hypothesis":
        return cls(
            input_pattern=EventPattern.from_dict(d["input"]),
            outcome=OutcomeSelector.from_dict(d["outcome"]),
            confounders=tuple(ConfounderSelector.from_dict(c)
                              for c in d.get("confounders", [])),
            name=d.get("name", ""),
        )


@dataclass(frozen=True)
class ContextResult:
    signature: tuple[tuple[str, str], ...]
    effect: float | None
    p_value: float | None
    adjusted_p: float | None
    n_treated: int
    n_control: int
    validity: float
    low_power: bool
    degenerate: bool = False

    def to_dict(self) -> dict:
        return {
            "signature": [[n, lab] for n, lab in self.signature],
            "effect": self.effect,
            "p_value": self.p_value,
            "adjusted_p": self.adjusted_p,
            "n_treated": self.n_treated,
            "n_control": self.n_control,
            "validity": self.validity,
            "low_power": self.low_power,
            "degenerate": self.degenerate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ContextResult":
        return cls(
            signature=tuple((n, lab) for n, lab in d["signature"]),
            effect=d["effect"],
            p_value=d["p_value"],
            adjusted_p=d["adjusted_p"],
            n_treated=int(d["n_treated"]),
            n_control=int(d["n_control"]),
            validity=float(d["validity"]),
            low_power=bool(d["low_power"]),
            degenerate=bool(d.get("degenerate", False)),
        )


@dataclass(frozen=True)
class VerifiedRule:
    hypothesis: Hypothesis
    contexts: tuple[ContextResult, ...]
    overall_direction: str                 # "increase" | "decrease" | "none"
    overall_effect: float | None
    overall_p: float | None
    n_treated_total: int
    n_control_total: int
    dropped_units: int
    bin_edges: dict[str, tuple[float, ...]] = field(default_factory=dict)
    alpha: float = 0.05
    seed: int = 0

    def context_for(self, confounder_values: dict[str, object]) -> ContextResult | None:
        """Find the context whose signature matches fresh confounder values."""
        specs = [c.spec() for c in self.hypothesis.confounders]
        try:
            sig = signature_for(confounder_values, specs, self.bin_edges)
        except Exception:
            return None
        for ctx in self.contexts:
            if ctx.signature == sig:
                return ctx
        return None

    def to_dict(self) -> dict:
        return {
            "hypothesis": self.hypothesis.to_dict(),
            "contexts": [c.to_dict() for c in self.contexts],
            "overall_direction": self.overall_direction,
            "overall_effect": self.overall_effect,
            "overall_p": self.overall_p,
            "n_treated_total": self.n_treated_total,
            "n_control_total": self.n_control_total,
            "dropped_units": self.dropped_units,
            "bin_edges": {k: list(v) for k, v in sorted(self.bin_edges.items())},
            "alpha": self.alpha,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "VerifiedRule":
        return cls(
            hypothesis=Hypothesis.from_dict(d["hypothesis"]),
            contexts=tuple(ContextResult.from_dict(c) for c in d["contexts"]),
            overall_direction=d["overall_direction"],
            overall_effect=d["overall_effect"],
            overall_p=d["overall_p"],
            n_treated_total=int(d["n_treated_total"]),
            n_control_total=int(d["n_control_total"]),
            dropped_units=int(d["dropped_units"]),
            bin_edges={k: tuple(v) for k, v in d.get("bin_edges", {}).items()},
            alpha=float(d["alpha"]),
            seed=int(d["seed"]),
        )


def link_outcome(chronicle: Chronicle, t_ms: int, selector: OutcomeSelector) -> float | None:
    """Outcome of the first matching event starting in (t, t + window]."""
    horizon = t_ms + selector.within_hours * MS_PER_HOUR
    for ev in chronicle.events:
        if ev.start_ms <= t_ms:
            continue
        if ev.start_ms > horizon:
            break
        if isinstance(ev, LifeEvent) and ev.stream == selector.stream:
            value = outcome_value(ev, selector.metric)
            if value is not None:
                return float(value)
    return None


def _median_minutes(values: list[int]) -> int:
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def build_units(hypothesis: Hypothesis, chronicle: Chronicle) -> tuple[list[Unit], int]:
    """Treated + control units with outcomes and confounder values attached.

    Returns (units, dropped) where dropped counts units lost to a missing
    outcome or missing confounder value.
    """
    if len(chronicle) == 0:
        raise NoOccurrences("chronicle is empty")
    occurrences = find_occurrences(hypothesis.input_pattern, chronicle)
    if not occurrences:
        raise NoOccurrences(hypothesis.name or "input pattern never occurs")

    tz = chronicle.dominant_tz_offset()
    dropped = 0
    units: list[Unit] = []

    treated_days = set()
    anchor_minutes: list[int] = []
    for occ in occurrences:
        treated_days.add(local_day_index(occ.end_ms, tz))
        anchor_minutes.append(int((occ.end_ms + tz * MS_PER_MINUTE) % MS_PER_DAY
                                  // MS_PER_MINUTE))

    for occ in occurrences:
        outcome = link_outcome(chronicle, occ.end_ms, hypothesis.outcome)
        if outcome is None:
            dropped += 1
            continue
        units.append(Unit(
            unit_id=f"t:{occ.event_ids[-1]}",
            t_ms=occ.end_ms,
            treated=True,
            outcome=outcome,
            confounders={},
        ))
    if not units:
        raise NoOccurrences("no treated unit has a linked outcome")

    anchor = _median_minutes(anchor_minutes)
    first_day = local_day_index(chronicle.events[0].start_ms, tz)
    last_day = local_day_index(chronicle.events[-1].start_ms, tz)
    n_controls = 0
    for day in range(first_day, last_day + 1):
        if day in treated_days:
            continue
        t_ms = day * MS_PER_DAY + anchor * MS_PER_MINUTE - tz * MS_PER_MINUTE
        outcome = link_outcome(chronicle, t_ms, hypothesis.outcome)
        if outcome is None:
            dropped += 1
            continue
        units.append(Unit(
            unit_id=f"c:day{day}",
            t_ms=t_ms,
            treated=False,
            outcome=outcome,
            confounders={},
        ))
        n_controls += 1
    if n_controls == 0:
        raise NoControls("no eligible non-treatment windows with an outcome")

    if hypothesis.confounders:
        enriched: list[Unit] = []
        for unit in units:
            values: dict[str, object] = {}
            ok = True
            for sel in hypothesis.confounders:
                value = sel.compute(chronicle, unit.t_ms, tz)
                if value is None:
                    ok = False
                    break
                values[sel.name] = value
            if not ok:
                dropped += 1
                continue
            enriched.append(Unit(
                unit_id=unit.unit_id, t_ms=unit.t_ms, treated=unit.treated,
                outcome=unit.outcome, confounders=values,
            ))
        units = enriched
        if not any(u.treated for u in units):
            raise NoOccurrences("all treated units dropped")
        if not any(not u.treated for u in units):
            raise NoControls("all control units dropped")
    return units, dropped


def verify(hypothesis: Hypothesis, chronicle: Chronicle,
           alpha: float = 0.05, n_permutations: int = 500, *,
           seed: int = 1234, bootstrap_resamples: int = 500,
           min_effect: float = 2.0, bins_k: int = 3,
           min_group_units: int = 5) -> VerifiedRule:
    """Estimate per-context effect, significance and validity of a hypothesis.

    Deterministic given (chronicle, hypothesis, seed): the RNG is consumed in
    sorted-signature group order, permutation test before bootstrap.
    """
    if not (0.0 < alpha < 1.0):
        raise ValueError("alpha must be in (0, 1)")
    if n_permutations < 200:
        raise ValueError("n_permutations must be >= 200")

    units, dropped = build_units(hypothesis, chronicle)
    specs = [c.spec() for c in hypothesis.confounders]
    groups, bin_edges = contextual_match(units, specs, bins_k=bins_k,
                                         min_group_units=min_group_units)

    rng = np.random.default_rng(seed)
    raw: list[dict] = []
    for group in groups:
        entry: dict = {
            "signature": group.signature,
            "n_treated": group.n_treated,
            "n_control": group.n_control,
            "low_power": group.low_power,
            "effect": None, "p": None, "validity": 0.0, "degenerate": False,
        }
        if group.n_treated >= 1 and group.n_control >= 1:
            treated = np.array([u.outcome for u in group.treated])
            control = np.array([u.outcome for u in group.control])
            pooled_flat = np.ptp(np.concatenate([treated, control])) == 0.0
            effect, p = permutation_test(treated, control, n_permutations, rng)
            entry["effect"] = effect
            entry["p"] = p
            entry["degenerate"] = bool(pooled_flat)
            if pooled_flat:
                entry["validity"] = 0.0
            else:
                entry["validity"] = bootstrap_sign_validity(
                    treated, control, effect, min_effect, bootstrap_resamples, rng)
        raw.append(entry)

    testable = [e for e in raw if e["p"] is not None]
    adjusted = benjamini_hochberg([e["p"] for e in testable])
    for e, adj in zip(testable, adjusted):
        e["adjusted_p"] = adj

    contexts = tuple(
        ContextResult(
            signature=e["signature"],
            effect=e["effect"],
            p_value=e["p"],
            adjusted_p=e.get("adjusted_p"),
            n_treated=e["n_treated"],
            n_control=e["n_control"],
            validity=e["validity"],
            low_power=e["low_power"],
            degenerate=e["degenerate"],
        )
        for e in raw
    )

    eligible = [c for c in contexts
                if not c.low_power and c.effect is not None and c.adjusted_p is not None]
    if eligible:
        weights = np.array([c.n_treated + c.n_control for c in eligible], dtype=float)
        effects = np.array([c.effect for c in eligible])
        overall_effect = float(np.sum(weights * effects) / weights.sum())
        overall_p = min(c.adjusted_p for c in eligible)
        if overall_effect > 1e-12:
            direction = "increase"
        elif overall_effect < -1e-12:
            direction = "decrease"
        else:
            direction = "none"
    else:
        overall_effect, overall_p, direction = None, None, "none"

    return VerifiedRule(
        hypothesis=hypothesis,
        contexts=contexts,
        overall_direction=direction,
        overall_effect=overall_effect,
        overall_p=overall_p,
        n_treated_total=sum(c.n_treated for c in contexts),
        n_control_total=sum(c.n_control for c in contexts),
        dropped_units=dropped,
        bin_edges=bin_edges,
        alpha=alpha,
        seed=seed,
    )
