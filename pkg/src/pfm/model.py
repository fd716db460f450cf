"""Personal food model: seeded rule base, personalization, and prediction.

The biological side starts from a machine-readable knowledge file of
diet/activity -> outcome rules with literature-backed prior directions. Each
rule is a hypothesis template with parameter slots ("$heavy_meal_kcal"),
filled partly from config defaults and partly from the person's own data
(usual bedtime, average intake), then run through the verification engine.
Rules whose pattern never occurs in the chronicle are kept as prior-only:
personalization annotates, it never deletes.

Predictions combine rule effects additively, weighted by per-context
validity, with a per-metric cap. When the cap binds, contributions are
rescaled proportionally so the reported delta always equals the sum of its
parts exactly.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from .chronicle import (
    Chronicle,
    FoodEvent,
    KNOWN_METRIC_UNITS,
    LifeEvent,
    local_hour,
)
from .config import EngineConfig
from .errors import InsufficientData, NoOccurrences, NoControls, NoProfile, NoRatedEvents, SchemaError
from .mining.verify import DERIVED_METRICS, Hypothesis, VerifiedRule, verify
from .taste import PreferenceProfile, TasteRegion, preference_profile, preference_score

_VALID_METRICS = set(KNOWN_METRIC_UNITS) | set(DERIVED_METRICS)
_DIRECTIONS = ("increase", "decrease")
_STRENGTHS = ("weak", "moderate", "strong")


def _fill_slots(node, params: dict):
    if isinstance(node, str) and node.startswith("$"):
        slot = node[1:]
        if slot not in params:
            raise KeyError(f"unbound parameter slot ${slot}")
        return params[slot]
    if isinstance(node, dict):
        return {k: _fill_slots(v, params) for k, v in node.items()}
    if isinstance(node, list):
        return [_fill_slots(v, params) for v in node]
    return node


@dataclass(frozen=True)
class KnowledgeRule:
    """One seeded rule: hypothesis template + prior from the literature."""

    rule_id: str
    description: str
    template: dict                    # hypothesis JSON with $slot placeholders
    params: dict                      # default slot values
    prior_direction: str              # "increase" | "decrease"
    prior_strength: str               # "weak" | "moderate" | "strong"
    citation: str = ""

    def instantiate(self, overrides: dict | None = None) -> Hypothesis:
        params = dict(self.params)
        if overrides:
            params.update({k: v for k, v in overrides.items() if k in self.params})
        filled = _fill_slots(self.template, params)
        filled["name"] = self.rule_id
        return Hypothesis.from_dict(filled)

    def to_dict(self) -> dict:
        return {
            "rule_id": self.rule_id,
            "description": self.description,
            "template": self.template,
            "params": self.params,
            "prior_direction": self.prior_direction,
            "prior_strength": self.prior_strength,
            "citation": self.citation,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "KnowledgeRule":
        return cls(
            rule_id=d["rule_id"],
            description=d.get("description", ""),
            template=d["template"],
            params=d.get("params", {}),
            prior_direction=d["prior_direction"],
            prior_strength=d.get("prior_strength", "weak"),
            citation=d.get("citation", ""),
        )


def seed_rulebase(path: str | Path) -> list[KnowledgeRule]:
    """Load and validate the knowledge file; every template must instantiate."""
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    entries = raw["rules"] if isinstance(raw, dict) else raw
    rules = []
    for entry in entries:
        rule_id = entry.get("rule_id", "<missing rule_id>")
        try:
            rule = KnowledgeRule.from_dict(entry)
        except KeyError as exc:
            raise SchemaError(f"rule {rule_id}: missing field {exc}") from exc
        if rule.prior_direction not in _DIRECTIONS:
            raise SchemaError(f"rule {rule_id}: prior_direction must be one of {_DIRECTIONS}")
        if rule.prior_strength not in _STRENGTHS:
            raise SchemaError(f"rule {rule_id}: prior_strength must be one of {_STRENGTHS}")
        try:
            hypothesis = rule.instantiate()
        except Exception as exc:
            raise SchemaError(f"rule {rule_id}: template does not instantiate: {exc}") from exc
        if hypothesis.outcome.metric not in _VALID_METRICS:
            raise SchemaError(
                f"rule {rule_id}: unknown outcome metric {hypothesis.outcome.metric!r}"
            )
        rules.append(rule)
    return rules


@dataclass(frozen=True)
class StaticConstraint:
    item_id: str
    severity: str        # "hard" blocks outright, "soft" only annotates
    note: str = ""

    def to_dict(self) -> dict:
        return {"item_id": self.item_id, "severity": self.severity, "note": self.note}

    @classmethod
    def from_dict(cls, d: dict) -> "StaticConstraint":
        return cls(item_id=d["item_id"], severity=d["severity"], note=d.get("note", ""))


@dataclass(frozen=True)
class PersonalizedRule:
    rule: KnowledgeRule
    hypothesis: Hypothesis
    status: str                       # "verified" | "prior_only"
    result: VerifiedRule | None = None
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "rule": self.rule.to_dict(),
            "hypothesis": self.hypothesis.to_dict(),
            "status": self.status,
            "result": self.result.to_dict() if self.result else None,
            "note": self.note,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PersonalizedRule":
        return cls(
            rule=KnowledgeRule.from_dict(d["rule"]),
            hypothesis=Hypothesis.from_dict(d["hypothesis"]),
            status=d["status"],
            result=VerifiedRule.from_dict(d["result"]) if d.get("result") else None,
            note=d.get("note", ""),
        )


@dataclass(frozen=True)
class OutcomePrediction:
    metric: str
    delta: float
    confidence: float
    contributing: tuple[tuple[str, float], ...]   # (rule_id, per-rule delta)

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "delta": self.delta,
            "confidence": self.confidence,
            "contributing": [[rid, d] for rid, d in self.contributing],
        }


@dataclass(frozen=True)
class PersonalFoodModel:
    user_id: str
    biological: tuple[PersonalizedRule, ...]
    preferential: PreferenceProfile | None
    static_constraints: tuple[StaticConstraint, ...] = ()
    built_at: int = 0
    span_days: float = 0.0

    def hard_blocked(self, ingredient_ids) -> list[str]:
        """Hard-constraint item ids present in the ingredient list."""
        hard = {c.item_id for c in self.static_constraints if c.severity == "hard"}
        return sorted(hard.intersection(ingredient_ids))

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "biological": [r.to_dict() for r in self.biological],
            "preferential": self.preferential.to_dict() if self.preferential else None,
            "static_constraints": [c.to_dict() for c in self.static_constraints],
            "built_at": self.built_at,
            "span_days": self.span_days,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PersonalFoodModel":
        return cls(
            user_id=d["user_id"],
            biological=tuple(PersonalizedRule.from_dict(r) for r in d["biological"]),
            preferential=(PreferenceProfile.from_dict(d["preferential"])
                          if d.get("preferential") else None),
            static_constraints=tuple(StaticConstraint.from_dict(c)
                                     for c in d.get("static_constraints", [])),
            built_at=int(d.get("built_at", 0)),
            span_days=float(d.get("span_days", 0.0)),
        )

    def summary(self) -> dict:
        return {
            "user_id": self.user_id,
            "rules_total": len(self.biological),
            "rules_verified": sum(1 for r in self.biological if r.status == "verified"),
            "rules_prior_only": sum(1 for r in self.biological if r.status == "prior_only"),
            "preference_regions": (len(self.preferential.preferred_regions)
                                   if self.preferential else 0),
            "hard_constraints": sorted(c.item_id for c in self.static_constraints
                                       if c.severity == "hard"),
            "span_days": self.span_days,
            "built_at": self.built_at,
        }


# ---------------------------------------------------------------------------
# user statistics feeding template slots
# ---------------------------------------------------------------------------

def usual_bedtime_hour(chronicle: Chronicle, default: float) -> float:
    """Circular mean of sleep-event local start hours (handles midnight wrap)."""
    hours = [
        local_hour(ev.start, ev.tz_offset_min)
        for ev in chronicle.events
        if isinstance(ev, LifeEvent) and ev.stream == "sleep"
    ]
    if not hours:
        return default
    angles = [2.0 * math.pi * h / 24.0 for h in hours]
    sin_m = sum(math.sin(a) for a in angles) / len(angles)
    cos_m = sum(math.cos(a) for a in angles) / len(angles)
    if sin_m == 0.0 and cos_m == 0.0:
        return default
    return (math.atan2(sin_m, cos_m) / (2.0 * math.pi) * 24.0) % 24.0


def daily_average_kcal(chronicle: Chronicle) -> float | None:
    total = 0.0
    seen = False
    for ev in chronicle.events:
        if isinstance(ev, FoodEvent) and ev.nutrition is not None:
            total += ev.nutrition.kcal
            seen = True
    if not seen:
        return None
    days = max(1.0, chronicle.span_days())
    return total / days


def user_slot_values(chronicle: Chronicle, config: EngineConfig) -> dict:
    """Chronicle-derived values for the template slots that depend on the user."""
    bedtime = usual_bedtime_hour(chronicle, config.default_bedtime_hour)
    values = {
        "bedtime_hour": bedtime,
        "bedtime_window_start": max(0.0, bedtime - config.bedtime_window_hours),
    }
    avg = daily_average_kcal(chronicle)
    if avg is not None and avg > 0:
        values["heavy_meal_kcal"] = config.heavy_meal_kcal_fraction * avg
    return values


# ---------------------------------------------------------------------------
# building and using the model
# ---------------------------------------------------------------------------

def personalize(rulebase: list[KnowledgeRule], chronicle: Chronicle,
                config: EngineConfig) -> tuple[PersonalizedRule, ...]:
    """Run every seed rule's hypothesis against the chronicle.

    Rules whose input pattern never occurs (or has no usable controls) stay
    prior-only with a note; everything else carries its verification result.
    """
    span = chronicle.span_days()
    if span < config.min_days:
        raise InsufficientData(config.min_days, span)
    overrides = user_slot_values(chronicle, config)
    out = []
    for rule in rulebase:
        hypothesis = rule.instantiate(overrides)
        try:
            result = verify(
                hypothesis, chronicle,
                alpha=config.alpha,
                n_permutations=config.n_permutations,
                seed=config.seed,
                bootstrap_resamples=config.bootstrap_resamples,
                min_effect=config.min_effect,
                bins_k=config.bins_k,
                min_group_units=config.min_group_units,
            )
        except NoOccurrences:
            out.append(PersonalizedRule(rule, hypothesis, "prior_only",
                                        note="input pattern never occurs"))
            continue
        except NoControls:
            out.append(PersonalizedRule(rule, hypothesis, "prior_only",
                                        note="no eligible control windows"))
            continue
        out.append(PersonalizedRule(rule, hypothesis, "verified", result=result))
    return tuple(out)


def build_model(chronicle: Chronicle, config: EngineConfig,
                rulebase: list[KnowledgeRule],
                constraints: tuple[StaticConstraint, ...] = (),
                built_at: int = 0) -> PersonalFoodModel:
    """Assemble biological + preferential parts into one model value."""
    biological = personalize(rulebase, chronicle, config)
    try:
        preferential = preference_profile(
            chronicle,
            rating_threshold=config.rating_threshold,
            clusters_max=config.clusters_max,
            cluster_cutoff=config.cluster_cutoff,
        )
    except NoRatedEvents:
        preferential = None
    return PersonalFoodModel(
        user_id=chronicle.user_id,
        biological=biological,
        preferential=preferential,
        static_constraints=tuple(constraints),
        built_at=built_at,
        span_days=chronicle.span_days(),
    )


def predict_outcome(model: PersonalFoodModel, event: FoodEvent,
                    context: dict, config: EngineConfig) -> list[OutcomePrediction]:
    """Apply every matching rule to a hypothetical food event.

    A rule applies when its (single-step) input pattern matches the event and
    the context values land in one of its verified context groups. Verified
    rules contribute validity-weighted per-context effects; prior-only rules
    contribute their literature direction at a small configured magnitude.
    Multi-step patterns cannot match a single hypothetical event and are
    skipped.
    """
    per_metric: dict[str, list[tuple[str, float, float]]] = {}
    for entry in model.biological:
        pattern = entry.hypothesis.input_pattern
        if len(pattern.steps) != 1 or not pattern.steps[0].matches(event):
            continue
        metric = entry.hypothesis.outcome.metric
        if entry.status == "verified" and entry.result is not None:
            ctx = entry.result.context_for(context)
            if ctx is None or ctx.effect is None:
                continue
            contribution = ctx.validity * ctx.effect
            validity = ctx.validity
        else:
            magnitude = config.prior_fraction * config.min_effect
            sign = 1.0 if entry.rule.prior_direction == "increase" else -1.0
            contribution = sign * magnitude
            validity = 0.0
        per_metric.setdefault(metric, []).append((entry.rule.rule_id, contribution, validity))

    predictions = []
    for metric in sorted(per_metric):
        parts = per_metric[metric]
        delta = sum(c for _, c, _ in parts)
        cap = config.cap_for(metric)
        if abs(delta) > cap:
            scale = cap / abs(delta)
            parts = [(rid, c * scale, v) for rid, c, v in parts]
            delta = sum(c for _, c, _ in parts)
        confidence = sum(v for _, _, v in parts) / len(parts)
        predictions.append(OutcomePrediction(
            metric=metric,
            delta=delta,
            confidence=confidence,
            contributing=tuple((rid, c) for rid, c, _ in parts),
        ))
    return predictions


def predict_liking(model: PersonalFoodModel, region: TasteRegion,
                   epsilon: float = 0.01) -> float:
    if model.preferential is None:
        raise NoProfile(f"user {model.user_id} has no preference profile")
    return preference_score(model.preferential, region, epsilon=epsilon)
