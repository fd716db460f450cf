"""Deterministic synthetic chronicles with planted ground-truth effects.

The generated person eats three scheduled meals a day, sometimes exercises,
logs daily steps, and sleeps every night around 23:00 local. Sleep quality is
a constant baseline plus Gaussian noise, shifted additively by whichever
planted rules fired that day, so recovery tolerances in tests mean something.

The manifest records every planted effect and, per night, the baseline,
noise, applied effects and counterfactual outcome; the true average treatment
effect is recomputable from it exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chronicle import (
    Chronicle,
    FoodEvent,
    InputChannel,
    LifeEvent,
    MetricValue,
    MS_PER_DAY,
    MS_PER_HOUR,
    MS_PER_MINUTE,
)
from .enrichment import Micronutrient, NutritionFacts
from .taste import TasteRegion, TasteVector

#: 2024-01-01T00:00:00Z, a Monday; all generated chronicles start here
EPOCH_MS = 1_704_067_200_000

# dish palette: name -> (kcal per meal, sugar g, taste vector)
_DISHES = {
    "oatmeal": (380.0, 12.0, (0.10, 0.15, 0.45, 0.00, 0.05, 0.05)),
    "veggie omelette": (420.0, 4.0, (0.55, 0.45, 0.10, 0.05, 0.05, 0.05)),
    "chicken rice bowl": (640.0, 6.0, (0.60, 0.50, 0.15, 0.10, 0.10, 0.05)),
    "pasta marinara": (680.0, 14.0, (0.55, 0.45, 0.30, 0.05, 0.35, 0.10)),
    "salmon salad": (520.0, 5.0, (0.65, 0.40, 0.10, 0.00, 0.20, 0.10)),
    "bean stew": (600.0, 9.0, (0.50, 0.45, 0.20, 0.15, 0.15, 0.10)),
}
_HEAVY_DISH = ("roast feast", 1500.0, 18.0, (0.70, 0.60, 0.25, 0.10, 0.10, 0.10))


@dataclass(frozen=True)
class PlantedRule:
    """One planted cause: a daily trigger that shifts the night's outcome.

    Kinds: ``heavy_meal`` replaces dinner with a large late meal,
    ``ingredient`` adds an evening snack containing ``ingredient``,
    ``exercise`` adds an afternoon workout. ``probability`` is the daily
    chance of the trigger when no confounding structure overrides it.
    """

    rule_id: str
    kind: str
    effect: float
    probability: float = 0.3
    ingredient: str = "kiwi"
    outcome_metric: str = "sleep_quality"

    def __post_init__(self):
        if self.kind not in ("heavy_meal", "ingredient", "exercise"):
            raise ValueError(f"unknown planted kind {self.kind!r}")

    def to_dict(self) -> dict:
        return {"rule_id": self.rule_id, "kind": self.kind, "effect": self.effect,
                "probability": self.probability, "ingredient": self.ingredient,
                "outcome_metric": self.outcome_metric}

    @classmethod
    def from_dict(cls, d: dict) -> "PlantedRule":
        return cls(rule_id=d["rule_id"], kind=d["kind"], effect=float(d["effect"]),
                   probability=float(d.get("probability", 0.3)),
                   ingredient=d.get("ingredient", "kiwi"),
                   outcome_metric=d.get("outcome_metric", "sleep_quality"))


@dataclass(frozen=True)
class ConfoundingStructure:
    """Exercise drives both the snack ingredient and sleep; the ingredient
    itself has zero direct effect. The classic spurious-correlation setup."""

    exercise_probability: float = 0.5
    exercise_effect: float = 8.0
    ingredient: str = "kiwi"
    p_ingredient_given_exercise: float = 0.8
    p_ingredient_given_rest: float = 0.2

    def to_dict(self) -> dict:
        return {
            "exercise_probability": self.exercise_probability,
            "exercise_effect": self.exercise_effect,
            "ingredient": self.ingredient,
            "p_ingredient_given_exercise": self.p_ingredient_given_exercise,
            "p_ingredient_given_rest": self.p_ingredient_given_rest,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConfoundingStructure":
        return cls(
            exercise_probability=float(d.get("exercise_probability", 0.5)),
            exercise_effect=float(d.get("exercise_effect", 8.0)),
            ingredient=d.get("ingredient", "kiwi"),
            p_ingredient_given_exercise=float(d.get("p_ingredient_given_exercise", 0.8)),
            p_ingredient_given_rest=float(d.get("p_ingredient_given_rest", 0.2)),
        )


@dataclass(frozen=True)
class SynthSpec:
    days: int
    seed: int
    noise_sigma: float = 5.0
    baseline: float = 70.0
    user_id: str = "synth-user"
    tz_offset_min: int = 0
    rated_fraction: float = 0.0      # fraction of meals carrying a 4-5 rating
    planted: tuple[PlantedRule, ...] = ()
    confounded: ConfoundingStructure | None = None

    def __post_init__(self):
        if self.days < 1:
            raise ValueError("days must be >= 1")
        if self.noise_sigma < 0:
            raise ValueError("noise sigma must be >= 0")

    def to_dict(self) -> dict:
        return {
            "days": self.days,
            "seed": self.seed,
            "noise_sigma": self.noise_sigma,
            "baseline": self.baseline,
            "user_id": self.user_id,
            "tz_offset_min": self.tz_offset_min,
            "rated_fraction": self.rated_fraction,
            "planted": [p.to_dict() for p in self.planted],
            "confounded": self.confounded.to_dict() if self.confounded else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SynthSpec":
        return cls(
            days=int(d["days"]),
            seed=int(d["seed"]),
            noise_sigma=float(d.get("noise_sigma", 5.0)),
            baseline=float(d.get("baseline", 70.0)),
            user_id=d.get("user_id", "synth-user"),
            tz_offset_min=int(d.get("tz_offset_min", 0)),
            rated_fraction=float(d.get("rated_fraction", 0.0)),
            planted=tuple(PlantedRule.from_dict(p) for p in d.get("planted", [])),
            confounded=(ConfoundingStructure.from_dict(d["confounded"])
                        if d.get("confounded") else None),
        )


def load_spec(path: str | Path) -> SynthSpec:
    return SynthSpec.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def _nutrition_for(kcal: float, sugar_g: float) -> NutritionFacts:
    # rough macro split consistent with the kcal sanity bound
    carb = kcal * 0.5 / 4.0
    protein = kcal * 0.25 / 4.0
    fat = kcal * 0.25 / 9.0
    return NutritionFacts(
        kcal=kcal, carb_g=carb, protein_g=protein, fat_g=fat,
        fiber_g=4.0, sugar_g=sugar_g,
        micronutrients={"magnesium": Micronutrient(40.0, "mg")},
    )


def _region_for(channels: tuple[float, ...]) -> TasteRegion:
    vec = TasteVector(*channels)
    return TasteRegion.from_point(vec)


def generate(spec: SynthSpec) -> tuple[Chronicle, dict]:
    """Build the chronicle and its ground-truth manifest. Pure given the seed."""
    rng = np.random.default_rng(spec.seed)
    tz = spec.tz_offset_min
    events = []
    day_records = []
    treated_days: dict[str, list[int]] = {p.rule_id: [] for p in spec.planted}
    if spec.confounded is not None:
        treated_days.setdefault("confounded-ingredient", [])
        treated_days.setdefault("confounded-exercise", [])

    dish_names = sorted(_DISHES)

    def day_ms(day: int, hour: float) -> int:
        return int(EPOCH_MS + day * MS_PER_DAY + hour * MS_PER_HOUR - tz * MS_PER_MINUTE)

    for day in range(spec.days):
        applied: dict[str, float] = {}

        # decide today's triggers up front so meal construction can react
        heavy_today = False
        snack_ingredient: str | None = None
        exercise_today = False
        for rule in spec.planted:
            fired = bool(rng.random() < rule.probability)
            if rule.kind == "heavy_meal" and fired:
                heavy_today = True
                applied[rule.rule_id] = rule.effect
                treated_days[rule.rule_id].append(day)
            elif rule.kind == "ingredient" and fired:
                snack_ingredient = rule.ingredient
                applied[rule.rule_id] = rule.effect
                treated_days[rule.rule_id].append(day)
            elif rule.kind == "exercise" and fired:
                exercise_today = True
                applied[rule.rule_id] = rule.effect
                treated_days[rule.rule_id].append(day)
        if spec.confounded is not None:
            conf = spec.confounded
            exercised = bool(rng.random() < conf.exercise_probability)
            p_snack = (conf.p_ingredient_given_exercise if exercised
                       else conf.p_ingredient_given_rest)
            snacked = bool(rng.random() < p_snack)
            if exercised:
                exercise_today = True
                applied["confounded-exercise"] = conf.exercise_effect
                treated_days["confounded-exercise"].append(day)
            if snacked:
                snack_ingredient = conf.ingredient
                treated_days["confounded-ingredient"].append(day)
                # zero direct effect, on purpose

        # three meals; dinner may be replaced by the heavy late meal
        for slot, base_hour in (("breakfast", 8.0), ("lunch", 13.0), ("dinner", 19.5)):
            jitter = float(rng.uniform(-0.5, 0.5))
            hour = base_hour + jitter
            if slot == "dinner" and heavy_today:
                name, kcal, sugar, channels = _HEAVY_DISH
                hour = 21.0 + jitter * 0.5
            else:
                name = dish_names[int(rng.integers(0, len(dish_names)))]
                kcal, sugar, channels = _DISHES[name]
                kcal = float(kcal * rng.uniform(0.9, 1.1))
            t = day_ms(day, hour)
            rating = None
            if spec.rated_fraction > 0 and rng.random() < spec.rated_fraction:
                rating = int(rng.integers(4, 6))
            events.append(FoodEvent(
                event_id=f"{spec.user_id}-d{day:03d}-{slot}",
                user_id=spec.user_id,
                dish=name,
                ingredients=((name.replace(" ", "-"), 300.0),),
                total_g=300.0,
                eaten_at=t,
                logged_at=t,
                tz_offset_min=tz,
                channel=InputChannel.API,
                nutrition=_nutrition_for(kcal, sugar),
                taste=_region_for(channels),
                rating=rating,
            ))

        if snack_ingredient is not None:
            t = day_ms(day, 21.5)
            events.append(FoodEvent(
                event_id=f"{spec.user_id}-d{day:03d}-snack",
                user_id=spec.user_id,
                dish=f"{snack_ingredient} snack",
                ingredients=((snack_ingredient, 120.0),),
                total_g=120.0,
                eaten_at=t,
                logged_at=t,
                tz_offset_min=tz,
                channel=InputChannel.API,
                nutrition=_nutrition_for(90.0, 10.0),
                taste=_region_for((0.05, 0.02, 0.55, 0.0, 0.35, 0.05)),
            ))

        if exercise_today:
            t = day_ms(day, 17.0)
            events.append(LifeEvent(
                event_id=f"{spec.user_id}-d{day:03d}-exercise",
                user_id=spec.user_id,
                stream="exercise",
                start=t,
                end=t + 45 * MS_PER_MINUTE,
                tz_offset_min=tz,
                attributes={"duration": MetricValue(45.0, "min"),
                            "kcal": MetricValue(350.0, "kcal")},
            ))

        steps = float(np.clip(rng.normal(8000.0, 2000.0), 1000.0, 20000.0))
        t = day_ms(day, 22.0)
        events.append(LifeEvent(
            event_id=f"{spec.user_id}-d{day:03d}-steps",
            user_id=spec.user_id,
            stream="steps",
            start=t,
            end=t,
            tz_offset_min=tz,
            attributes={"count": MetricValue(round(steps), "count")},
        ))

        noise = float(rng.normal(0.0, spec.noise_sigma)) if spec.noise_sigma > 0 else 0.0
        outcome = float(np.clip(spec.baseline + noise + sum(applied.values()), 0.0, 100.0))
        sleep_start = day_ms(day, 23.0 + float(rng.uniform(-0.25, 0.25)))
        sleep_id = f"{spec.user_id}-d{day:03d}-sleep"
        events.append(LifeEvent(
            event_id=sleep_id,
            user_id=spec.user_id,
            stream="sleep",
            start=sleep_start,
            end=sleep_start + int(7.5 * MS_PER_HOUR),
            tz_offset_min=tz,
            attributes={
                "sleep_quality": MetricValue(outcome, "score"),
                "sleep_latency": MetricValue(float(np.clip(20.0 - noise, 1.0, 90.0)), "min"),
            },
        ))
        day_records.append({
            "day": day,
            "sleep_event_id": sleep_id,
            "baseline": spec.baseline,
            "noise": noise,
            "applied": dict(sorted(applied.items())),
            "outcome": outcome,
            "counterfactual_untreated": outcome - sum(applied.values()),
        })

    chronicle = Chronicle.build(spec.user_id, events)
    manifest = {
        "spec": spec.to_dict(),
        "planted": (
            [p.to_dict() for p in spec.planted]
            + ([{"rule_id": "confounded-exercise", "kind": "exercise",
                 "effect": spec.confounded.exercise_effect},
                {"rule_id": "confounded-ingredient", "kind": "ingredient",
                 "effect": 0.0, "ingredient": spec.confounded.ingredient}]
               if spec.confounded else [])
        ),
        "treated_days": {k: v for k, v in sorted(treated_days.items())},
        "days": day_records,
    }
    return chronicle, manifest


def true_effect(manifest: dict, rule_id: str) -> float:
    """Average treatment effect of one planted rule, straight from the manifest."""
    deltas = [
        rec["applied"][rule_id]
        for rec in manifest["days"]
        if rule_id in rec["applied"]
    ]
    if not deltas:
        return 0.0
    return float(np.mean(deltas))
