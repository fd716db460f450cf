"""Rank candidate dishes by blending taste preference with predicted health.

Hard constraints come first and are absolute: an allergen candidate never
appears in the ranked list no matter how it scores. Health utility per goal
is anchored at 0.5 for "no predicted effect" so a dish the model knows
nothing about is not penalized relative to a mildly harmful one, then scaled
by the per-metric effect cap into [0, 1]. Every ranked item carries the rule
ids and deltas behind its health score.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .chronicle import FoodEvent, InputChannel
from .config import EngineConfig
from .enrichment import NutritionFacts
from .errors import NoCandidates, NoModel
from .model import OutcomePrediction, PersonalFoodModel, predict_outcome
from .taste import TasteRegion, preference_score


@dataclass(frozen=True)
class Goal:
    metric: str
    direction: str          # "increase" | "decrease"
    weight: float

    def __post_init__(self):
        if self.direction not in ("increase", "decrease"):
            raise ValueError(f"goal direction must be increase/decrease, got {self.direction!r}")
        if self.weight < 0:
            raise ValueError("goal weight must be >= 0")

    def to_dict(self) -> dict:
        return {"metric": self.metric, "direction": self.direction, "weight": self.weight}

    @classmethod
    def from_dict(cls, d: dict) -> "Goal":
        return cls(metric=d["metric"], direction=d["direction"], weight=float(d["weight"]))


@dataclass(frozen=True)
class DishCandidate:
    dish_id: str
    region: TasteRegion
    nutrition: NutritionFacts
    ingredients: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        return {
            "dish_id": self.dish_id,
            "region": self.region.to_dict(),
            "nutrition": self.nutrition.to_dict(),
            "ingredients": list(self.ingredients),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DishCandidate":
        return cls(
            dish_id=d["dish_id"],
            region=TasteRegion.from_dict(d["region"]),
            nutrition=NutritionFacts.from_dict(d["nutrition"]),
            ingredients=tuple(d.get("ingredients", [])),
        )


@dataclass(frozen=True)
class RecommendationRequest:
    user_id: str
    timestamp: int
    candidates: tuple[DishCandidate, ...]
    goals: tuple[Goal, ...]
    tz_offset_min: int = 0
    place: str | None = None
    confounders: dict[str, object] = field(default_factory=dict)
    w_pref: float = 0.5
    w_health: float = 0.5

    def __post_init__(self):
        if abs(self.w_pref + self.w_health - 1.0) > 1e-9:
            raise ValueError("w_pref + w_health must equal 1")
        if self.w_pref < 0 or self.w_health < 0:
            raise ValueError("weights must be >= 0")
        if self.goals and sum(g.weight for g in self.goals) <= 0:
            raise ValueError("goal weights must sum to > 0")

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "context": {
                "timestamp": self.timestamp,
                "tz_offset_min": self.tz_offset_min,
                "place": self.place,
                "confounders": dict(self.confounders),
            },
            "candidates": [c.to_dict() for c in self.candidates],
            "goals": [g.to_dict() for g in self.goals],
            "weights": {"w_pref": self.w_pref, "w_health": self.w_health},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RecommendationRequest":
        context = d.get("context", {})
        weights = d.get("weights", {})
        return cls(
            user_id=d["user_id"],
            timestamp=int(context.get("timestamp", 0)),
            tz_offset_min=int(context.get("tz_offset_min", 0)),
            place=context.get("place"),
            confounders=dict(context.get("confounders", {})),
            candidates=tuple(DishCandidate.from_dict(c) for c in d.get("candidates", [])),
            goals=tuple(Goal.from_dict(g) for g in d.get("goals", [])),
            w_pref=float(weights.get("w_pref", 0.5)),
            w_health=float(weights.get("w_health", 0.5)),
        )


@dataclass(frozen=True)
class ScoredItem:
    dish_id: str
    total: float
    preference: float
    health: float
    blocked: bool
    blocked_by: tuple[str, ...] = ()
    predictions: tuple[OutcomePrediction, ...] = ()

    def to_dict(self) -> dict:
        return {
            "dish_id": self.dish_id,
            "total": self.total,
            "preference": self.preference,
            "health": self.health,
            "blocked": self.blocked,
            "blocked_by": list(self.blocked_by),
            "explanation": [p.to_dict() for p in self.predictions],
        }


@dataclass(frozen=True)
class Recommendation:
    ranked: tuple[ScoredItem, ...]
    blocked: tuple[ScoredItem, ...]

    def to_dict(self) -> dict:
        return {
            "ranked": [i.to_dict() for i in self.ranked],
            "blocked": [i.to_dict() for i in self.blocked],
        }


def _hypothetical_event(dish: DishCandidate, request: RecommendationRequest) -> FoodEvent:
    return FoodEvent(
        event_id=f"hypothetical:{dish.dish_id}",
        user_id=request.user_id,
        dish=dish.dish_id,
        ingredients=tuple((i, 0.0) for i in dish.ingredients),
        total_g=0.0,
        eaten_at=request.timestamp,
        logged_at=request.timestamp,
        tz_offset_min=request.tz_offset_min,
        channel=InputChannel.API,
        nutrition=dish.nutrition,
        taste=dish.region,
        place=request.place,
    )


def score_candidate(model: PersonalFoodModel, dish: DishCandidate,
                    request: RecommendationRequest,
                    config: EngineConfig) -> ScoredItem:
    """Score one dish in the request context; never filters, only annotates."""
    blocked_by = tuple(model.hard_blocked(set(dish.ingredients) | {dish.dish_id}))
    event = _hypothetical_event(dish, request)
    predictions = predict_outcome(model, event, dict(request.confounders), config)
    by_metric = {p.metric: p for p in predictions}

    if request.goals:
        goal_total = sum(g.weight for g in request.goals)
        health = 0.0
        for goal in request.goals:
            delta = by_metric[goal.metric].delta if goal.metric in by_metric else 0.0
            aligned = delta if goal.direction == "increase" else -delta
            utility = 0.5 + 0.5 * aligned / config.cap_for(goal.metric)
            health += (goal.weight / goal_total) * min(1.0, max(0.0, utility))
    else:
        health = 0.5   # no goals: every dish is health-neutral

    if model.preferential is not None:
        preference = preference_score(model.preferential, dish.region,
                                      epsilon=config.region_epsilon)
    else:
        preference = 0.0

    total = request.w_pref * preference + request.w_health * health
    return ScoredItem(
        dish_id=dish.dish_id,
        total=total,
        preference=preference,
        health=health,
        blocked=bool(blocked_by),
        blocked_by=blocked_by,
        predictions=tuple(predictions),
    )


def recommend(request: RecommendationRequest, model: PersonalFoodModel | None,
              config: EngineConfig) -> Recommendation:
    """Filter hard-blocked candidates, score and rank the rest.

    Descending by total score with a deterministic dish-id tie-break, so the
    same request against the same model is byte-identical every time.
    """
    if model is None:
        raise NoModel(f"no model for user {request.user_id}")
    if not request.candidates:
        raise NoCandidates("request has no candidates")
    scored = [score_candidate(model, dish, request, config)
              for dish in request.candidates]
    ranked = sorted((s for s in scored if not s.blocked),
                    key=lambda s: (-s.total, s.dish_id))
    blocked = sorted((s for s in scored if s.blocked), key=lambda s: s.dish_id)
    return Recommendation(ranked=tuple(ranked), blocked=tuple(blocked))
