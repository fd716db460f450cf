"""Operations shared by the CLI and the HTTP service.

Both front doors call these functions and serialize the returned dicts with
the canonical encoder, which is what makes their outputs byte-identical for
the same store state and seed.
"""

from __future__ import annotations

import os
from dataclasses import replace
from pathlib import Path

from .chronicle import Chronicle, FoodEvent, Provenance, ProvenanceKind
from .config import EngineConfig, resolve_data_file
from .enrichment import (
    ClientRegistry,
    EnrichmentCache,
    FixtureNutritionClient,
    NutritionFacts,
    enrich,
    normalize_dish_name,
)
from .errors import UnresolvedFood, UnknownIngredient
from .mining import CategorySpec, Hypothesis, cooccurrence_matrix, verify
from .model import StaticConstraint, build_model, seed_rulebase
from .recommend import DishCandidate, RecommendationRequest, recommend
from .store import UserStore
from .taste import (
    TasteRegion,
    dish_region,
    item_regions_from_samples,
    load_recipes,
    load_taste_samples,
)


def parse_category_spec(text: str) -> CategorySpec:
    """``food:dish``, ``food:ingredient``, ``sleep:sleep_quality`` (binned
    metric), or a bare stream name for presence counting."""
    if ":" in text and not text.startswith("custom:"):
        stream, by = text.split(":", 1)
        return CategorySpec(stream=stream, by=by)
    return CategorySpec(stream=text, by="presence")


def heatmap_payload(chronicle: Chronicle, axis_a: str, axis_b: str,
                    window_minutes: float) -> dict:
    spec_a = parse_category_spec(axis_a)
    spec_b = parse_category_spec(axis_b)
    return cooccurrence_matrix(spec_a, spec_b, window_minutes, chronicle).to_dict()


def heatmap_csv(chronicle: Chronicle, axis_a: str, axis_b: str,
                window_minutes: float) -> str:
    spec_a = parse_category_spec(axis_a)
    spec_b = parse_category_spec(axis_b)
    return cooccurrence_matrix(spec_a, spec_b, window_minutes, chronicle).to_csv()


def verify_payload(chronicle: Chronicle, hypothesis_dict: dict,
                   config: EngineConfig, alpha: float | None = None,
                   n_permutations: int | None = None) -> dict:
    hypothesis = Hypothesis.from_dict(hypothesis_dict)
    rule = verify(
        hypothesis, chronicle,
        alpha=config.alpha if alpha is None else alpha,
        n_permutations=(config.n_permutations if n_permutations is None
                        else n_permutations),
        seed=config.seed,
        bootstrap_resamples=config.bootstrap_resamples,
        min_effect=config.min_effect,
        bins_k=config.bins_k,
        min_group_units=config.min_group_units,
    )
    return rule.to_dict()


# ---------------------------------------------------------------------------
# fixture-backed resolution
# ---------------------------------------------------------------------------

def fixture_registry(data_dir: str | Path | None, config: EngineConfig,
                     with_cache: bool = True) -> ClientRegistry:
    """Client stack: fixtures first; a live adapter only when a key is set.

    ``PFM_NUTRITION_API_KEY`` opts into the live client; its absence selects
    offline mode, so tests and CI never touch the network.
    """
    nutrition_path = resolve_data_file("fixtures/nutrition.jsonl", data_dir)
    barcodes_path = resolve_data_file("fixtures/barcodes.jsonl", data_dir)
    clients: list = [FixtureNutritionClient(nutrition_path, barcodes_path)]
    api_key = os.environ.get("PFM_NUTRITION_API_KEY")
    if api_key:
        from .enrichment import HttpNutritionClient, urllib_transport
        clients.append(HttpNutritionClient(api_key, urllib_transport))
    cache = None
    if with_cache and data_dir is not None:
        cache = EnrichmentCache(Path(data_dir) / "cache" / "enrichment",
                                ttl_days=config.cache_ttl_days)
    return ClientRegistry(clients, cache=cache)


class FixtureCatalog:
    """Taste regions, recipes and nutrition for known items, from fixtures."""

    def __init__(self, data_dir: str | Path | None, config: EngineConfig):
        samples = load_taste_samples(resolve_data_file("fixtures/taste_samples.jsonl", data_dir))
        self.item_regions = item_regions_from_samples(samples)
        self.recipes = load_recipes(resolve_data_file("fixtures/recipes.jsonl", data_dir))
        self.nutrition = FixtureNutritionClient(
            resolve_data_file("fixtures/nutrition.jsonl", data_dir),
            resolve_data_file("fixtures/barcodes.jsonl", data_dir),
        )
        self.config = config

    def region_for(self, dish_id: str) -> TasteRegion | None:
        if dish_id in self.recipes:
            try:
                return dish_region(self.recipes[dish_id], self.item_regions)
            except UnknownIngredient:
                return None
        return self.item_regions.get(dish_id)

    def nutrition_for(self, dish_id: str, portion_g: float = 100.0) -> NutritionFacts | None:
        if dish_id in self.recipes:
            total: NutritionFacts | None = None
            acc: dict[str, float] = {}
            micro: dict = {}
            for item_id, proportion in self.recipes[dish_id]:
                facts = self.nutrition.item_facts(item_id)
                if facts is None:
                    return None
                scaled = facts.scale(proportion)
                for key in ("kcal", "carb_g", "protein_g", "fat_g", "fiber_g",
                            "sugar_g", "caffeine_mg"):
                    acc[key] = acc.get(key, 0.0) + getattr(scaled, key)
                acc["capsaicin_scoville"] = max(acc.get("capsaicin_scoville", 0.0),
                                                facts.capsaicin_scoville)
                for name, m in scaled.micronutrients.items():
                    if name in micro:
                        micro[name] = replace(micro[name], amount=micro[name].amount + m.amount)
                    else:
                        micro[name] = m
            total = NutritionFacts(micronutrients=micro, **acc)
            return total.scale(portion_g / 100.0)
        facts = self.nutrition.item_facts(dish_id)
        return facts.scale(portion_g / 100.0) if facts is not None else None

    def ingredients_for(self, dish_id: str) -> tuple[str, ...]:
        if dish_id in self.recipes:
            return tuple(item for item, _ in self.recipes[dish_id])
        return (dish_id,)

    def resolve_candidate(self, entry: dict) -> DishCandidate:
        """Fill region/nutrition/ingredients for a request candidate.

        Entries may carry full data already; anything missing is resolved
        from the fixture catalog by dish id.
        """
        dish_id = entry["dish_id"]
        portion = float(entry.get("portion_g", 100.0))
        if "region" in entry:
            region = TasteRegion.from_dict(entry["region"])
        else:
            region = self.region_for(dish_id)
            if region is None:
                raise UnresolvedFood(f"no taste region for {dish_id!r}")
        if "nutrition" in entry:
            nutrition = NutritionFacts.from_dict(entry["nutrition"])
        else:
            nutrition = self.nutrition_for(dish_id, portion)
            if nutrition is None:
                raise UnresolvedFood(f"no nutrition for {dish_id!r}")
        ingredients = tuple(entry.get("ingredients", self.ingredients_for(dish_id)))
        return DishCandidate(dish_id=dish_id, region=region,
                             nutrition=nutrition, ingredients=ingredients)


def enrich_chronicle(chronicle: Chronicle, registry: ClientRegistry,
                     catalog: FixtureCatalog | None = None) -> tuple[Chronicle, dict]:
    """Attach nutrition (and, when resolvable, a taste region) to food events.

    Pure with respect to the input; returns the new chronicle plus a report.
    Unresolved events are kept untouched and listed, never dropped.
    """
    events = []
    report = {"enriched": 0, "already": 0, "unresolved": []}
    for event in chronicle.events:
        if not isinstance(event, FoodEvent):
            events.append(event)
            continue
        updated = event
        if event.nutrition is None:
            try:
                record = enrich(event, registry, fetched_at=event.logged_at)
                updated = updated.with_enrichment(record.nutrition, record.client)
                report["enriched"] += 1
            except UnresolvedFood:
                report["unresolved"].append(event.event_id)
        else:
            report["already"] += 1
        if updated.taste is None and catalog is not None:
            keys = []
            if updated.dish:
                keys.append(normalize_dish_name(updated.dish).replace(" ", "-"))
            if len(updated.ingredients) == 1:
                keys.append(updated.ingredients[0][0])
            region = next((r for r in (catalog.region_for(k) for k in keys) if r), None)
            if region is not None:
                prov = dict(updated.provenance)
                prov["taste"] = Provenance(ProvenanceKind.DERIVED, "taste-fixtures")
                updated = replace(updated, taste=region, provenance=prov)
        events.append(updated)
    return Chronicle.build(chronicle.user_id, events), report


def enrich_user(store: UserStore, user_id: str, data_dir: str | Path | None,
                config: EngineConfig) -> dict:
    registry = fixture_registry(data_dir, config)
    catalog = FixtureCatalog(data_dir, config)
    with store.lock_for(user_id):
        chronicle = store.load_chronicle(user_id)
        enriched, report = enrich_chronicle(chronicle, registry, catalog)
        store.write_chronicle(user_id, enriched)
    return report


def build_model_payload(store: UserStore, user_id: str,
                        data_dir: str | Path | None, config: EngineConfig,
                        constraints: tuple[StaticConstraint, ...] | None = None) -> dict:
    """Personalize the rule base, snapshot the model, return its summary.

    built_at is pinned to the last event timestamp so rebuilding the same
    store yields a byte-identical snapshot. Constraints default to the user's
    declared allergy file in the store.
    """
    chronicle = store.load_chronicle(user_id)
    if constraints is None:
        constraints = store.load_constraints(user_id)
    rulebase = seed_rulebase(resolve_data_file("config/knowledge_rules.json", data_dir))
    built_at = chronicle.events[-1].start_ms if chronicle.events else 0
    model = build_model(chronicle, config, rulebase, constraints=constraints,
                        built_at=built_at)
    store.save_model(user_id, model.to_dict())
    return model.summary()


def recommend_payload(store: UserStore, user_id: str, request_dict: dict,
                      data_dir: str | Path | None, config: EngineConfig) -> dict:
    from .model import PersonalFoodModel
    snapshot = store.load_model(user_id)
    model = PersonalFoodModel.from_dict(snapshot) if snapshot is not None else None
    catalog = FixtureCatalog(data_dir, config)
    body = dict(request_dict)
    body.setdefault("user_id", user_id)
    body["candidates"] = [
        catalog.resolve_candidate(c).to_dict() for c in body.get("candidates", [])
    ]
    request = RecommendationRequest.from_dict(body)
    return recommend(request, model, config).to_dict()
