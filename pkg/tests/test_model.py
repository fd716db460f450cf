import json

import numpy as np
import pytest

from pfm.chronicle import Chronicle, FoodEvent
from pfm.config import EngineConfig, resolve_data_file
from pfm.enrichment import Micronutrient, NutritionFacts
from pfm.errors import InsufficientData, NoProfile, SchemaError
from pfm.mining.verify import ContextResult, Hypothesis, VerifiedRule
from pfm.model import (
    KnowledgeRule,
    PersonalFoodModel,
    PersonalizedRule,
    StaticConstraint,
    build_model,
    daily_average_kcal,
    personalize,
    predict_liking,
    predict_outcome,
    seed_rulebase,
    usual_bedtime_hour,
)
from pfm.synth import PlantedRule, SynthSpec, generate
from pfm.taste import TasteRegion, TasteVector

from helpers import BASE_MS

CONFIG = EngineConfig()
RULES_PATH = resolve_data_file("config/knowledge_rules.json")


def test_seed_rulebase_ships_at_least_eight_rules():
    rules = seed_rulebase(RULES_PATH)
    assert len(rules) >= 8
    ids = {r.rule_id for r in rules}
    # the relationships the shipped rule base must cover
    assert "heavy-meal-before-bed" in ids
    assert "kiwi-before-bed" in ids
    assert "cherries-improve-sleep" in ids
    assert "capsaicin-evening" in ids
    assert "sugar-evening" in ids
    assert "fasting-shifts-bedtime" in ids
    assert "exercise-improves-sleep" in ids
    assert any(("magnesium" in i or "b12" in i) for i in ids)
    for rule in rules:
        hypothesis = rule.instantiate()
        assert isinstance(hypothesis, Hypothesis)


def test_seed_rulebase_empty_list():
    import tempfile
    with tempfile.NamedTemporaryFile("w", suffix=".json", delete=False) as fh:
        json.dump({"rules": []}, fh)
    assert seed_rulebase(fh.name) == []


def test_seed_rulebase_unknown_metric_names_rule(tmp_path):
    bad = {
        "rules": [{
            "rule_id": "bogus-metric",
            "description": "",
            "prior_direction": "increase",
            "prior_strength": "weak",
            "params": {},
            "template": {
                "input": {"steps": [{"stream": "food", "where": []}],
                          "max_gap_minutes": []},
                "outcome": {"stream": "sleep", "metric": "not_a_metric",
                            "within_hours": 12},
                "confounders": [],
            },
        }]
    }
    path = tmp_path / "rules.json"
    path.write_text(json.dumps(bad))
    with pytest.raises(SchemaError) as exc:
        seed_rulebase(path)
    assert "bogus-metric" in str(exc.value)


def test_seed_rulebase_bad_direction(tmp_path):
    bad = {"rules": [{
        "rule_id": "r", "description": "", "prior_direction": "sideways",
        "prior_strength": "weak", "params": {},
        "template": {"input": {"steps": [{"stream": "food", "where": []}],
                               "max_gap_minutes": []},
                     "outcome": {"stream": "sleep", "metric": "sleep_quality"},
                     "confounders": []},
    }]}
    path = tmp_path / "rules.json"
    path.write_text(json.dumps(bad))
    with pytest.raises(SchemaError):
        seed_rulebase(path)


# -- personalize -------------------------------------------------------------

def planted_chronicle(days=60, seed=3):
    spec = SynthSpec(days=days, seed=seed, noise_sigma=5.0, rated_fraction=0.3,
                     planted=(PlantedRule("heavy", "heavy_meal", -10.0, 0.3),))
    return generate(spec)[0]


def test_personalize_keeps_unobserved_rules_as_prior_only():
    chronicle = planted_chronicle()
    rules = seed_rulebase(RULES_PATH)
    biological = personalize(rules, chronicle, CONFIG)
    assert len(biological) == len(rules)       # nothing deleted, only annotated
    by_id = {e.rule.rule_id: e for e in biological}
    kiwi = by_id["kiwi-before-bed"]            # no kiwi events in this chronicle
    assert kiwi.status == "prior_only"
    assert kiwi.result is None
    assert kiwi.note


def test_personalize_verifies_planted_heavy_meal_with_matching_direction():
    chronicle = planted_chronicle()
    rules = seed_rulebase(RULES_PATH)
    biological = personalize(rules, chronicle, CONFIG)
    heavy = next(e for e in biological if e.rule.rule_id == "heavy-meal-before-bed")
    assert heavy.status == "verified"
    assert heavy.result.overall_direction == "decrease"   # matches the plant


def test_personalize_insufficient_data():
    spec = SynthSpec(days=10, seed=3, noise_sigma=5.0)
    chronicle, _ = generate(spec)
    with pytest.raises(InsufficientData):
        personalize(seed_rulebase(RULES_PATH), chronicle, CONFIG)


def test_user_slot_values_from_chronicle():
    chronicle = planted_chronicle()
    bedtime = usual_bedtime_hour(chronicle, 23.0)
    assert 22.0 < bedtime < 24.0
    avg = daily_average_kcal(chronicle)
    assert 1200 < avg < 2600


# -- model assembly and prediction ---------------------------------------------

def region_at(value: float) -> TasteRegion:
    return TasteRegion.from_point(TasteVector(*([value] * 6)))


def verified_entry(rule_id, metric, effect, validity, pattern_where=(),
                   direction=None):
    """Hand-built verified rule with one context group (empty signature)."""
    from pfm.mining.patterns import Condition, EventPattern, StepPredicate
    from pfm.mining.verify import OutcomeSelector
    hypothesis = Hypothesis(
        input_pattern=EventPattern(steps=(StepPredicate(
            stream="food", where=tuple(pattern_where)),)),
        outcome=OutcomeSelector(stream="sleep", metric=metric),
        name=rule_id,
    )
    rule = KnowledgeRule(
        rule_id=rule_id, description="", template=hypothesis.to_dict(),
        params={}, prior_direction=direction or ("decrease" if effect < 0 else "increase"),
        prior_strength="moderate",
    )
    result = VerifiedRule(
        hypothesis=hypothesis,
        contexts=(ContextResult(signature=(), effect=effect, p_value=0.01,
                                adjusted_p=0.01, n_treated=10, n_control=10,
                                validity=validity, low_power=False),),
        overall_direction="decrease" if effect < 0 else "increase",
        overall_effect=effect, overall_p=0.01,
        n_treated_total=10, n_control_total=10, dropped_units=0,
        bin_edges={}, alpha=0.05, seed=1,
    )
    return PersonalizedRule(rule=rule, hypothesis=hypothesis,
                            status="verified", result=result)


def model_with(entries, profile_region=None, constraints=()):
    from pfm.taste import PreferenceProfile
    preferential = None
    if profile_region is not None:
        preferential = PreferenceProfile(
            user_id="u1", preferred_regions=((profile_region, 1.0),),
            built_from=5, min_rating_threshold=4)
    return PersonalFoodModel(
        user_id="u1", biological=tuple(entries), preferential=preferential,
        static_constraints=tuple(constraints), built_at=0, span_days=60.0)


def hypothetical(dish="thing", kcal=500.0, ingredients=()):
    return FoodEvent(
        event_id="hyp", user_id="u1", dish=dish,
        eaten_at=BASE_MS, logged_at=BASE_MS,
        ingredients=tuple((i, 0.0) for i in ingredients),
        nutrition=NutritionFacts(kcal=kcal),
    )


def test_predict_outcome_no_matching_rules_empty():
    from pfm.mining.patterns import Condition
    entry = verified_entry("needs-big-kcal", "sleep_quality", -10.0, 1.0,
                           pattern_where=(Condition("kcal", ">", 2000.0),))
    model = model_with([entry])
    assert predict_outcome(model, hypothetical(kcal=100.0), {}, CONFIG) == []


def test_predict_outcome_single_rule_additivity():
    entry = verified_entry("always", "sleep_quality", -10.0, 1.0)
    model = model_with([entry])
    predictions = predict_outcome(model, hypothetical(), {}, CONFIG)
    assert len(predictions) == 1
    pred = predictions[0]
    assert pred.delta == pytest.approx(-10.0)
    assert pred.confidence == pytest.approx(1.0)
    assert pred.contributing == (("always", pytest.approx(-10.0)),)


def test_predict_outcome_delta_equals_sum_of_parts_exactly():
    entries = [
        verified_entry("a", "sleep_quality", -8.0, 0.9),
        verified_entry("b", "sleep_quality", 3.0, 0.5),
        verified_entry("c", "sleep_latency", 12.0, 0.8),
    ]
    model = model_with(entries)
    for pred in predict_outcome(model, hypothetical(), {}, CONFIG):
        assert pred.delta == sum(d for _, d in pred.contributing)


def test_predict_outcome_cap_rescales_contributions():
    entries = [verified_entry(f"r{i}", "sleep_quality", -15.0, 1.0) for i in range(3)]
    model = model_with(entries)
    pred = predict_outcome(model, hypothetical(), {}, CONFIG)[0]
    cap = CONFIG.cap_for("sleep_quality")
    assert abs(pred.delta) == pytest.approx(cap)
    assert pred.delta == pytest.approx(sum(d for _, d in pred.contributing))


def test_predict_outcome_prior_only_contribution():
    rule = KnowledgeRule(
        rule_id="prior", description="",
        template={"input": {"steps": [{"stream": "food", "where": []}],
                            "max_gap_minutes": []},
                  "outcome": {"stream": "sleep", "metric": "sleep_quality",
                              "within_hours": 12},
                  "confounders": []},
        params={}, prior_direction="decrease", prior_strength="weak")
    entry = PersonalizedRule(rule=rule, hypothesis=rule.instantiate(),
                             status="prior_only", note="never occurred")
    model = model_with([entry])
    pred = predict_outcome(model, hypothetical(), {}, CONFIG)[0]
    assert pred.delta == pytest.approx(-CONFIG.prior_fraction * CONFIG.min_effect)
    assert pred.confidence == 0.0


def test_predict_outcome_matches_bruteforce_rule_application():
    rng = np.random.default_rng(37)
    from pfm.mining.patterns import Condition
    for _ in range(30):
        entries = []
        for i in range(int(rng.integers(1, 6))):
            metric = str(rng.choice(["sleep_quality", "sleep_latency"]))
            effect = float(rng.uniform(-12, 12))
            validity = float(rng.uniform(0, 1))
            threshold = float(rng.uniform(100, 900))
            entries.append(verified_entry(
                f"r{i}", metric, effect, validity,
                pattern_where=(Condition("kcal", ">", threshold),)))
        model = model_with(entries)
        event = hypothetical(kcal=float(rng.uniform(0, 1200)))
        got = {p.metric: p.delta for p in predict_outcome(model, event, {}, CONFIG)}

        # oracle: apply each rule by hand
        expected: dict[str, float] = {}
        for e in entries:
            threshold = e.hypothesis.input_pattern.steps[0].where[0].value
            if event.nutrition.kcal > threshold:
                ctx = e.result.contexts[0]
                expected[e.hypothesis.outcome.metric] = (
                    expected.get(e.hypothesis.outcome.metric, 0.0)
                    + ctx.validity * ctx.effect)
        for metric, delta in expected.items():
            cap = CONFIG.cap_for(metric)
            if abs(delta) > cap:
                expected[metric] = cap if delta > 0 else -cap
        assert set(got) == set(expected)
        for metric in got:
            assert got[metric] == pytest.approx(expected[metric])


def test_predict_outcome_context_group_matching():
    from pfm.mining.verify import ConfounderSelector, OutcomeSelector
    from pfm.mining.patterns import EventPattern, StepPredicate
    hypothesis = Hypothesis(
        input_pattern=EventPattern(steps=(StepPredicate(stream="food"),)),
        outcome=OutcomeSelector(metric="sleep_quality"),
        confounders=(ConfounderSelector("weekpart", "categorical", "weekday_weekend"),),
        name="ctx-rule",
    )
    rule = KnowledgeRule(rule_id="ctx-rule", description="",
                         template=hypothesis.to_dict(), params={},
                         prior_direction="decrease", prior_strength="weak")
    result = VerifiedRule(
        hypothesis=hypothesis,
        contexts=(
            ContextResult(signature=(("weekpart", "weekday"),), effect=-8.0,
                          p_value=0.01, adjusted_p=0.02, n_treated=10,
                          n_control=10, validity=1.0, low_power=False),
            ContextResult(signature=(("weekpart", "weekend"),), effect=4.0,
                          p_value=0.2, adjusted_p=0.2, n_treated=6,
                          n_control=6, validity=0.5, low_power=False),
        ),
        overall_direction="decrease", overall_effect=-4.0, overall_p=0.02,
        n_treated_total=16, n_control_total=16, dropped_units=0,
        bin_edges={}, alpha=0.05, seed=1)
    entry = PersonalizedRule(rule=rule, hypothesis=hypothesis,
                             status="verified", result=result)
    model = model_with([entry])
    weekday = predict_outcome(model, hypothetical(), {"weekpart": "weekday"}, CONFIG)
    weekend = predict_outcome(model, hypothetical(), {"weekpart": "weekend"}, CONFIG)
    nomatch = predict_outcome(model, hypothetical(), {"weekpart": "holiday"}, CONFIG)
    assert weekday[0].delta == pytest.approx(-8.0)
    assert weekend[0].delta == pytest.approx(4.0 * 0.5)
    assert nomatch == []


def test_predict_liking_delegates_and_requires_profile():
    region = region_at(0.5)
    model = model_with([], profile_region=region)
    assert predict_liking(model, region) == pytest.approx(1.0)
    bare = model_with([])
    with pytest.raises(NoProfile):
        predict_liking(bare, region)


def test_hard_constraints_always_flag():
    model = model_with([], constraints=[StaticConstraint("peanut", "hard"),
                                        StaticConstraint("milk", "soft")])
    assert model.hard_blocked(("peanut", "rice")) == ["peanut"]
    assert model.hard_blocked(("milk",)) == []       # soft never blocks
    assert model.hard_blocked(("rice",)) == []


def test_model_serialization_round_trip():
    chronicle = planted_chronicle(days=45, seed=8)
    rules = seed_rulebase(RULES_PATH)
    model = build_model(chronicle, CONFIG, rules,
                        constraints=(StaticConstraint("peanut", "hard", "allergy"),),
                        built_at=123)
    payload = model.to_dict()
    restored = PersonalFoodModel.from_dict(payload)
    assert restored.to_dict() == payload
    assert restored.summary() == model.summary()
