"""Personal food model engine.

Builds a model of one person's food life from their event chronicle: a
preferential side (where their taste lives in a six-channel taste space) and
a biological side (context-conditioned rules about how food and activity
move outcomes like sleep quality), then uses both for constraint-respecting
recommendations.
"""

from .chronicle import (
    Chronicle,
    FoodEvent,
    InputChannel,
    LifeEvent,
    MetricValue,
    Provenance,
    ProvenanceKind,
    append_event,
    export_jsonl,
    import_jsonl,
    window_query,
)
from .config import EngineConfig, load_config
from .enrichment import EnrichmentRecord, NutritionFacts, enrich, lookup_barcode
from .model import (
    KnowledgeRule,
    OutcomePrediction,
    PersonalFoodModel,
    build_model,
    personalize,
    predict_liking,
    predict_outcome,
    seed_rulebase,
)
from .recommend import Recommendation, RecommendationRequest, recommend, score_candidate
from .taste import (
    PreferenceProfile,
    TasteRegion,
    TasteSample,
    TasteVector,
    dish_region,
    item_region,
    preference_profile,
    preference_score,
    substitute_search,
    taste_distance,
)

__version__ = "0.1.0"
