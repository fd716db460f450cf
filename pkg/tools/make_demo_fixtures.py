#!/usr/bin/env python3
"""Regenerate the frozen demo fixtures shipped with the package.

The demo chronicle is a 45-day synthetic log with a planted heavy-meal
effect, rated meals (for the preference profile), a subset of events left
unenriched (so the enrich step has real work), and one barcode-only event.
Run from the repo root after changing the generator; the output is committed.
"""

from dataclasses import replace
from pathlib import Path

from pfm.chronicle import Chronicle, FoodEvent, InputChannel, export_jsonl
from pfm.jsonio import canonical_bytes
from pfm.synth import PlantedRule, SynthSpec, generate

OUT = Path(__file__).resolve().parents[1] / "src" / "pfm" / "data" / "fixtures"

spec = SynthSpec(
    days=45,
    seed=20240101,
    noise_sigma=5.0,
    user_id="demo",
    rated_fraction=0.4,
    planted=(PlantedRule("heavy-dinner", "heavy_meal", -10.0, probability=0.3),),
)
chronicle, _ = generate(spec)

events = []
for ev in chronicle.events:
    # strip enrichment from the fixture-resolvable dishes; `pfm enrich` re-adds it
    if isinstance(ev, FoodEvent) and ev.dish in ("oatmeal", "pasta marinara"):
        ev = replace(ev, nutrition=None, taste=None, provenance={})
    events.append(ev)

barcode_t = events[-1].start_ms + 3_600_000
events.append(FoodEvent(
    event_id="demo-barcode-0001",
    user_id="demo",
    dish="",
    ingredients=(),
    total_g=330.0,
    eaten_at=barcode_t,
    logged_at=barcode_t,
    channel=InputChannel.BARCODE,
    barcode="0049000006346",
))

chronicle = Chronicle.build("demo", events)
(OUT / "demo_chronicle.jsonl").write_text(export_jsonl(chronicle), encoding="utf-8")

hypothesis = {
    "name": "heavy-evening-meal-vs-sleep",
    "input": {
        "steps": [{"stream": "food", "where": [
            {"attr": "kcal", "op": ">", "value": 1000},
            {"attr": "hour", "op": ">=", "value": 20.0},
        ]}],
        "max_gap_minutes": [],
    },
    "outcome": {"stream": "sleep", "metric": "sleep_quality", "within_hours": 12},
    "confounders": [
        {"name": "weekpart", "kind": "categorical", "selector": "weekday_weekend"},
    ],
}
(OUT / "demo_hypothesis.json").write_bytes(canonical_bytes(hypothesis))

request = {
    "context": {
        "timestamp": barcode_t,
        "tz_offset_min": 0,
        "place": "home",
        "confounders": {"weekpart": "weekday", "exercised": "no"},
    },
    "candidates": [
        {"dish_id": "cola", "portion_g": 330},
        {"dish_id": "diet-cola", "portion_g": 330},
        {"dish_id": "fruit-salad", "portion_g": 200},
        {"dish_id": "peanut-snack-mix", "portion_g": 80},
    ],
    "goals": [{"metric": "sleep_quality", "direction": "increase", "weight": 1.0}],
    "weights": {"w_pref": 0.5, "w_health": 0.5},
}
(OUT / "demo_request.json").write_bytes(canonical_bytes(request))

constraints = [{"item_id": "peanut", "severity": "hard", "note": "allergy"}]
(OUT / "demo_constraints.json").write_bytes(canonical_bytes(constraints))

print(f"wrote demo fixtures to {OUT} ({len(chronicle)} events)")
