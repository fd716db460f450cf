#!/usr/bin/env python3
"""Record real service responses for the frontend integration tests.

Replays the exact calls the UI tests make against a live app (demo store,
seed 777) and freezes the payloads under frontend/tests/recorded/. Rerun
after changing the engine or fixtures; outputs are committed.
"""

import json
import shutil
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from pfm.config import resolve_data_file
from pfm.service import create_app
from pfm.store import UserStore

ROOT = Path(__file__).resolve().parents[1]
OUT = ROOT / "frontend" / "tests" / "recorded"
OUT.mkdir(parents=True, exist_ok=True)

tmp = Path(tempfile.mkdtemp(prefix="pfm-record-"))
store = UserStore(tmp)
chron_path = store.chronicle_path("demo")
chron_path.parent.mkdir(parents=True)
shutil.copy(resolve_data_file("fixtures/demo_chronicle.jsonl"), chron_path)
shutil.copy(resolve_data_file("fixtures/demo_constraints.json"),
            chron_path.parent / "constraints.json")

client = TestClient(create_app(data_dir=tmp, seed=777))


def save(name: str, payload) -> None:
    (OUT / f"{name}.json").write_text(json.dumps(payload, indent=2, sort_keys=True),
                                      encoding="utf-8")


assert client.post("/v1/users/demo/enrich").status_code == 200
assert client.post("/v1/users/demo/model/build?wait=true").status_code == 200

# log screen: text meal, then barcode-only meal, then a rating
meal = {
    "type": "food",
    "event_id": "ui-0001",
    "what": {"dish": "oatmeal", "ingredients": [], "total_g": 250.0},
    "when": {"eaten_at": 1708119000000, "logged_at": 1708119000000,
             "tz_offset_min": 0},
    "where": {"place": "home"},
    "who": {"companions": 0},
    "how": "ui",
}
resp = client.post("/v1/users/demo/events?enrich=now", json=meal)
assert resp.status_code == 201, resp.content
save("log_post_meal", resp.json())

barcode_meal = {
    "type": "food",
    "event_id": "ui-0002",
    "what": {"dish": "", "ingredients": [], "total_g": 330.0},
    "when": {"eaten_at": 1708120800000, "logged_at": 1708120800000,
             "tz_offset_min": 0},
    "who": {"companions": 0},
    "how": "barcode",
    "barcode": "0049000006346",
}
resp = client.post("/v1/users/demo/events?enrich=now", json=barcode_meal)
assert resp.status_code == 201, resp.content
save("log_post_barcode", resp.json())

resp = client.post("/v1/users/demo/events/ui-0001/rating", json={"rating": 4})
assert resp.status_code == 200, resp.content
save("rating_response", resp.json())

resp = client.get("/v1/users/demo/chronicle")
assert resp.status_code == 200
save("chronicle_after_log", resp.json())

# heatmap screen
resp = client.get("/v1/users/demo/heatmap",
                  params={"a": "food:dish", "b": "sleep:sleep_quality",
                          "window": 720})
assert resp.status_code == 200
save("heatmap", resp.json())

# promoting the heavy-dinner cell to a hypothesis
promoted = {
    "name": "promoted:roast feast -> sleep_quality",
    "input": {"steps": [{"stream": "food", "where": [
        {"attr": "dish", "op": "==", "value": "roast feast"}]}],
        "max_gap_minutes": []},
    "outcome": {"stream": "sleep", "metric": "sleep_quality", "within_hours": 12},
    "confounders": [
        {"name": "weekpart", "kind": "categorical", "selector": "weekday_weekend"}],
}
resp = client.post("/v1/users/demo/hypotheses/verify", json=promoted)
assert resp.status_code == 200, resp.content
save("verify_promoted", resp.json())

# what-if screen
resp = client.get("/v1/catalog")
assert resp.status_code == 200
save("catalog", resp.json())


def whatif_request(candidates):
    return {
        "context": {"timestamp": 1708126200000, "tz_offset_min": 0,
                    "place": "home",
                    "confounders": {"weekpart": "weekday", "exercised": "no"}},
        "candidates": candidates,
        "goals": [{"metric": "sleep_quality", "direction": "increase",
                   "weight": 1.0}],
        "weights": {"w_pref": 0.5, "w_health": 0.5},
    }


request_a = whatif_request([{"dish_id": "cola", "portion_g": 330},
                            {"dish_id": "fruit-salad", "portion_g": 200}])
resp = client.post("/v1/users/demo/recommendations", json=request_a)
assert resp.status_code == 200, resp.content
save("recommend_a", resp.json())
save("recommend_a_request", request_a)

request_b = whatif_request([{"dish_id": "diet-cola", "portion_g": 330},
                            {"dish_id": "fruit-salad", "portion_g": 200}])
resp = client.post("/v1/users/demo/recommendations", json=request_b)
assert resp.status_code == 200, resp.content
save("recommend_b", resp.json())
save("recommend_b_request", request_b)

# the demo user has a hard peanut constraint: this one must come back blocked
request_blocked = whatif_request([{"dish_id": "peanut-snack-mix", "portion_g": 80},
                                  {"dish_id": "fruit-salad", "portion_g": 200}])
resp = client.post("/v1/users/demo/recommendations", json=request_blocked)
assert resp.status_code == 200, resp.content
payload = resp.json()
assert any(i["dish_id"] == "peanut-snack-mix" for i in payload["blocked"])
save("recommend_blocked", payload)

shutil.rmtree(tmp)
print(f"recorded {len(list(OUT.glob('*.json')))} payloads into {OUT}")
