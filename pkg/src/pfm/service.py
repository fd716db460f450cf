"""HTTP JSON API over per-user chronicles.

One process, file-backed state, deterministic responses given store state and
seed. Writes to a user are serialized; reads never block and never mutate.
Model builds run as background jobs by default (poll GET /model); pass
``?wait=true`` to build inline. All payloads are canonical JSON so they are
byte-identical to the CLI's output for the same operation.

Endpoints are documented in docs/api.md.
"""

from __future__ import annotations

import os
import threading
from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse
from fastapi.staticfiles import StaticFiles

from .chronicle import FoodEvent, record_to_event
from .config import EngineConfig, load_config
from .errors import (
    InsufficientData,
    InvalidEvent,
    NoCandidates,
    NoControls,
    NoModel,
    NoOccurrences,
    NoProfile,
    ParseError,
    PfmError,
    SchemaError,
    SchemaVersionMismatch,
    UnresolvedFood,
)
from .jsonio import canonical_bytes
from .ops import (
    FixtureCatalog,
    build_model_payload,
    enrich_chronicle,
    enrich_user,
    fixture_registry,
    heatmap_payload,
    recommend_payload,
    verify_payload,
)
from .store import ConflictingDuplicate, UserStore

_STATUS_BY_CODE = {
    "invalid_event": 400,
    "parse_error": 400,
    "schema_error": 400,
    "schema_version_mismatch": 400,
    "invalid_range": 400,
    "malformed_barcode": 400,
    "bad_proportions": 400,
    "not_found": 404,
    "no_model": 404,
    "conflicting_duplicate": 409,
    "no_occurrences": 422,
    "no_controls": 422,
    "insufficient_data": 422,
    "unresolved_food": 422,
    "no_candidates": 422,
    "no_rated_events": 422,
    "no_profile": 422,
    "unknown_ingredient": 422,
    "missing_confounder_value": 422,
}


def _json(payload, status_code: int = 200) -> Response:
    return Response(content=canonical_bytes(payload), status_code=status_code,
                    media_type="application/json")


def _error(exc: PfmError) -> Response:
    status = _STATUS_BY_CODE.get(exc.code, 422)
    return _json({"code": exc.code, "message": str(exc)}, status_code=status)


def create_app(data_dir: str | Path = ".", config_path: str | Path | None = None,
               seed: int | None = None, token: str | None = None,
               ui_dist: str | Path | None = None) -> FastAPI:
    data_dir = Path(data_dir)
    config = load_config(path=config_path, data_dir=data_dir, seed=seed)
    store = UserStore(data_dir)
    token = token if token is not None else os.environ.get("PFM_TOKEN")
    app = FastAPI(title="pfm", version="0.1.0", docs_url=None, redoc_url=None)
    app.state.store = store
    app.state.config = config
    app.state.data_dir = data_dir
    jobs: dict[str, dict] = {}
    jobs_lock = threading.Lock()

    @app.middleware("http")
    async def _auth(request: Request, call_next):
        if token and request.url.path.startswith("/v1/"):
            header = request.headers.get("authorization", "")
            if header != f"Bearer {token}":
                return _json({"code": "unauthorized", "message": "bad or missing token"}, 401)
        return await call_next(request)

    # -- events ----------------------------------------------------------

    @app.post("/v1/users/{user_id}/events")
    async def post_event(user_id: str, request: Request, enrich: str = "no"):
        body = await request.json()
        body.setdefault("user_id", user_id)
        body.setdefault("schema_version", 1)
        try:
            event = record_to_event(body)
        except SchemaVersionMismatch as exc:
            return _error(exc)
        except (ValueError, KeyError, TypeError) as exc:
            return _json({"code": "invalid_event", "message": str(exc)}, 400)
        problems = event.violations()
        if problems:
            return _error(InvalidEvent(problems))
        if event.user_id != user_id:
            return _json({"code": "invalid_event",
                          "message": "user_id does not match path"}, 400)

        enrichment_state = "skipped"
        if enrich == "now" and isinstance(event, FoodEvent) and event.nutrition is None:
            registry = fixture_registry(data_dir, config)
            catalog = FixtureCatalog(data_dir, config)
            from .chronicle import Chronicle
            enriched, report = enrich_chronicle(
                Chronicle(user_id=user_id, events=(event,)), registry, catalog)
            event = enriched.events[0]
            enrichment_state = "applied" if report["enriched"] else "unresolved"

        with store.lock_for(user_id):
            try:
                status = store.append(user_id, event)
            except ConflictingDuplicate as exc:
                return _error(exc)
            except PfmError as exc:
                return _error(exc)
        from .chronicle import event_to_record
        return _json(
            {"status": status, "event": event_to_record(event),
             "enrichment": enrichment_state},
            status_code=201 if status == "created" else 200,
        )

    @app.post("/v1/users/{user_id}/events/{event_id}/rating")
    async def post_rating(user_id: str, event_id: str, request: Request):
        body = await request.json()
        rating = body.get("rating")
        if not isinstance(rating, int) or not (1 <= rating <= 5):
            return _json({"code": "invalid_event",
                          "message": "rating must be an integer in [1, 5]"}, 400)
        from .chronicle import event_to_record
        with store.lock_for(user_id):
            chronicle = store.load_chronicle(user_id)
            event = next((e for e in chronicle.events if e.event_id == event_id), None)
            if event is None or not isinstance(event, FoodEvent):
                return _json({"code": "not_found",
                              "message": f"no food event {event_id}"}, 404)
            rated = event.with_rating(rating)
            store.replace_event(user_id, rated)
        return _json({"status": "rated", "event": event_to_record(rated)})

    @app.get("/v1/catalog")
    async def get_catalog():
        catalog = FixtureCatalog(data_dir, config)
        items = [
            {"item_id": item_id, "name": catalog.nutrition.display_name(item_id)}
            for item_id in sorted(catalog.item_regions)
            if catalog.nutrition.item_facts(item_id) is not None
        ]
        dishes = [
            {"dish_id": dish_id,
             "ingredients": [item for item, _ in catalog.recipes[dish_id]]}
            for dish_id in sorted(catalog.recipes)
        ]
        return _json({"items": items, "dishes": dishes})

    @app.post("/v1/users/{user_id}/enrich")
    async def post_enrich(user_id: str):
        try:
            report = enrich_user(store, user_id, data_dir, config)
        except PfmError as exc:
            return _error(exc)
        return _json(report)

    # -- reads -----------------------------------------------------------

    @app.get("/v1/users/{user_id}/chronicle")
    async def get_chronicle(user_id: str, start: int | None = None,
                            end: int | None = None, stream: str | None = None):
        from .chronicle import event_to_record, window_query
        chronicle = store.load_chronicle(user_id)
        lo = chronicle.events[0].start_ms if (start is None and chronicle.events) else (start or 0)
        hi = (chronicle.events[-1].start_ms + 1
              if (end is None and chronicle.events) else (end or 0))
        try:
            events = window_query(chronicle, lo, hi, stream)
        except PfmError as exc:
            return _error(exc)
        return _json({"user_id": user_id, "events": [event_to_record(e) for e in events]})

    @app.get("/v1/users/{user_id}/heatmap")
    async def get_heatmap(user_id: str, a: str, b: str, window: float = 720.0):
        chronicle = store.load_chronicle(user_id)
        try:
            payload = heatmap_payload(chronicle, a, b, window)
        except (PfmError, ValueError) as exc:
            if isinstance(exc, PfmError):
                return _error(exc)
            return _json({"code": "invalid_request", "message": str(exc)}, 400)
        return _json(payload)

    # -- analysis --------------------------------------------------------

    @app.post("/v1/users/{user_id}/hypotheses/verify")
    async def post_verify(user_id: str, request: Request,
                          alpha: float | None = None,
                          n_permutations: int | None = None):
        body = await request.json()
        chronicle = store.load_chronicle(user_id)
        try:
            payload = verify_payload(chronicle, body, config,
                                     alpha=alpha, n_permutations=n_permutations)
        except (NoOccurrences, NoControls, PfmError) as exc:
            return _error(exc)
        except (ValueError, KeyError, TypeError) as exc:
            return _json({"code": "schema_error", "message": str(exc)}, 400)
        return _json(payload)

    @app.post("/v1/users/{user_id}/model/build")
    async def post_model_build(user_id: str, wait: bool = False):
        def run() -> None:
            try:
                summary = build_model_payload(store, user_id, data_dir, config)
                with jobs_lock:
                    jobs[user_id] = {"status": "ready", "summary": summary}
            except PfmError as exc:
                with jobs_lock:
                    jobs[user_id] = {"status": "failed", "code": exc.code,
                                     "message": str(exc)}

        if wait:
            try:
                summary = build_model_payload(store, user_id, data_dir, config)
            except (InsufficientData, SchemaError, PfmError) as exc:
                return _error(exc)
            with jobs_lock:
                jobs[user_id] = {"status": "ready", "summary": summary}
            return _json(summary)
        with jobs_lock:
            jobs[user_id] = {"status": "building"}
        threading.Thread(target=run, daemon=True).start()
        return _json({"status": "building"}, status_code=202)

    @app.get("/v1/users/{user_id}/model")
    async def get_model(user_id: str):
        with jobs_lock:
            job = jobs.get(user_id)
        if job is not None and job["status"] != "ready":
            return _json(job)
        snapshot = store.load_model(user_id)
        if snapshot is None:
            return _json({"status": "none"})
        from .model import PersonalFoodModel
        summary = PersonalFoodModel.from_dict(snapshot).summary()
        return _json({"status": "ready", "summary": summary})

    @app.post("/v1/users/{user_id}/recommendations")
    async def post_recommendations(user_id: str, request: Request):
        body = await request.json()
        try:
            payload = recommend_payload(store, user_id, body, data_dir, config)
        except (NoModel, NoCandidates, NoProfile, UnresolvedFood, PfmError) as exc:
            return _error(exc)
        except (ValueError, KeyError, TypeError) as exc:
            return _json({"code": "schema_error", "message": str(exc)}, 400)
        return _json(payload)

    # -- companion UI ----------------------------------------------------

    dist = Path(ui_dist) if ui_dist is not None else Path(__file__).resolve().parents[2] / "frontend" / "dist"
    if dist.is_dir():
        app.mount("/ui", StaticFiles(directory=dist, html=True), name="ui")

        @app.get("/")
        async def index() -> FileResponse:
            return FileResponse(dist / "index.html")

    return app


def main() -> None:
    """`python -m pfm.service` — dev convenience around uvicorn."""
    import argparse

    import uvicorn

    parser = argparse.ArgumentParser(prog="pfm-service")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--data-dir", default=".")
    parser.add_argument("--config", default=None)
    args = parser.parse_args()
    uvicorn.run(create_app(data_dir=args.data_dir, config_path=args.config),
                host=args.host, port=args.port)


if __name__ == "__main__":
    main()
