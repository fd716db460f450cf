"""Nutrition/weather/place enrichment with fixture-backed offline clients.

Clients implement one narrow contract: ``resolve(query) -> NutritionFacts or
None`` where the query names either a dish or a barcode. The shipped fixture
client answers from local JSONL databases and never touches the network; live
HTTP adapters can sit behind the same contract when an API key is configured.
Results are cached on disk keyed by (client, normalized query) with a TTL.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Protocol

from .errors import ClientUnavailable, MalformedBarcode, NotFound, UnresolvedFood

_BARCODE_RE = re.compile(r"^\d{8,14}$")

#: how kcal should relate to macros; mismatches are flagged, never rejected
_KCAL_PER_GRAM = {"carb_g": 4.0, "protein_g": 4.0, "fat_g": 9.0}


@dataclass(frozen=True)
class Micronutrient:
    amount: float
    unit: str

    def to_dict(self) -> dict:
        return {"amount": self.amount, "unit": self.unit}


@dataclass(frozen=True)
class NutritionFacts:
    """Facts for a resolved food, normalized per consumed quantity.

    Fixture databases store values per 100 g; ``scale`` converts to an
    event's actual grams.
    """

    kcal: float = 0.0
    carb_g: float = 0.0
    protein_g: float = 0.0
    fat_g: float = 0.0
    fiber_g: float = 0.0
    sugar_g: float = 0.0
    caffeine_mg: float = 0.0
    capsaicin_scoville: float = 0.0
    micronutrients: dict[str, Micronutrient] = field(default_factory=dict)

    def __post_init__(self):
        for name in ("kcal", "carb_g", "protein_g", "fat_g", "fiber_g",
                     "sugar_g", "caffeine_mg", "capsaicin_scoville"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for key, micro in self.micronutrients.items():
            if micro.amount < 0:
                raise ValueError(f"micronutrient {key} amount must be >= 0")

    def sanity_flags(self) -> list[str]:
        """Soft checks: kcal should match 4c + 4p + 9f within 25%."""
        flags = []
        if self.carb_g > 0 and self.protein_g > 0 and self.fat_g > 0:
            expected = sum(getattr(self, k) * f for k, f in _KCAL_PER_GRAM.items())
            if expected > 0 and not (0.75 * expected <= self.kcal <= 1.25 * expected):
                flags.append(
                    f"kcal {self.kcal:.0f} outside ±25% of macro estimate {expected:.0f}"
                )
        return flags

    def scale(self, factor: float) -> "NutritionFacts":
        if factor < 0:
            raise ValueError("scale factor must be >= 0")
        # Scoville is a concentration, not an amount; it does not scale.
        return NutritionFacts(
            kcal=self.kcal * factor,
            carb_g=self.carb_g * factor,
            protein_g=self.protein_g * factor,
            fat_g=self.fat_g * factor,
            fiber_g=self.fiber_g * factor,
            sugar_g=self.sugar_g * factor,
            caffeine_mg=self.caffeine_mg * factor,
            capsaicin_scoville=self.capsaicin_scoville,
            micronutrients={
                k: Micronutrient(m.amount * factor, m.unit)
                for k, m in self.micronutrients.items()
            },
        )

    def to_dict(self) -> dict:
        return {
            "kcal": self.kcal,
            "carb_g": self.carb_g,
            "protein_g": self.protein_g,
            "fat_g": self.fat_g,
            "fiber_g": self.fiber_g,
            "sugar_g": self.sugar_g,
            "caffeine_mg": self.caffeine_mg,
            "capsaicin_scoville": self.capsaicin_scoville,
            "micronutrients": {
                k: m.to_dict() for k, m in sorted(self.micronutrients.items())
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "NutritionFacts":
        return cls(
            kcal=float(d.get("kcal", 0.0)),
            carb_g=float(d.get("carb_g", 0.0)),
            protein_g=float(d.get("protein_g", 0.0)),
            fat_g=float(d.get("fat_g", 0.0)),
            fiber_g=float(d.get("fiber_g", 0.0)),
            sugar_g=float(d.get("sugar_g", 0.0)),
            caffeine_mg=float(d.get("caffeine_mg", 0.0)),
            capsaicin_scoville=float(d.get("capsaicin_scoville", 0.0)),
            micronutrients={
                k: Micronutrient(float(m["amount"]), str(m["unit"]))
                for k, m in d.get("micronutrients", {}).items()
            },
        )


@dataclass(frozen=True)
class EnrichmentRecord:
    event_id: str
    nutrition: NutritionFacts
    client: str
    fetched_at: int
    weather: dict | None = None   # {"temp_c": float, "condition": str}
    place: dict | None = None     # {"category": str}

    def to_dict(self) -> dict:
        d = {
            "event_id": self.event_id,
            "nutrition": self.nutrition.to_dict(),
            "client": self.client,
            "fetched_at": self.fetched_at,
        }
        if self.weather is not None:
            d["weather"] = self.weather
        if self.place is not None:
            d["place"] = self.place
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "EnrichmentRecord":
        return cls(
            event_id=d["event_id"],
            nutrition=NutritionFacts.from_dict(d["nutrition"]),
            client=d["client"],
            fetched_at=int(d["fetched_at"]),
            weather=d.get("weather"),
            place=d.get("place"),
        )


def normalize_dish_name(name: str) -> str:
    return " ".join(name.lower().split())


def lookup_barcode(code: str, local_db: dict[str, str]) -> str:
    """Exact barcode -> item id lookup. No fuzzy matching by design."""
    if not _BARCODE_RE.match(code or ""):
        raise MalformedBarcode(f"barcode must be 8-14 digits, got {code!r}")
    try:
        return local_db[code]
    except KeyError:
        raise NotFound(f"barcode {code} not in local database") from None


class NutritionClient(Protocol):
    name: str

    def resolve(self, query: dict) -> NutritionFacts | None:
        """Return per-100g facts for {"dish": name} or {"barcode": code}, or None."""
        ...


class FixtureNutritionClient:
    """Offline client backed by ``fixtures/nutrition.jsonl`` + ``fixtures/barcodes.jsonl``.

    Performs zero network I/O; an injected transport counter (used by tests)
    would stay at zero for any sequence of calls.
    """

    name = "fixtures"

    def __init__(self, nutrition_path: str | Path, barcodes_path: str | Path | None = None):
        self._by_item: dict[str, NutritionFacts] = {}
        self._by_dish: dict[str, str] = {}
        self._names: dict[str, str] = {}
        self.barcodes: dict[str, str] = {}
        for line in Path(nutrition_path).read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            rec = json.loads(line)
            item_id = rec["item_id"]
            self._by_item[item_id] = NutritionFacts.from_dict(rec["per_100g"])
            self._names[item_id] = rec.get("name", item_id)
            self._by_dish[normalize_dish_name(rec.get("name", item_id))] = item_id
            self._by_dish.setdefault(normalize_dish_name(item_id), item_id)
        if barcodes_path is not None and Path(barcodes_path).is_file():
            for line in Path(barcodes_path).read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                rec = json.loads(line)
                self.barcodes[rec["barcode"]] = rec["item_id"]

    def item_facts(self, item_id: str) -> NutritionFacts | None:
        return self._by_item.get(item_id)

    def display_name(self, item_id: str) -> str:
        return self._names.get(item_id, item_id)

    def resolve(self, query: dict) -> NutritionFacts | None:
        if "barcode" in query:
            try:
                item_id = lookup_barcode(query["barcode"], self.barcodes)
            except NotFound:
                return None
            return self._by_item.get(item_id)
        if "dish" in query:
            item_id = self._by_dish.get(normalize_dish_name(query["dish"]))
            return self._by_item.get(item_id) if item_id else None
        return None


#: live nutrition API endpoint; only reached when an API key is configured
LIVE_API_BASE = "https://trackapi.nutritionix.com"


def urllib_transport(path: str, params: dict) -> dict:
    """Minimal stdlib HTTP POST transport for the live client."""
    import urllib.request

    request = urllib.request.Request(
        LIVE_API_BASE + path,
        data=json.dumps(params).encode("utf-8"),
        headers={"content-type": "application/json"},
        method="POST",
    )
    with urllib.request.urlopen(request, timeout=10) as response:
        return json.loads(response.read().decode("utf-8"))


class HttpNutritionClient:
    """Adapter for a live nutrition API behind the same resolve contract.

    Only constructed when ``PFM_NUTRITION_API_KEY`` is set; the transport is
    injected so tests can count (and forbid) network calls.
    """

    name = "live-http"

    def __init__(self, api_key: str, transport: Callable[[str, dict], dict]):
        self.api_key = api_key
        self.transport = transport

    def resolve(self, query: dict) -> NutritionFacts | None:
        try:
            payload = self.transport("/v2/natural/nutrients", {**query, "key": self.api_key})
        except Exception as exc:
            raise ClientUnavailable(str(exc)) from exc
        if not payload:
            return None
        return NutritionFacts.from_dict(payload)


class EnrichmentCache:
    """Disk cache of enrichment payloads, keyed by (client, normalized query).

    Writes are atomic (temp file + rename) so concurrent readers never see a
    partial record.
    """

    def __init__(self, root: str | Path, ttl_days: int = 30):
        self.root = Path(root)
        self.ttl_seconds = ttl_days * 86400

    def _path(self, client: str, query: dict) -> Path:
        key = json.dumps({"client": client, "query": query}, sort_keys=True)
        digest = hashlib.sha256(key.encode("utf-8")).hexdigest()[:32]
        return self.root / f"{digest}.json"

    def get(self, client: str, query: dict, now: float | None = None) -> dict | None:
        path = self._path(client, query)
        if not path.is_file():
            return None
        payload = json.loads(path.read_text(encoding="utf-8"))
        now = time.time() if now is None else now
        if now - payload["stored_at"] > self.ttl_seconds:
            return None
        return payload["value"]

    def put(self, client: str, query: dict, value: dict, now: float | None = None) -> None:
        path = self._path(client, query)
        path.parent.mkdir(parents=True, exist_ok=True)
        now = time.time() if now is None else now
        body = json.dumps({"stored_at": now, "value": value}, sort_keys=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8") as fh:
                fh.write(body)
            os.replace(tmp, path)
        except BaseException:
            if os.path.exists(tmp):
                os.unlink(tmp)
            raise


class ClientRegistry:
    """Ordered set of nutrition clients plus the shared cache.

    First client that resolves a query wins; priority is the construction
    order (config decides). ``calls`` counts actual client invocations so
    tests can assert cache hits.
    """

    def __init__(self, clients: list[NutritionClient],
                 cache: EnrichmentCache | None = None):
        if not clients:
            raise ValueError("registry needs at least one client")
        self.clients = list(clients)
        self.cache = cache
        self.calls = 0

    def resolve(self, query: dict) -> tuple[NutritionFacts, str] | None:
        if self.cache is not None:
            for client in self.clients:
                hit = self.cache.get(client.name, query)
                if hit is not None:
                    return NutritionFacts.from_dict(hit), client.name
        for client in self.clients:
            self.calls += 1
            facts = client.resolve(query)
            if facts is not None:
                if self.cache is not None:
                    self.cache.put(client.name, query, facts.to_dict())
                return facts, client.name
        return None


def enrich(food_event, registry: ClientRegistry,
           fetched_at: int | None = None) -> EnrichmentRecord:
    """Resolve nutrition for a food event (barcode first, then dish name).

    Facts are scaled from the per-100g database basis to the event's total
    grams. Raises UnresolvedFood when no client matches; the event itself is
    kept by callers and simply flagged unenriched.
    """
    queries: list[dict] = []
    if getattr(food_event, "barcode", None):
        queries.append({"barcode": food_event.barcode})
    if getattr(food_event, "dish", None):
        queries.append({"dish": normalize_dish_name(food_event.dish)})
    if not queries:
        raise UnresolvedFood("event has neither dish name nor barcode")
    for query in queries:
        resolved = registry.resolve(query)
        if resolved is not None:
            facts, client_name = resolved
            grams = getattr(food_event, "total_g", None)
            if grams:
                facts = facts.scale(grams / 100.0)
            return EnrichmentRecord(
                event_id=food_event.event_id,
                nutrition=facts,
                client=client_name,
                fetched_at=0 if fetched_at is None else fetched_at,
            )
    raise UnresolvedFood(f"no client resolved {queries}")
