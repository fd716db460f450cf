"""Six-channel taste space: vectors, axis-aligned regions, and preference math.

Coordinates are unitless intensities in [0, 1] on six channels (umami, salty,
sweet, spicy, sour, bitter). A food item occupies a region (an axis-aligned
box) estimated from repeated samples; a dish's region is the proportion-
weighted interval sum of its ingredient regions; a person's preference profile
is a weighted set of regions built from their highly rated food events.

Regions are boxes rather than hulls on purpose: boxes have closed-form
intersection volumes and trivially checkable containment, and the raw samples
are kept around so a hull-based upgrade would not break callers.

Preference weighting uses ratings only; weighting by quantity consumed is a
known extension that is deliberately not implemented here.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Iterable, Sequence

import numpy as np

from .errors import (
    BadProportions,
    EmptySamples,
    NoCandidates,
    NoRatedEvents,
    UnknownIngredient,
)

if TYPE_CHECKING:
    from .chronicle import Chronicle
    from .enrichment import NutritionFacts

CHANNELS = ("umami", "salty", "sweet", "spicy", "sour", "bitter")

#: Scoville value mapped to spicy == 1.0 by the log compression below.
SCOVILLE_CEILING = 1_000_000.0


def spicy_from_scoville(scoville: float, ceiling: float = SCOVILLE_CEILING) -> float:
    """Log-compress a Scoville heat value onto the [0, 1] spicy channel."""
    if scoville < 0:
        raise ValueError("scoville must be >= 0")
    value = math.log10(1.0 + scoville) / math.log10(1.0 + ceiling)
    return min(1.0, value)


def load_calibration(path: str | Path) -> dict:
    """Channel calibration anchors (``config/taste_calibration.json``).

    Carries the per-channel reference ladders used when scoring raw samples
    onto [0, 1], plus the Scoville ceiling for the spicy mapping.
    """
    calibration = json.loads(Path(path).read_text(encoding="utf-8"))
    if tuple(calibration.get("channels", ())) != CHANNELS:
        raise ValueError("calibration file must cover exactly the six taste channels")
    return calibration


@dataclass(frozen=True)
class TasteVector:
    umami: float
    salty: float
    sweet: float
    spicy: float
    sour: float
    bitter: float

    def __post_init__(self):
        for name in CHANNELS:
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"channel {name} = {v} outside [0, 1]")

    def as_array(self) -> np.ndarray:
        return np.array([getattr(self, c) for c in CHANNELS], dtype=float)

    @classmethod
    def from_array(cls, arr: Sequence[float], clamp: bool = False) -> "TasteVector":
        vals = [float(v) for v in arr]
        if clamp:
            vals = [min(1.0, max(0.0, v)) for v in vals]
        return cls(*vals)

    def to_dict(self) -> dict:
        return {c: getattr(self, c) for c in CHANNELS}

    @classmethod
    def from_dict(cls, d: dict) -> "TasteVector":
        return cls(**{c: float(d[c]) for c in CHANNELS})


@dataclass(frozen=True)
class TasteSample:
    item_id: str
    vector: TasteVector
    source: str = ""
    rater: str | None = None


@dataclass(frozen=True)
class TasteRegion:
    """Axis-aligned box with its sample centroid.

    Invariants: lo <= hi per channel, centroid inside the box, sample_count >= 1.
    """

    lo: TasteVector
    hi: TasteVector
    sample_count: int
    centroid: TasteVector

    def __post_init__(self):
        if self.sample_count < 1:
            raise ValueError("sample_count must be >= 1")
        lo, hi, c = self.lo.as_array(), self.hi.as_array(), self.centroid.as_array()
        if np.any(lo > hi + 1e-12):
            raise ValueError("lo must be <= hi on every channel")
        if np.any(c < lo - 1e-9) or np.any(c > hi + 1e-9):
            raise ValueError("centroid must lie inside the box")

    @classmethod
    def from_point(cls, vector: TasteVector, sample_count: int = 1) -> "TasteRegion":
        return cls(lo=vector, hi=vector, sample_count=sample_count, centroid=vector)

    def widths(self) -> np.ndarray:
        return self.hi.as_array() - self.lo.as_array()

    def volume(self) -> float:
        return float(np.prod(self.widths()))

    def contains(self, vector: TasteVector, tol: float = 0.0) -> bool:
        v = vector.as_array()
        return bool(
            np.all(v >= self.lo.as_array() - tol)
            and np.all(v <= self.hi.as_array() + tol)
        )

    def inflate_degenerate(self, epsilon: float) -> "TasteRegion":
        """Give zero-width channels width ``epsilon`` (kept inside [0, 1]).

        Non-degenerate boxes are returned unchanged; applied before any
        volume-ratio computation so point-like regions still overlap.
        """
        widths = self.widths()
        if np.all(widths > 0):
            return self
        lo, hi = self.lo.as_array().copy(), self.hi.as_array().copy()
        for i in range(len(CHANNELS)):
            if widths[i] == 0.0:
                lo[i] = lo[i] - epsilon / 2.0
                hi[i] = hi[i] + epsilon / 2.0
                if lo[i] < 0.0:
                    lo[i], hi[i] = 0.0, epsilon
                elif hi[i] > 1.0:
                    lo[i], hi[i] = 1.0 - epsilon, 1.0
        centroid = np.clip(self.centroid.as_array(), lo, hi)
        return TasteRegion(
            lo=TasteVector.from_array(lo),
            hi=TasteVector.from_array(hi),
            sample_count=self.sample_count,
            centroid=TasteVector.from_array(centroid),
        )

    def intersection_volume(self, other: "TasteRegion") -> float:
        lo = np.maximum(self.lo.as_array(), other.lo.as_array())
        hi = np.minimum(self.hi.as_array(), other.hi.as_array())
        widths = hi - lo
        if np.any(widths <= 0):
            return 0.0
        return float(np.prod(widths))

    def to_dict(self) -> dict:
        return {
            "lo": self.lo.to_dict(),
            "hi": self.hi.to_dict(),
            "centroid": self.centroid.to_dict(),
            "sample_count": self.sample_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "TasteRegion":
        return cls(
            lo=TasteVector.from_dict(d["lo"]),
            hi=TasteVector.from_dict(d["hi"]),
            sample_count=int(d["sample_count"]),
            centroid=TasteVector.from_dict(d["centroid"]),
        )


@dataclass(frozen=True)
class PreferenceProfile:
    user_id: str
    preferred_regions: tuple[tuple[TasteRegion, float], ...]
    built_from: int
    min_rating_threshold: int

    def __post_init__(self):
        total = sum(w for _, w in self.preferred_regions)
        if total > 1.0 + 1e-9:
            raise ValueError(f"region weights sum to {total} > 1")
        for _, w in self.preferred_regions:
            if not (0.0 < w <= 1.0):
                raise ValueError(f"region weight {w} outside (0, 1]")

    def to_dict(self) -> dict:
        return {
            "user_id": self.user_id,
            "preferred_regions": [
                {"region": r.to_dict(), "weight": w} for r, w in self.preferred_regions
            ],
            "built_from": self.built_from,
            "min_rating_threshold": self.min_rating_threshold,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PreferenceProfile":
        return cls(
            user_id=d["user_id"],
            preferred_regions=tuple(
                (TasteRegion.from_dict(e["region"]), float(e["weight"]))
                for e in d["preferred_regions"]
            ),
            built_from=int(d["built_from"]),
            min_rating_threshold=int(d["min_rating_threshold"]),
        )


@dataclass(frozen=True)
class FoodItem:
    """A candidate item for substitute/recommendation queries."""

    item_id: str
    region: TasteRegion
    nutrition: "NutritionFacts"


@dataclass(frozen=True)
class SubstituteResult:
    item_id: str
    health_value: float
    preference: float
    distance_to_target: float


# ---------------------------------------------------------------------------
# region construction
# ---------------------------------------------------------------------------

def item_region(samples: Sequence[TasteSample], trim_fraction: float = 0.0) -> TasteRegion:
    """Box from repeated taste samples of one item.

    Per channel the interval is [q(trim), q(1 - trim)] using linear
    interpolation between order statistics; trim 0 gives exact min/max. The
    centroid channel value is the mean of the sample values retained inside
    the interval.
    """
    if not samples:
        raise EmptySamples("item_region needs at least one sample")
    if not (0.0 <= trim_fraction <= 0.25):
        raise ValueError("trim_fraction must be in [0, 0.25]")
    matrix = np.array([s.vector.as_array() for s in samples], dtype=float)
    lo = np.quantile(matrix, trim_fraction, axis=0, method="linear")
    hi = np.quantile(matrix, 1.0 - trim_fraction, axis=0, method="linear")
    centroid = np.empty(len(CHANNELS))
    for i in range(len(CHANNELS)):
        col = matrix[:, i]
        kept = col[(col >= lo[i]) & (col <= hi[i])]
        centroid[i] = kept.mean() if kept.size else (lo[i] + hi[i]) / 2.0
    centroid = np.clip(centroid, lo, hi)
    return TasteRegion(
        lo=TasteVector.from_array(lo, clamp=True),
        hi=TasteVector.from_array(hi, clamp=True),
        sample_count=len(samples),
        centroid=TasteVector.from_array(np.clip(centroid, 0.0, 1.0)),
    )


def dish_region(recipe: Sequence[tuple[str, float]],
                item_regions: dict[str, TasteRegion]) -> TasteRegion:
    """Proportion-weighted interval sum of ingredient regions.

    Endpoints combine monotonically (lo = sum p*lo_i, hi = sum p*hi_i), which
    is the exact box hull of mixing each ingredient anywhere inside its own
    box under linear mixing. Result clamped to [0, 1].
    """
    if not recipe:
        raise BadProportions("recipe has no ingredients")
    proportions = np.array([p for _, p in recipe], dtype=float)
    if np.any(proportions <= 0):
        raise BadProportions("proportions must be > 0")
    if abs(proportions.sum() - 1.0) > 1e-9:
        raise BadProportions(f"proportions sum to {proportions.sum()}, expected 1")
    for item_id, _ in recipe:
        if item_id not in item_regions:
            raise UnknownIngredient(item_id)
    lo = np.zeros(len(CHANNELS))
    hi = np.zeros(len(CHANNELS))
    centroid = np.zeros(len(CHANNELS))
    for (item_id, p) in recipe:
        r = item_regions[item_id]
        lo += p * r.lo.as_array()
        hi += p * r.hi.as_array()
        centroid += p * r.centroid.as_array()
    lo, hi = np.clip(lo, 0.0, 1.0), np.clip(hi, 0.0, 1.0)
    centroid = np.clip(centroid, lo, hi)
    return TasteRegion(
        lo=TasteVector.from_array(lo),
        hi=TasteVector.from_array(hi),
        sample_count=min(item_regions[i].sample_count for i, _ in recipe),
        centroid=TasteVector.from_array(centroid),
    )


# ---------------------------------------------------------------------------
# preference profile
# ---------------------------------------------------------------------------

def _greedy_clusters(points: list[np.ndarray], cutoff: float, max_clusters: int) -> list[list[int]]:
    """Deterministic agglomerative merge on cluster-mean distance.

    Merges the closest pair while the distance stays below ``cutoff``, then
    keeps merging closest pairs until at most ``max_clusters`` remain.
    Ties break on the lowest member indices, so the result is seed-free.
    """
    clusters = [[i] for i in range(len(points))]
    means = [p.copy() for p in points]

    def closest_pair() -> tuple[int, int, float]:
        best = (-1, -1, math.inf)
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                d = float(np.linalg.norm(means[a] - means[b]))
                if d < best[2] - 1e-15:
                    best = (a, b, d)
        return best

    def merge(a: int, b: int) -> None:
        clusters[a] = clusters[a] + clusters[b]
        means[a] = np.mean([points[i] for i in clusters[a]], axis=0)
        del clusters[b], means[b]

    while len(clusters) > 1:
        a, b, d = closest_pair()
        if d > cutoff:
            break
        merge(a, b)
    while len(clusters) > max_clusters:
        a, b, _ = closest_pair()
        merge(a, b)
    return clusters


def preference_profile(chronicle: "Chronicle",
                       rating_threshold: int = 4,
                       clusters_max: int = 5,
                       cluster_cutoff: float = 0.15) -> PreferenceProfile:
    """Build a user's preferred taste regions from rated food events.

    Events rated at or above the threshold (and carrying a taste region) are
    clustered by region centroid; each cluster becomes a box over its member
    centroids, weighted by total rating mass above the threshold.
    """
    rated = [
        ev for ev in chronicle.events
        if getattr(ev, "rating", None) is not None
        and getattr(ev, "taste", None) is not None
        and ev.rating >= rating_threshold
    ]
    if not rated:
        raise NoRatedEvents(f"no food events rated >= {rating_threshold} with a taste region")
    centroids = [ev.taste.centroid.as_array() for ev in rated]
    clusters = _greedy_clusters(centroids, cluster_cutoff, clusters_max)

    raw: list[tuple[TasteRegion, float]] = []
    for members in clusters:
        samples = [
            TasteSample(item_id=rated[i].event_id,
                        vector=rated[i].taste.centroid)
            for i in members
        ]
        region = item_region(samples, trim_fraction=0.0)
        weight = float(sum(rated[i].rating - rating_threshold + 1 for i in members))
        raw.append((region, weight))
    total = sum(w for _, w in raw)
    regions = tuple(
        sorted(
            ((r, w / total) for r, w in raw),
            key=lambda rw: (-rw[1], rw[0].centroid.as_array().tolist()),
        )
    )
    return PreferenceProfile(
        user_id=chronicle.user_id,
        preferred_regions=regions,
        built_from=len(rated),
        min_rating_threshold=rating_threshold,
    )


# ---------------------------------------------------------------------------
# queries
# ---------------------------------------------------------------------------

def preference_score(profile: PreferenceProfile, region: TasteRegion,
                     epsilon: float = 0.01) -> float:
    """Weighted overlap of ``region`` with the profile's preferred regions.

    Overlap of two boxes = intersection volume / volume of the smaller box,
    after epsilon-inflating any zero-width channels. Clamped to [0, 1].
    """
    query = region.inflate_degenerate(epsilon)
    score = 0.0
    for preferred, weight in profile.preferred_regions:
        box = preferred.inflate_degenerate(epsilon)
        smaller = min(query.volume(), box.volume())
        if smaller <= 0.0:
            continue
        score += weight * (query.intersection_volume(box) / smaller)
    return min(1.0, max(0.0, score))


def taste_distance(a: TasteVector, b: TasteVector,
                   channel_weights: Sequence[float] | None = None) -> float:
    """Weighted Euclidean distance between two taste vectors."""
    if channel_weights is None:
        weights = np.ones(len(CHANNELS))
    else:
        weights = np.asarray(channel_weights, dtype=float)
        if weights.shape != (len(CHANNELS),):
            raise ValueError(f"expected {len(CHANNELS)} channel weights")
        if np.any(weights < 0):
            raise ValueError("channel weights must be >= 0")
    diff = a.as_array() - b.as_array()
    return float(np.sqrt(np.sum(weights * diff * diff)))


def substitute_search(target: FoodItem,
                      candidates: Sequence[FoodItem],
                      profile: PreferenceProfile,
                      health_key: str,
                      k: int = 5) -> list[SubstituteResult]:
    """Healthier items inside the user's preferred taste range.

    Keeps candidates whose preference score is within 0.1 of the target's,
    then ranks ascending on the named nutrition field, breaking ties by
    centroid distance to the target and then item id.
    """
    if not candidates:
        raise NoCandidates("substitute_search needs at least one candidate")

    def health(item: FoodItem) -> float:
        value = getattr(item.nutrition, health_key, None)
        if value is None or not isinstance(value, (int, float)):
            raise ValueError(f"unknown nutrition field {health_key!r}")
        return float(value)

    target_score = preference_score(profile, target.region)
    floor = target_score - 0.1
    kept = []
    for c in candidates:
        score = preference_score(profile, c.region)
        if score >= floor:
            kept.append((c, score))
    kept.sort(key=lambda cs: (
        health(cs[0]),
        taste_distance(cs[0].region.centroid, target.region.centroid),
        cs[0].item_id,
    ))
    return [
        SubstituteResult(
            item_id=c.item_id,
            health_value=health(c),
            preference=score,
            distance_to_target=taste_distance(c.region.centroid, target.region.centroid),
        )
        for c, score in kept[:k]
    ]


# ---------------------------------------------------------------------------
# fixture loading
# ---------------------------------------------------------------------------

def load_taste_samples(path: str | Path) -> list[TasteSample]:
    """Read ``taste_samples.jsonl`` (one sample per line: item_id + channels)."""
    samples = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        samples.append(TasteSample(
            item_id=rec["item_id"],
            vector=TasteVector.from_dict(rec),
            source=rec.get("source", ""),
            rater=rec.get("rater"),
        ))
    return samples


def load_recipes(path: str | Path) -> dict[str, list[tuple[str, float]]]:
    """Read ``recipes.jsonl`` (dish_id + ingredient proportion map)."""
    recipes: dict[str, list[tuple[str, float]]] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        rec = json.loads(line)
        recipes[rec["dish_id"]] = [
            (ing["item_id"], float(ing["proportion"])) for ing in rec["ingredients"]
        ]
    return recipes


def item_regions_from_samples(samples: Iterable[TasteSample],
                              trim_fraction: float = 0.0) -> dict[str, TasteRegion]:
    by_item: dict[str, list[TasteSample]] = {}
    for s in samples:
        by_item.setdefault(s.item_id, []).append(s)
    return {item: item_region(group, trim_fraction) for item, group in sorted(by_item.items())}
