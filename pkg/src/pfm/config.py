"""Engine configuration and data-dir file resolution.

All tunables that the contracts leave to configuration live here: seeds,
resample counts, thresholds, per-metric effect caps. Values can be overridden
by a JSON file (``config/engine.json`` under the data dir, or an explicit
path) and, for the seed only, by the ``PFM_SEED`` environment variable.

Fixture and config files resolve against a data dir first and fall back to
the copies shipped inside the package (``pfm/data/``).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields, replace
from importlib import resources
from pathlib import Path


@dataclass(frozen=True)
class EngineConfig:
    seed: int = 1234
    alpha: float = 0.05
    n_permutations: int = 500
    bootstrap_resamples: int = 500
    min_effect: float = 2.0          # outcome units; floor for "meaningful" effects
    bins_k: int = 3                  # equal-frequency bins for numeric confounders
    min_group_units: int = 5         # below this per side a context is low-power
    min_days: int = 28               # chronicle span required to personalize
    rating_threshold: int = 4        # events rated >= this build preference regions
    cluster_cutoff: float = 0.15     # centroid distance below which clusters merge
    clusters_max: int = 5
    region_epsilon: float = 0.01     # inflation for zero-volume taste boxes
    prior_fraction: float = 0.25     # prior-only rule magnitude = fraction * min_effect
    w_pref: float = 0.5
    w_health: float = 0.5
    cache_ttl_days: int = 30
    heavy_meal_kcal_fraction: float = 0.4   # of the user's daily average intake
    bedtime_window_hours: float = 3.0       # "near bedtime" = this long before usual bedtime
    default_bedtime_hour: float = 23.0      # used when no sleep events exist yet
    # |predicted delta| is capped per metric; "*" is the fallback cap.
    effect_caps: dict[str, float] = field(default_factory=lambda: {
        "sleep_quality": 20.0,
        "sleep_latency": 30.0,
        "duration": 90.0,
        "start_hour": 3.0,
        "*": 20.0,
    })

    def cap_for(self, metric: str) -> float:
        return self.effect_caps.get(metric, self.effect_caps["*"])

    def with_overrides(self, **kwargs) -> "EngineConfig":
        return replace(self, **kwargs)


def load_config(path: str | Path | None = None,
                data_dir: str | Path | None = None,
                seed: int | None = None) -> EngineConfig:
    """Build an EngineConfig from defaults, an optional file, and overrides.

    Precedence (lowest to highest): dataclass defaults, ``config/engine.json``
    under the data dir, explicit ``path`` file, ``PFM_SEED`` env var, ``seed``
    argument.
    """
    cfg = EngineConfig()
    candidates: list[Path] = []
    if data_dir is not None:
        candidates.append(Path(data_dir) / "config" / "engine.json")
    if path is not None:
        candidates.append(Path(path))
    known = {f.name for f in fields(EngineConfig)}
    for candidate in candidates:
        if candidate.is_file():
            raw = json.loads(candidate.read_text(encoding="utf-8"))
            overrides = {k: v for k, v in raw.items() if k in known}
            if "effect_caps" in overrides:
                caps = dict(cfg.effect_caps)
                caps.update(overrides["effect_caps"])
                overrides["effect_caps"] = caps
            cfg = cfg.with_overrides(**overrides)
    env_seed = os.environ.get("PFM_SEED")
    if env_seed is not None:
        cfg = cfg.with_overrides(seed=int(env_seed))
    if seed is not None:
        cfg = cfg.with_overrides(seed=seed)
    return cfg


def resolve_data_file(relative: str, data_dir: str | Path | None = None) -> Path:
    """Locate ``relative`` (e.g. ``fixtures/nutrition.jsonl``) for reading.

    The data dir copy wins when present; otherwise the packaged default is
    returned. Raises FileNotFoundError when neither exists.
    """
    if data_dir is not None:
        local = Path(data_dir) / relative
        if local.is_file():
            return local
    packaged = resources.files("pfm").joinpath("data").joinpath(relative)
    with resources.as_file(packaged) as concrete:
        if concrete.is_file():
            return concrete
    raise FileNotFoundError(f"no data file {relative!r} under data dir or packaged defaults")
