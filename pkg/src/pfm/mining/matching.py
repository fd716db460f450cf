"""Contextual matching: partition analysis units by confounder signature.

Units are compared only within matched contexts so the treatment effect is
estimated against controls from a similar situation. Categorical confounders
match exactly; numeric confounders are split into equal-frequency bins whose
boundaries are computed over all units (treated and control together).
Pattern-valued confounders are a documented extension point, not implemented.
"""

from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass

import numpy as np

from ..errors import MissingConfounderValue


@dataclass(frozen=True)
class Unit:
    """One analysis unit: a treatment occurrence or an eligible control window."""

    unit_id: str
    t_ms: int
    treated: bool
    outcome: float
    confounders: dict[str, object]


@dataclass(frozen=True)
class ConfounderSpec:
    name: str
    kind: str  # "categorical" | "numeric"

    def __post_init__(self):
        if self.kind not in ("categorical", "numeric"):
            raise ValueError(f"confounder kind must be categorical or numeric, got {self.kind!r}")


@dataclass(frozen=True)
class ContextGroup:
    signature: tuple[tuple[str, str], ...]   # ((confounder name, label), ...)
    treated: tuple[Unit, ...]
    control: tuple[Unit, ...]
    low_power: bool

    @property
    def n_treated(self) -> int:
        return len(self.treated)

    @property
    def n_control(self) -> int:
        return len(self.control)


def equal_frequency_edges(values, k: int) -> tuple[float, ...]:
    """Internal bin boundaries (k - 1 of them) at the i/k quantiles.

    Linear interpolation between order statistics; duplicate boundaries are
    collapsed so constant-ish data degrades to fewer bins instead of empty
    ones.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    arr = np.asarray(sorted(values), dtype=float)
    if arr.size == 0 or k == 1:
        return ()
    edges = [float(np.quantile(arr, i / k, method="linear")) for i in range(1, k)]
    unique: list[float] = []
    for e in edges:
        if not unique or e > unique[-1]:
            unique.append(e)
    return tuple(unique)


def assign_bin(value: float, edges: tuple[float, ...]) -> int:
    """Right-closed bins: value <= edges[i] falls into bin i."""
    return bisect_left(edges, value) if edges else 0


def bin_label(name: str, idx: int) -> str:
    return f"{name}:b{idx}"


def signature_for(values: dict[str, object],
                  specs: list[ConfounderSpec] | tuple[ConfounderSpec, ...],
                  edges_by_name: dict[str, tuple[float, ...]]) -> tuple[tuple[str, str], ...]:
    """Map raw confounder values to a group signature using fixed bin edges."""
    parts = []
    for spec in specs:
        value = values.get(spec.name)
        if value is None:
            raise MissingConfounderValue(str(values.get("unit_id", "?")), spec.name)
        if spec.kind == "categorical":
            parts.append((spec.name, str(value)))
        else:
            idx = assign_bin(float(value), edges_by_name.get(spec.name, ()))
            parts.append((spec.name, bin_label(spec.name, idx)))
    return tuple(parts)


def contextual_match(units: list[Unit],
                     confounders: list[ConfounderSpec] | tuple[ConfounderSpec, ...],
                     bins_k: int = 3,
                     min_group_units: int = 5,
                     ) -> tuple[list[ContextGroup], dict[str, tuple[float, ...]]]:
    """Partition units into context groups; every unit lands in exactly one.

    Returns the groups (sorted by signature for determinism) plus the numeric
    bin edges actually used, so later predictions can map a fresh context
    onto the same groups. With no confounders declared, everything forms a
    single group with an empty signature.
    """
    for unit in units:
        for spec in confounders:
            if spec.name not in unit.confounders or unit.confounders[spec.name] is None:
                raise MissingConfounderValue(unit.unit_id, spec.name)

    edges_by_name: dict[str, tuple[float, ...]] = {}
    for spec in confounders:
        if spec.kind == "numeric":
            values = [float(u.confounders[spec.name]) for u in units]
            edges_by_name[spec.name] = equal_frequency_edges(values, bins_k)

    grouped: dict[tuple, dict[str, list[Unit]]] = {}
    for unit in units:
        sig = signature_for(unit.confounders, confounders, edges_by_name)
        bucket = grouped.setdefault(sig, {"treated": [], "control": []})
        bucket["treated" if unit.treated else "control"].append(unit)

    groups = []
    for sig in sorted(grouped):
        bucket = grouped[sig]
        groups.append(ContextGroup(
            signature=sig,
            treated=tuple(bucket["treated"]),
            control=tuple(bucket["control"]),
            low_power=(len(bucket["treated"]) < min_group_units
                       or len(bucket["control"]) < min_group_units),
        ))
    return groups, edges_by_name
