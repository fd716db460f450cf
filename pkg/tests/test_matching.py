import numpy as np
import pytest

from pfm.errors import MissingConfounderValue
from pfm.mining.matching import (
    ConfounderSpec,
    Unit,
    assign_bin,
    contextual_match,
    equal_frequency_edges,
)

from helpers import quantile_sorted_oracle


def unit(uid, treated, outcome, **confounders):
    return Unit(unit_id=uid, t_ms=0, treated=treated, outcome=outcome,
                confounders=confounders)


def test_single_categorical_partition_preserves_counts():
    units = [
        unit(f"u{i}", treated=i % 2 == 0, outcome=float(i),
             weekpart="weekday" if i % 3 else "weekend")
        for i in range(12)
    ]
    groups, _ = contextual_match(units, [ConfounderSpec("weekpart", "categorical")])
    assert len(groups) <= 2
    total = sum(g.n_treated + g.n_control for g in groups)
    assert total == 12
    ids = [u.unit_id for g in groups for u in g.treated + g.control]
    assert sorted(ids) == sorted(u.unit_id for u in units)   # exact partition


def test_identical_values_single_group():
    units = [unit(f"u{i}", i < 5, float(i), steps=100.0) for i in range(10)]
    groups, _ = contextual_match(units, [ConfounderSpec("steps", "numeric")])
    assert len(groups) == 1
    assert groups[0].n_treated == 5 and groups[0].n_control == 5


def test_no_confounders_single_empty_signature_group():
    units = [unit(f"u{i}", i % 2 == 0, float(i)) for i in range(8)]
    groups, edges = contextual_match(units, [])
    assert len(groups) == 1
    assert groups[0].signature == ()
    assert edges == {}


def test_missing_confounder_value_raises():
    units = [unit("a", True, 1.0, steps=5.0), unit("b", False, 2.0)]
    with pytest.raises(MissingConfounderValue) as exc:
        contextual_match(units, [ConfounderSpec("steps", "numeric")])
    assert exc.value.unit_id == "b"


def test_bin_boundaries_match_sort_based_tercile_oracle():
    rng = np.random.default_rng(29)
    for _ in range(50):
        values = [float(v) for v in rng.normal(5000, 2000, size=int(rng.integers(6, 80)))]
        edges = equal_frequency_edges(values, 3)
        expected = (quantile_sorted_oracle(values, 1 / 3),
                    quantile_sorted_oracle(values, 2 / 3))
        assert edges == pytest.approx(expected, abs=1e-9)


def test_assign_bin_right_closed():
    edges = (10.0, 20.0)
    assert assign_bin(5.0, edges) == 0
    assert assign_bin(10.0, edges) == 0    # boundary falls in the lower bin
    assert assign_bin(15.0, edges) == 1
    assert assign_bin(20.0, edges) == 1
    assert assign_bin(25.0, edges) == 2


def test_low_power_flag():
    units = (
        [unit(f"t{i}", True, 1.0, c="x") for i in range(3)]
        + [unit(f"c{i}", False, 1.0, c="x") for i in range(20)]
    )
    groups, _ = contextual_match(units, [ConfounderSpec("c", "categorical")],
                                 min_group_units=5)
    assert groups[0].low_power   # 3 treated < 5


def test_numeric_bins_partition_everything():
    rng = np.random.default_rng(33)
    units = [unit(f"u{i}", bool(rng.integers(0, 2)), float(rng.normal()),
                  steps=float(rng.uniform(0, 10_000)),
                  weekpart="weekend" if rng.random() < 0.3 else "weekday")
             for i in range(60)]
    groups, edges = contextual_match(
        units,
        [ConfounderSpec("steps", "numeric"), ConfounderSpec("weekpart", "categorical")],
    )
    seen = [u.unit_id for g in groups for u in g.treated + g.control]
    assert sorted(seen) == sorted(u.unit_id for u in units)
    assert len(edges["steps"]) == 2
    # every signature consistent with its members
    for g in groups:
        for member in g.treated + g.control:
            expected_bin = assign_bin(float(member.confounders["steps"]), edges["steps"])
            sig = dict(g.signature)
            assert sig["steps"] == f"steps:b{expected_bin}"
            assert sig["weekpart"] == member.confounders["weekpart"]
