"""Statistical primitives for rule verification.

Permutation tests instead of t-tests: per-context unit counts are small and
nothing here is safely normal. The Benjamini-Hochberg step-up controls the
false discovery rate across the context groups of one hypothesis. A rule's
"validity" in a context is bootstrap sign-stability: the fraction of
resampled effects that keep the point estimate's sign and clear the
configured minimum effect size.
"""

from __future__ import annotations

import numpy as np


def permutation_test(treated, control, n_permutations: int,
                     rng: np.random.Generator) -> tuple[float, float]:
    """Two-sided permutation test on the difference of means.

    Returns (observed effect, p). p uses the add-one estimator
    (1 + hits) / (n + 1) so it is a valid p-value at any resample count.
    A zero-variance pool short-circuits to p = 1.
    """
    treated = np.asarray(treated, dtype=float)
    control = np.asarray(control, dtype=float)
    if treated.size == 0 or control.size == 0:
        raise ValueError("both sides need at least one unit")
    observed = float(treated.mean() - control.mean())
    pooled = np.concatenate([treated, control])
    if np.ptp(pooled) == 0.0:
        return observed, 1.0
    n_t = treated.size
    # one shuffled copy per row; argsort of uniforms is an unbiased permutation
    order = np.argsort(rng.random((n_permutations, pooled.size)), axis=1)
    shuffled = pooled[order]
    diffs = shuffled[:, :n_t].mean(axis=1) - shuffled[:, n_t:].mean(axis=1)
    hits = int(np.sum(np.abs(diffs) >= abs(observed) - 1e-12))
    return observed, (1 + hits) / (n_permutations + 1)


def benjamini_hochberg(p_values) -> list[float]:
    """Step-up FDR adjustment; returns adjusted p-values in input order."""
    p = np.asarray(p_values, dtype=float)
    m = p.size
    if m == 0:
        return []
    order = np.argsort(p, kind="stable")
    ranked = p[order] * m / np.arange(1, m + 1)
    # enforce monotonicity from the largest rank downward
    ranked = np.minimum.accumulate(ranked[::-1])[::-1]
    adjusted = np.empty(m)
    adjusted[order] = np.minimum(ranked, 1.0)
    return [float(x) for x in adjusted]


def bootstrap_sign_validity(treated, control, point_effect: float,
                            min_effect: float, n_resamples: int,
                            rng: np.random.Generator) -> float:
    """Fraction of bootstrap effects matching the point estimate's sign with
    magnitude at least ``min_effect``. Zero point effects have validity 0."""
    if point_effect == 0.0:
        return 0.0
    treated = np.asarray(treated, dtype=float)
    control = np.asarray(control, dtype=float)
    t_idx = rng.integers(0, treated.size, size=(n_resamples, treated.size))
    c_idx = rng.integers(0, control.size, size=(n_resamples, control.size))
    effects = treated[t_idx].mean(axis=1) - control[c_idx].mean(axis=1)
    stable = (np.sign(effects) == np.sign(point_effect)) & (np.abs(effects) >= min_effect)
    return float(stable.mean())
