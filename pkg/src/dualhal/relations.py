"""Semantic/visual distances and two-stage semantic-then-visual base selection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .banks import SemanticBank
from .stats import BaseClassStats


@dataclass(frozen=True)
class SelectionParams:
    p: int  # semantic shortlist size
    q: int  # visual pick count
    k: int = 1  # instance-view semantic top-k

    def __post_init__(self):
        if not (0 < self.q <= self.p):
            raise ValueError("need 0 < q <= p")
        if self.k < 1:
            raise ValueError("k must be positive")


def semantic_distance(v_y: np.ndarray, v_c: np.ndarray) -> float:
    v_y = np.asarray(v_y, dtype=np.float64)
    v_c = np.asarray(v_c, dtype=np.float64)
    if v_y.shape != v_c.shape:
        raise ValueError(f"length mismatch: {v_y.shape} vs {v_c.shape}")
    diff = v_y - v_c
    return float(diff @ diff)


def visual_distance(f_prime: np.ndarray, mu_c: np.ndarray) -> float:
    f_prime = np.asarray(f_prime, dtype=np.float64)
    mu_c = np.asarray(mu_c, dtype=np.float64)
    if f_prime.shape != mu_c.shape:
        raise ValueError(f"length mismatch: {f_prime.shape} vs {mu_c.shape}")
    diff = f_prime - mu_c
    return float(diff @ diff)


def _rank(pairs, count):
    # Stable ascending order by (distance, class_id); class_id breaks ties.
    return [cid for _, cid in sorted(pairs, key=lambda t: (t[0], t[1]))[:count]]


def top_k_semantic(y: str, semantics: SemanticBank, base_ids: list[str], k: int) -> list[str]:
    """k base classes with smallest semantic distance to class y, ascending."""
    if not (1 <= k <= len(base_ids)):
        raise ValueError(f"k={k} out of range for {len(base_ids)} base classes")
    v_y = semantics.entries[y]
    pairs = [(semantic_distance(v_y, semantics.entries[c]), c) for c in base_ids]
    return _rank(pairs, k)


def select_correlated_bases(
    x_feature_tukey: np.ndarray,
    y: str,
    params: SelectionParams,
    stats: BaseClassStats,
    semantics: SemanticBank,
) -> list[str]:
    """Semantic shortlist of size p, then the q visually nearest within it."""
    base_ids = stats.class_ids
    if params.p > len(base_ids):
        raise ValueError(f"p={params.p} exceeds base class count {len(base_ids)}")
    shortlist = top_k_semantic(y, semantics, base_ids, params.p)
    pairs = [(visual_distance(x_feature_tukey, stats.mu[c]), c) for c in shortlist]
    return _rank(pairs, params.q)
