"""Reproducible N-way K-shot episode sampling from the novel split."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .banks import FeatureBank, Split

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class EpisodeSpec:
    n_way: int
    k_shot: int
    m_query: int = 15
    episode_count: int = 1000
    master_seed: int = 0

    def __post_init__(self):
        for name in ("n_way", "k_shot", "m_query", "episode_count"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class Episode:
    index: int
    class_ids: list[str]
    support: np.ndarray       # (N*K, d)
    support_labels: list[str]
    query: np.ndarray         # (N*M, d)
    query_labels: list[str]
    seed: int


def derive_episode_seed(master_seed: int, index: int) -> int:
    """SplitMix64-style mix of (master_seed, index) into an independent seed.

    Episodes can then be sampled in any order or in parallel with the same
    result as a sequential run.
    """
    if index < 0:
        raise ValueError("index must be non-negative")
    z = (master_seed ^ (index * 0x9E3779B97F4A7C15)) & _MASK64
    z = (z + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return (z ^ (z >> 31)) & _MASK64


def sample_episode(bank: FeatureBank, spec: EpisodeSpec, index: int) -> Episode:
    """Draw episode `index`: N classes uniformly without replacement, then
    K+M distinct rows per class (first K to support)."""
    novel_ids = sorted(bank.class_ids(Split.NOVEL))
    if len(novel_ids) < spec.n_way:
        raise ValueError(
            f"insufficient classes: novel split has {len(novel_ids)}, "
            f"need {spec.n_way}"
        )
    seed = derive_episode_seed(spec.master_seed, index)
    rng = np.random.default_rng(seed)
    picked = [novel_ids[i] for i in rng.choice(len(novel_ids), spec.n_way, replace=False)]

    support_rows, support_labels = [], []
    query_rows, query_labels = [], []
    need = spec.k_shot + spec.m_query
    for cid in picked:
        rows = np.asarray(bank.by_id(cid).features, dtype=np.float64)
        if rows.shape[0] < need:
            raise ValueError(
                f"insufficient samples: class {cid!r} has {rows.shape[0]} rows, "
                f"need {need}"
            )
        idx = rng.choice(rows.shape[0], need, replace=False)
        support_rows.append(rows[idx[: spec.k_shot]])
        query_rows.append(rows[idx[spec.k_shot :]])
        support_labels.extend([cid] * spec.k_shot)
        query_labels.extend([cid] * spec.m_query)

    return Episode(
        index=index,
        class_ids=picked,
        support=np.concatenate(support_rows, axis=0),
        support_labels=support_labels,
        query=np.concatenate(query_rows, axis=0),
        query_labels=query_labels,
        seed=seed,
    )
