"""Per-base-class prototypes/covariances and the Tukey power transform."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .banks import FeatureBank, Split

LOG_EPSILON = 1e-6


def tukey_transform(f: np.ndarray, tau: float) -> np.ndarray:
    """Elementwise power transform f**tau; log(f + eps) when tau == 0.

    ReLU features contain exact zeros, so the log branch uses a small
    epsilon floor instead of being undefined at 0.
    """
    f = np.asarray(f, dtype=np.float64)
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if np.any(f < 0):
        raise ValueError("tukey_transform requires non-negative inputs")
    if tau == 0:
        return np.log(f + LOG_EPSILON)
    return np.power(f, tau)


def compute_prototype(features: np.ndarray) -> np.ndarray:
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 1:
        raise ValueError("compute_prototype needs at least one row")
    return features.mean(axis=0)


def compute_covariance(features: np.ndarray, mu: np.ndarray) -> np.ndarray:
    """Unbiased sample covariance (divisor n-1), symmetrized for stability."""
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] < 2:
        raise ValueError("compute_covariance needs at least two rows")
    centered = features - np.asarray(mu, dtype=np.float64)
    cov = centered.T @ centered / (features.shape[0] - 1)
    return (cov + cov.T) / 2


@dataclass
class BaseClassStats:
    """Prototype and covariance per base class, in one feature space.

    Two instances are normally kept: raw space (fusion-network target) and
    Tukey space (prototype-view hallucination distances/estimates).
    """

    class_ids: list[str]
    mu: dict[str, np.ndarray]
    sigma: dict[str, np.ndarray]
    counts: dict[str, int]
    tau: float | None  # None = raw space

    @classmethod
    def from_bank(cls, bank: FeatureBank, tau: float | None = None) -> "BaseClassStats":
        ids, mu, sigma, counts = [], {}, {}, {}
        for c in bank.classes:
            if c.split != Split.BASE:
                continue
            rows = np.asarray(c.features, dtype=np.float64)
            if tau is not None:
                rows = tukey_transform(rows, tau)
            ids.append(c.class_id)
            m = compute_prototype(rows)
            mu[c.class_id] = m
            counts[c.class_id] = rows.shape[0]
            if rows.shape[0] >= 2:
                sigma[c.class_id] = compute_covariance(rows, m)
            else:
                sigma[c.class_id] = np.zeros((rows.shape[1], rows.shape[1]))
        return cls(class_ids=sorted(ids), mu=mu, sigma=sigma, counts=counts, tau=tau)
