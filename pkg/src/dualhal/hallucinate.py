"""Prototype-view hallucination: class estimation, merging strategies, resampling."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .banks import SemanticBank
from .relations import SelectionParams, select_correlated_bases
from .stats import BaseClassStats


class Merging(str, Enum):
    AFTER_ESTIMATION = "after_estimation"
    BEFORE_ESTIMATION = "before_estimation"
    NO_MERGING = "no_merging"


@dataclass(frozen=True)
class PvdhParams:
    alpha: float = 0.6
    beta: float = 0.2
    resample_count: int = 200
    merging: Merging = Merging.AFTER_ESTIMATION
    jitter: float = 1e-6

    def __post_init__(self):
        if not (0.0 <= self.alpha <= 1.0):
            raise ValueError("alpha must be in [0, 1]")
        if self.beta < 0 or self.jitter < 0 or self.resample_count < 0:
            raise ValueError("beta, jitter, resample_count must be non-negative")


@dataclass
class NovelClassEstimate:
    mu_hat: np.ndarray
    sigma_hat: np.ndarray
    components: list[tuple[np.ndarray, np.ndarray]] = field(default_factory=list)


def candidate_prototype(f_tukey, bases, stats: BaseClassStats, alpha: float) -> np.ndarray:
    if not bases:
        raise ValueError("empty base selection")
    proto_mean = np.mean([stats.mu[c] for c in bases], axis=0)
    return alpha * proto_mean + (1.0 - alpha) * np.asarray(f_tukey, dtype=np.float64)


def candidate_covariance(bases, stats: BaseClassStats, beta: float) -> np.ndarray:
    if not bases:
        raise ValueError("empty base selection")
    sigma = np.mean([stats.sigma[c] for c in bases], axis=0)
    return sigma + beta  # beta times the all-ones matrix


def estimate_class(
    support_tukey: np.ndarray,
    y: str,
    sel: SelectionParams,
    params: PvdhParams,
    stats: BaseClassStats,
    semantics: SemanticBank,
) -> NovelClassEstimate:
    """Estimate the class mean/covariance from K Tukey-space support rows.

    Strategies: average the K per-shot candidates (after_estimation), select
    once from the averaged feature (before_estimation), or keep all K
    candidates as mixture components (no_merging; mu_hat/sigma_hat are then
    only summary values).
    """
    support_tukey = np.atleast_2d(np.asarray(support_tukey, dtype=np.float64))
    if support_tukey.shape[0] < 1:
        raise ValueError("empty support")

    if params.merging is Merging.BEFORE_ESTIMATION:
        f_bar = support_tukey.mean(axis=0)
        bases = select_correlated_bases(f_bar, y, sel, stats, semantics)
        return NovelClassEstimate(
            mu_hat=candidate_prototype(f_bar, bases, stats, params.alpha),
            sigma_hat=candidate_covariance(bases, stats, params.beta),
        )

    components = []
    for row in support_tukey:
        bases = select_correlated_bases(row, y, sel, stats, semantics)
        components.append(
            (
                candidate_prototype(row, bases, stats, params.alpha),
                candidate_covariance(bases, stats, params.beta),
            )
        )
    mu_hat = np.mean([mu for mu, _ in components], axis=0)
    sigma_hat = np.mean([sig for _, sig in components], axis=0)
    if params.merging is Merging.NO_MERGING:
        return NovelClassEstimate(mu_hat=mu_hat, sigma_hat=sigma_hat, components=components)
    return NovelClassEstimate(mu_hat=mu_hat, sigma_hat=sigma_hat)


def _factor(sigma: np.ndarray, jitter: float) -> np.ndarray:
    d = sigma.shape[0]
    stabilized = (sigma + sigma.T) / 2 + jitter * np.eye(d)
    try:
        return np.linalg.cholesky(stabilized)
    except np.linalg.LinAlgError:
        pass
    # Singular even after jitter: clip eigenvalues at zero and retry.
    vals, vecs = np.linalg.eigh(stabilized)
    clipped = np.clip(vals, 0.0, None)
    if np.min(vals) < -1e-6:
        raise np.linalg.LinAlgError(
            f"covariance factorization failed: min eigenvalue {np.min(vals):.3e}"
        )
    return vecs * np.sqrt(clipped)


def resample(est: NovelClassEstimate, count: int, seed: int, jitter: float) -> np.ndarray:
    """Draw `count` Gaussian samples (or equal-weight mixture draws when
    components are present); deterministic given seed."""
    if count < 0:
        raise ValueError("count must be non-negative")
    rng = np.random.default_rng(seed)
    d = est.mu_hat.shape[0]
    if count == 0:
        return np.empty((0, d))
    if est.components:
        picks = rng.integers(0, len(est.components), size=count)
        z = rng.standard_normal((count, d))
        out = np.empty((count, d))
        factors = [_factor(sig, jitter) for _, sig in est.components]
        for i, comp in enumerate(picks):
            mu, _ = est.components[comp]
            out[i] = mu + factors[comp] @ z[i]
        return out
    L = _factor(est.sigma_hat, jitter)
    z = rng.standard_normal((count, d))
    return est.mu_hat + z @ L.T
