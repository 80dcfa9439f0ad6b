"""Synthetic feature/semantic bank generator with tunable semantic-visual correlation."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .banks import ClassFeatures, FeatureBank, SemanticBank, Split


@dataclass(frozen=True)
class SyntheticSpec:
    n_base: int = 64
    n_novel: int = 20
    n_validation: int = 0
    d: int = 64
    m: int = 16
    samples_per_class: int = 200
    rho: float = 0.9      # semantic-visual correlation
    spread: float = 0.3   # within-class std
    seed: int = 0
    mean_scale: float = 0.35  # scale of class-mean dispersion before softplus
    mean_shift: float = 1.0  # lifts means away from 0 so noise clamping is rare

    def __post_init__(self):
        if min(self.n_base, self.n_novel, self.d, self.m, self.samples_per_class) <= 0:
            raise ValueError("counts and dimensions must be positive")
        if not (0.0 <= self.rho <= 1.0):
            raise ValueError("rho must be in [0, 1]")
        if self.spread <= 0:
            raise ValueError("spread must be positive")


def _softplus(x):
    return np.logaddexp(0.0, x)


def generate(spec: SyntheticSpec) -> tuple[FeatureBank, SemanticBank]:
    """Per class: latent z is the semantic vector; the class mean blends a
    fixed linear image of z (weight rho) with an independent direction
    (weight 1-rho), softplus-mapped to keep features non-negative. Samples
    add isotropic Gaussian noise, clamped at 0."""
    rng = np.random.default_rng(spec.seed)
    # Fixed semantic->visual map, scaled so A@z keeps unit-ish per-coordinate variance.
    A = rng.standard_normal((spec.d, spec.m)) / np.sqrt(spec.m)

    splits = (
        [Split.BASE] * spec.n_base
        + [Split.VALIDATION] * spec.n_validation
        + [Split.NOVEL] * spec.n_novel
    )
    classes = []
    semantics = {}
    for i, split in enumerate(splits):
        prefix = {Split.BASE: "base", Split.VALIDATION: "val", Split.NOVEL: "novel"}[split]
        cid = f"{prefix}_{i:04d}"
        z = rng.standard_normal(spec.m)
        u = rng.standard_normal(spec.d)
        raw_mean = spec.mean_scale * (spec.rho * (A @ z) + (1.0 - spec.rho) * u)
        mean = spec.mean_shift + _softplus(raw_mean)
        samples = mean + spec.spread * rng.standard_normal((spec.samples_per_class, spec.d))
        samples = np.clip(samples, 0.0, None)
        classes.append(ClassFeatures(cid, split, samples.astype(np.float32)))
        semantics[cid] = z.astype(np.float32)

    features = FeatureBank(dim=spec.d, classes=classes)
    semantic_bank = SemanticBank(dim=spec.m, entries=semantics)
    features.validate()
    semantic_bank.validate()
    return features, semantic_bank
