"""Pipeline assembly, episode loop, metric aggregation, and parameter sweeps."""

from __future__ import annotations

import csv
import dataclasses
import datetime
import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import __version__
from .banks import FeatureBank, SemanticBank, Split, load_bank
from .classify import TrainSet, evaluate_episode, train_classifier
from .episodes import Episode, EpisodeSpec, derive_episode_seed, sample_episode
from .fusion import FusionNetwork, FusionTrainConfig, hallucinate_support, load_fusion, train_fusion
from .hallucinate import Merging, PvdhParams, estimate_class, resample
from .relations import SelectionParams
from .stats import BaseClassStats, tukey_transform
from .synthetic import SyntheticSpec, generate

PRNG_NAME = "numpy-PCG64"


class Pipeline(str, Enum):
    BASELINE = "baseline"
    IVDH_G = "ivdh_g"
    PVDH = "pvdh"
    PVDH_P = "pvdh_p"   # prototypes as samples, no resampling
    PVDH_V = "pvdh_v"   # visual-only selection (semantic shortlist inert)
    FULL = "full"

    @property
    def uses_fusion(self) -> bool:
        return self in (Pipeline.IVDH_G, Pipeline.FULL)

    @property
    def uses_pvdh(self) -> bool:
        return self in (Pipeline.PVDH, Pipeline.PVDH_P, Pipeline.PVDH_V, Pipeline.FULL)


@dataclass(frozen=True)
class ClassifierConfig:
    l2: float = 1e-3
    iters: int = 1000
    lr: float = 0.1


@dataclass
class RunConfig:
    episodes: EpisodeSpec
    pipeline: Pipeline = Pipeline.BASELINE
    features_path: str | None = None
    semantics_path: str | None = None
    synthetic: SyntheticSpec | None = None
    selection: SelectionParams = field(default_factory=lambda: SelectionParams(p=10, q=2, k=1))
    pvdh: PvdhParams = field(default_factory=PvdhParams)
    tau: float = 0.5
    lam: float = 0.3
    fusion_train: FusionTrainConfig = field(default_factory=FusionTrainConfig)
    fusion_path: str | None = None
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    workers: int = 1
    output_path: str | None = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["pipeline"] = self.pipeline.value
        d["pvdh"]["merging"] = self.pvdh.merging.value
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        d = dict(d)
        d["episodes"] = EpisodeSpec(**d["episodes"])
        d["pipeline"] = Pipeline(d.get("pipeline", "baseline"))
        if d.get("synthetic"):
            d["synthetic"] = SyntheticSpec(**d["synthetic"])
        if d.get("selection"):
            d["selection"] = SelectionParams(**d["selection"])
        if d.get("pvdh"):
            pv = dict(d["pvdh"])
            pv["merging"] = Merging(pv.get("merging", "after_estimation"))
            d["pvdh"] = PvdhParams(**pv)
        if d.get("fusion_train"):
            d["fusion_train"] = FusionTrainConfig(**d["fusion_train"])
        if d.get("classifier"):
            d["classifier"] = ClassifierConfig(**d["classifier"])
        return cls(**d)


@dataclass
class RunResult:
    mean_accuracy: float
    ci95: float
    per_episode: list[float]
    config: dict
    metadata: dict

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def write(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


def load_banks(config: RunConfig) -> tuple[FeatureBank, SemanticBank]:
    if config.synthetic is not None:
        return generate(config.synthetic)
    if not config.features_path or not config.semantics_path:
        raise ValueError("config needs either a synthetic spec or bank paths")
    return load_bank(config.features_path), load_bank(config.semantics_path)


@dataclass
class EpisodeEvaluator:
    """All immutable state needed to score one episode; picklable so episodes
    can be distributed over a process pool with order-independent results."""

    bank: FeatureBank
    semantics: SemanticBank
    tukey_stats: BaseClassStats
    config: RunConfig
    fusion_net: FusionNetwork | None
    selection: SelectionParams

    def __call__(self, index: int) -> float:
        ep = sample_episode(self.bank, self.config.episodes, index)
        return self.evaluate(ep)

    def evaluate(self, ep: Episode) -> float:
        cfg = self.config
        label_index = {cid: i for i, cid in enumerate(ep.class_ids)}
        support_t = tukey_transform(ep.support, cfg.tau)
        query_t = tukey_transform(ep.query, cfg.tau)

        rows = [support_t]
        labels = [label_index[c] for c in ep.support_labels]
        provenance = ["support"] * len(ep.support_labels)

        if cfg.pipeline.uses_fusion:
            hall, hall_labels = hallucinate_support(
                self.fusion_net, ep.support, ep.support_labels, self.semantics
            )
            rows.append(tukey_transform(hall, cfg.tau))
            labels.extend(label_index[c] for c in hall_labels)
            provenance.extend(["ivdh"] * len(hall_labels))

        if cfg.pipeline.uses_pvdh:
            resample_count = 0 if cfg.pipeline is Pipeline.PVDH_P else cfg.pvdh.resample_count
            for ci, cid in enumerate(ep.class_ids):
                mask = [i for i, c in enumerate(ep.support_labels) if c == cid]
                est = estimate_class(
                    support_t[mask], cid, self.selection, cfg.pvdh,
                    self.tukey_stats, self.semantics,
                )
                rows.append(est.mu_hat[None, :])
                labels.append(label_index[cid])
                provenance.append("prototype")
                if resample_count > 0:
                    drawn = resample(
                        est, resample_count,
                        seed=derive_episode_seed(ep.seed, 1000 + ci),
                        jitter=cfg.pvdh.jitter,
                    )
                    rows.append(drawn)
                    labels.extend([label_index[cid]] * resample_count)
                    provenance.extend(["resampled"] * resample_count)

        ts = TrainSet(
            rows=np.concatenate(rows, axis=0),
            labels=np.asarray(labels),
            n_classes=cfg.episodes.n_way,
            provenance=provenance,
        )
        clf = train_classifier(
            ts, l2=cfg.classifier.l2, iters=cfg.classifier.iters,
            lr=cfg.classifier.lr, seed=derive_episode_seed(ep.seed, 1),
        )
        true = np.asarray([label_index[c] for c in ep.query_labels])
        return evaluate_episode(clf, query_t, true)


def prepare_fusion(config: RunConfig, bank: FeatureBank, semantics: SemanticBank) -> FusionNetwork | None:
    if not config.pipeline.uses_fusion:
        return None
    if config.fusion_path:
        return load_fusion(config.fusion_path)
    raw_stats = BaseClassStats.from_bank(bank, tau=None)
    return train_fusion(bank, semantics, raw_stats, config.fusion_train, config.lam)


def _effective_selection(config: RunConfig, bank: FeatureBank) -> SelectionParams:
    n_base = len(bank.class_ids(Split.BASE))
    if config.pipeline is Pipeline.PVDH_V:
        # Semantic shortlist disabled: every base class survives to the visual stage.
        return SelectionParams(p=n_base, q=config.selection.q, k=config.selection.k)
    return config.selection


def run(config: RunConfig) -> RunResult:
    bank, semantics = load_banks(config)
    tukey_stats = BaseClassStats.from_bank(bank, tau=config.tau)
    fusion_net = prepare_fusion(config, bank, semantics)
    evaluator = EpisodeEvaluator(
        bank=bank,
        semantics=semantics,
        tukey_stats=tukey_stats,
        config=config,
        fusion_net=fusion_net,
        selection=_effective_selection(config, bank),
    )
    t = config.episodes.episode_count
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as ex:
            accs = list(ex.map(evaluator, range(t), chunksize=max(1, t // (4 * config.workers))))
    else:
        accs = [evaluator(i) for i in range(t)]

    accs = [float(a) for a in accs]
    mean = float(np.mean(accs))
    s = float(np.std(accs, ddof=1)) if t > 1 else 0.0
    ci95 = 1.96 * s / np.sqrt(t)
    result = RunResult(
        mean_accuracy=mean,
        ci95=float(ci95),
        per_episode=accs,
        config=config.to_dict(),
        metadata={
            "prng": PRNG_NAME,
            "version": __version__,
            "timestamp": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        },
    )
    if config.output_path:
        result.write(config.output_path)
    return result


_SWEEPABLE = ("lambda", "tau", "alpha", "p", "q", "resample_count")


def apply_parameter(config: RunConfig, parameter: str, value) -> RunConfig:
    if parameter == "lambda":
        return replace(config, lam=float(value))
    if parameter == "tau":
        return replace(config, tau=float(value))
    if parameter == "alpha":
        return replace(config, pvdh=replace(config.pvdh, alpha=float(value)))
    if parameter == "p":
        return replace(config, selection=replace(config.selection, p=int(value)))
    if parameter == "q":
        return replace(config, selection=replace(config.selection, q=int(value)))
    if parameter == "resample_count":
        return replace(config, pvdh=replace(config.pvdh, resample_count=int(value)))
    raise ValueError(f"unknown parameter {parameter!r}; expected one of {_SWEEPABLE}")


def sweep(config: RunConfig, parameter: str, values) -> list[RunResult]:
    """One run per value with identical seeds, so differences are parameter-driven."""
    results = []
    for v in values:
        cfg = apply_parameter(config, parameter, v)
        cfg = replace(cfg, output_path=None)
        results.append(run(cfg))
    return results


def export_projection(rows: np.ndarray, labels, provenance, out_path):
    """Write labeled feature rows as CSV for external projection/plotting."""
    rows = np.asarray(rows, dtype=np.float32)
    if rows.ndim == 1:
        rows = rows.reshape(-1, 1) if rows.size else rows.reshape(0, 0)
    d = rows.shape[1]
    with open(out_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["class_id", "provenance"] + [f"f{i}" for i in range(d)])
        for row, lab, prov in zip(rows, labels, provenance):
            writer.writerow([lab, prov] + [repr(float(x)) for x in row])
