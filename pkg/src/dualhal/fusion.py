"""Instance-view hallucination: semantic fusion network and attention utility.

The fusion network is a single fully-connected layer over the concatenated
visual + semantic vector, merged back into the visual feature through a
weighted tanh residual and a final ReLU. Training is plain mini-batch SGD
on the mean squared distance to the raw-space class prototype, with
manually derived gradients (the model is small enough that autograd would
be overkill).
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .banks import FeatureBank, SemanticBank, Split
from .stats import BaseClassStats

_MAGIC_FUSION = b"FSFN"
_FUSION_VERSION = 1


class FusionDivergenceError(RuntimeError):
    pass


@dataclass
class FusionNetwork:
    W: np.ndarray        # (d, d+m)
    b: np.ndarray        # (d,)
    lam: float
    d: int
    m: int

    @classmethod
    def init(cls, d: int, m: int, lam: float, rng: np.random.Generator) -> "FusionNetwork":
        bound = 1.0 / np.sqrt(d + m)
        W = rng.uniform(-bound, bound, size=(d, d + m))
        return cls(W=W, b=np.zeros(d), lam=float(lam), d=d, m=m)


@dataclass(frozen=True)
class FusionTrainConfig:
    iterations: int = 100_000
    batch_size: int = 5
    learning_rate: float = 0.01
    seed: int = 0

    def __post_init__(self):
        if self.iterations <= 0 or self.batch_size <= 0 or self.learning_rate <= 0:
            raise ValueError("iterations, batch_size, learning_rate must be positive")


def fuse_forward(net: FusionNetwork, f: np.ndarray, v: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if f.shape != (net.d,) or v.shape != (net.m,):
        raise ValueError(f"dimension mismatch: f{f.shape}, v{v.shape} vs d={net.d}, m={net.m}")
    h = net.W @ np.concatenate([f, v]) + net.b
    return np.maximum(f + net.lam * np.tanh(h), 0.0)


def _forward_batch(net, F, V):
    Z = np.concatenate([F, V], axis=1)          # (B, d+m)
    H = Z @ net.W.T + net.b                     # (B, d)
    T = np.tanh(H)
    pre = F + net.lam * T
    return Z, T, pre, np.maximum(pre, 0.0)


def fusion_loss(net: FusionNetwork, batch) -> float:
    """Mean squared distance between fused outputs and raw-space prototypes."""
    if len(batch) == 0:
        raise ValueError("empty batch")
    F = np.asarray([f for f, _, _ in batch], dtype=np.float64)
    V = np.asarray([v for _, v, _ in batch], dtype=np.float64)
    M = np.asarray([mu for _, _, mu in batch], dtype=np.float64)
    _, _, _, out = _forward_batch(net, F, V)
    diff = out - M
    return float(np.mean(np.sum(diff * diff, axis=1)))


def _loss_and_grads(net, F, V, M):
    Z, T, pre, out = _forward_batch(net, F, V)
    diff = out - M
    loss = float(np.mean(np.sum(diff * diff, axis=1)))
    # ReLU subgradient at 0 taken as 0.
    g_pre = (2.0 / F.shape[0]) * diff * (pre > 0)
    g_h = net.lam * (1.0 - T * T) * g_pre
    return loss, g_h.T @ Z, g_h.sum(axis=0)


def train_fusion(
    bank: FeatureBank,
    semantics: SemanticBank,
    raw_stats: BaseClassStats,
    cfg: FusionTrainConfig,
    lam: float,
) -> FusionNetwork:
    """SGD over the base split; deterministic given cfg.seed."""
    feats, vecs, targets = [], [], []
    for c in bank.classes:
        if c.split != Split.BASE:
            continue
        if c.class_id not in semantics.entries:
            raise KeyError(f"missing semantic vector for base class {c.class_id!r}")
        rows = np.asarray(c.features, dtype=np.float64)
        feats.append(rows)
        vecs.append(np.tile(np.asarray(semantics.entries[c.class_id], dtype=np.float64),
                            (rows.shape[0], 1)))
        targets.append(np.tile(raw_stats.mu[c.class_id], (rows.shape[0], 1)))
    if not feats:
        raise ValueError("base split is empty")
    F_all = np.concatenate(feats)
    V_all = np.concatenate(vecs)
    M_all = np.concatenate(targets)

    # Every 10th sample is held out to detect divergence: with the bounded
    # tanh residual the loss never reaches inf, so a runaway learning rate
    # shows up as held-out regression instead.
    held = np.zeros(F_all.shape[0], dtype=bool)
    held[::10] = True
    if held.all() or not held.any():
        held[:] = False
        held[0] = True
    F_tr, V_tr, M_tr = F_all[~held], V_all[~held], M_all[~held]
    F_ho, V_ho, M_ho = F_all[held], V_all[held], M_all[held]

    def holdout_loss(n):
        _, _, _, out = _forward_batch(n, F_ho, V_ho)
        return float(np.mean(np.sum((out - M_ho) ** 2, axis=1)))

    rng = np.random.default_rng(cfg.seed)
    net = FusionNetwork.init(F_all.shape[1], V_all.shape[1], lam, rng)
    initial = holdout_loss(net)
    for step in range(cfg.iterations):
        idx = rng.integers(0, F_tr.shape[0], size=cfg.batch_size)
        loss, gW, gb = _loss_and_grads(net, F_tr[idx], V_tr[idx], M_tr[idx])
        if not np.isfinite(loss):
            raise FusionDivergenceError(
                f"divergence at step {step}; try a lower learning rate"
            )
        net.W -= cfg.learning_rate * gW
        net.b -= cfg.learning_rate * gb
    final = holdout_loss(net)
    if not np.isfinite(final) or final > 1.05 * initial:
        raise FusionDivergenceError(
            f"divergence: held-out loss rose from {initial:.4g} to {final:.4g}; "
            "try a lower learning rate"
        )
    return net


def hallucinate_support(net: FusionNetwork, support: np.ndarray, labels, semantics: SemanticBank):
    """One hallucinated feature per support row, label preserved."""
    out_rows, out_labels = [], []
    for row, cid in zip(np.asarray(support, dtype=np.float64), labels):
        if cid not in semantics.entries:
            raise KeyError(f"missing semantic vector for class {cid!r}")
        out_rows.append(fuse_forward(net, row, np.asarray(semantics.entries[cid], dtype=np.float64)))
        out_labels.append(cid)
    return np.asarray(out_rows), out_labels


def apply_attention(x: np.ndarray, attn: np.ndarray, t: float) -> np.ndarray:
    """Emphasize image regions: multiply each channel by (map**t + 1)."""
    x = np.asarray(x, dtype=np.float64)
    attn = np.asarray(attn, dtype=np.float64)
    if t <= 0:
        raise ValueError("t must be positive")
    if x.shape[:2] != attn.shape:
        raise ValueError(f"shape mismatch: image {x.shape} vs map {attn.shape}")
    if np.any(attn < 0) or np.any(attn > 1):
        raise ValueError("attention map values must lie in [0, 1]")
    weight = np.power(attn, t) + 1.0
    return x * weight[:, :, None] if x.ndim == 3 else x * weight


def save_fusion(net: FusionNetwork, path):
    with open(path, "wb") as fh:
        fh.write(_MAGIC_FUSION)
        fh.write(struct.pack("<IIIf", _FUSION_VERSION, net.d, net.m, net.lam))
        fh.write(np.ascontiguousarray(net.W, dtype="<f4").tobytes())
        fh.write(np.ascontiguousarray(net.b, dtype="<f4").tobytes())


def load_fusion(path) -> FusionNetwork:
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:4] != _MAGIC_FUSION:
        raise ValueError(f"unrecognized format: bad magic in {path}")
    version, d, m, lam = struct.unpack("<IIIf", data[4:20])
    if version != _FUSION_VERSION:
        raise ValueError(f"unsupported fusion network version {version}")
    body = np.frombuffer(data[20:], dtype="<f4")
    if body.size != d * (d + m) + d:
        raise ValueError(f"truncated payload in {path}")
    W = body[: d * (d + m)].reshape(d, d + m).astype(np.float64)
    b = body[d * (d + m) :].astype(np.float64)
    return FusionNetwork(W=W, b=b, lam=float(lam), d=d, m=m)
