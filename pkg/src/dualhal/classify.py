"""Per-episode multinomial logistic regression with manual gradients."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class ClassifierDivergenceError(RuntimeError):
    pass


@dataclass
class TrainSet:
    rows: np.ndarray          # (M, d)
    labels: np.ndarray        # (M,) int class indices in [0, N)
    n_classes: int
    provenance: list[str]     # per row: support | ivdh | prototype | resampled

    def __post_init__(self):
        self.rows = np.asarray(self.rows, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.n_classes < 2:
            raise ValueError("need at least 2 classes")
        present = set(self.labels.tolist())
        if present != set(range(self.n_classes)):
            raise ValueError(
                f"every class index in [0, {self.n_classes}) must appear; got {sorted(present)}"
            )


@dataclass
class LinearClassifier:
    W: np.ndarray  # (N, d)
    b: np.ndarray  # (N,)
    l2: float


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _loss_and_grads(W, b, X, Y_onehot, l2):
    P = _softmax(X @ W.T + b)
    n = X.shape[0]
    ce = -np.sum(Y_onehot * np.log(np.clip(P, 1e-300, None))) / n
    loss = ce + 0.5 * l2 * float(np.sum(W * W))
    G = (P - Y_onehot) / n
    return loss, G.T @ X + l2 * W, G.sum(axis=0)


def train_classifier(
    ts: TrainSet, l2: float = 1e-3, iters: int = 1000, lr: float = 0.1, seed: int = 0
) -> LinearClassifier:
    """Full-batch gradient descent on L2-regularized mean cross-entropy."""
    n, d = ts.rows.shape
    rng = np.random.default_rng(seed)
    W = rng.normal(0.0, 0.01, size=(ts.n_classes, d))
    b = np.zeros(ts.n_classes)
    Y = np.eye(ts.n_classes)[ts.labels]
    for _ in range(iters):
        loss, gW, gb = _loss_and_grads(W, b, ts.rows, Y, l2)
        if not np.isfinite(loss):
            raise ClassifierDivergenceError("divergence: non-finite training loss")
        W -= lr * gW
        b -= lr * gb
    return LinearClassifier(W=W, b=b, l2=l2)


def predict_proba(clf: LinearClassifier, f: np.ndarray) -> np.ndarray:
    f = np.asarray(f, dtype=np.float64)
    if f.shape[-1] != clf.W.shape[1]:
        raise ValueError(f"dimension mismatch: {f.shape[-1]} vs {clf.W.shape[1]}")
    return _softmax(f @ clf.W.T + clf.b)


def evaluate_episode(clf: LinearClassifier, query: np.ndarray, labels: np.ndarray) -> float:
    """Accuracy of argmax prediction (ties to the lowest class index)."""
    query = np.asarray(query, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if query.shape[0] == 0:
        raise ValueError("empty query set")
    pred = np.argmax(predict_proba(clf, query), axis=1)
    return float(np.mean(pred == labels))
