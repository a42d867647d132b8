"""Binary max-margin linear classifier trained by stochastic subgradient descent.

Minimizes the regularized hinge objective

    (lam / 2) ||w||^2 + (1/n) sum_i max(0, 1 - y_i (w . x_i + b))

with labels y in {+1, -1}. Each epoch visits the examples in a fresh
permutation drawn from numpy's PCG64 seeded with (seed, epoch), so training
is bit-reproducible. The step at global count t uses learning rate
eta = 1 / (lam * t): first w decays by (1 - eta * lam), then, if the decayed
iterate still violates the margin, w gains eta * y * x and the unregularized
bias gains eta * y. The final iterate is returned (no averaging).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import DimensionMismatchError, EmptyClassError, NonFiniteFeatureError
from .features import FeatureVector


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 0.1
    epochs: int = 30
    seed: int = 42

    def __post_init__(self):
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")


@dataclass(frozen=True)
class LinearModel:
    weights: np.ndarray
    bias: float
    lam: float
    final_objective: float
    category: str = ""

    def __post_init__(self):
        arr = np.ascontiguousarray(self.weights, dtype=np.float64)
        if arr.ndim != 1 or not np.all(np.isfinite(arr)):
            raise ValueError("weights must be a finite 1-D vector")
        if self.final_objective < 0:
            raise ValueError("final_objective must be >= 0")
        arr.setflags(write=False)
        object.__setattr__(self, "weights", arr)

    @property
    def dimension(self) -> int:
        return self.weights.shape[0]


def _stack(vectors: list[FeatureVector], dim: int, side: str) -> np.ndarray:
    if not vectors:
        raise EmptyClassError(f"no {side} examples")
    for v in vectors:
        if v.dimension != dim:
            raise DimensionMismatchError(
                f"{side} example {v.image_id!r} has dimension {v.dimension}, expected {dim}"
            )
    x = np.stack([v.values for v in vectors])
    if not np.all(np.isfinite(x)):
        raise NonFiniteFeatureError(f"non-finite values among {side} examples")
    return x


def train(
    positives: list[FeatureVector],
    negatives: list[FeatureVector],
    cfg: TrainConfig = TrainConfig(),
    category: str = "",
) -> LinearModel:
    """Train one binary classifier; positives get label +1, negatives -1."""
    if not positives:
        raise EmptyClassError("no positive examples")
    dim = positives[0].dimension
    x = np.concatenate([_stack(positives, dim, "positive"), _stack(negatives, dim, "negative")])
    y = np.concatenate([np.ones(len(positives)), -np.ones(len(negatives))])
    n = len(y)

    w = np.zeros(dim)
    b = 0.0
    t = 0
    for epoch in range(1, cfg.epochs + 1):
        order = np.random.default_rng([cfg.seed, epoch]).permutation(n)
        for i in order:
            t += 1
            eta = 1.0 / (cfg.lam * t)
            w *= 1.0 - eta * cfg.lam
            if y[i] * (w @ x[i] + b) < 1.0:
                w += eta * y[i] * x[i]
                b += eta * y[i]

    model = LinearModel(weights=w, bias=b, lam=cfg.lam, final_objective=0.0, category=category)
    obj = objective(model, positives, negatives)
    return LinearModel(weights=w, bias=b, lam=cfg.lam, final_objective=obj, category=category)


def score(model: LinearModel, x: FeatureVector) -> float:
    """Decision value w . x + b."""
    if x.dimension != model.dimension:
        raise DimensionMismatchError(
            f"feature dimension {x.dimension} does not match model dimension {model.dimension}"
        )
    return float(model.weights @ x.values + model.bias)


def objective(
    model: LinearModel, positives: list[FeatureVector], negatives: list[FeatureVector]
) -> float:
    """Regularized hinge objective of the model on the given data."""
    dim = model.dimension
    x = np.concatenate([_stack(positives, dim, "positive"), _stack(negatives, dim, "negative")])
    y = np.concatenate([np.ones(len(positives)), -np.ones(len(negatives))])
    margins = y * (x @ model.weights + model.bias)
    hinge = np.maximum(0.0, 1.0 - margins).mean()
    return float(0.5 * model.lam * (model.weights @ model.weights) + hinge)


def save_model(model: LinearModel, path) -> None:
    doc = {
        "category": model.category,
        "lambda": model.lam,
        "bias": model.bias,
        "final_objective": model.final_objective,
        "weights": model.weights.tolist(),
    }
    Path(path).write_text(json.dumps(doc), encoding="utf-8")


def load_model(path) -> LinearModel:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return LinearModel(
        weights=np.array(doc["weights"], dtype=np.float64),
        bias=float(doc["bias"]),
        lam=float(doc["lambda"]),
        final_objective=float(doc["final_objective"]),
        category=str(doc["category"]),
    )
