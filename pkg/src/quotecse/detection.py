"""Contextomized-vs-modified classification over embedding-pair features.

The headline quote embedding u is paired with v, the embedding of the most
similar body quote; the classifier scores the concatenation
(u, v, |u - v|, u * v) with a single 64-unit ReLU hidden layer and a sigmoid
output. Encoder weights stay frozen throughout (probe-style evaluation).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict

import numpy as np

from .corpus import DetectionExample, Quote
from .encoder import Embedding, cosine_sim, encode_texts
from .errors import ConfigError
from .optim import Adam

HIDDEN_DIM = 64


@dataclass
class FeatureVector:
    """concat(u, v, |u - v|, u * v); length is exactly 4 * d."""

    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1 or self.values.shape[0] % 4 != 0:
            raise ValueError("feature vector length must be a multiple of 4")

    @property
    def d(self) -> int:
        return self.values.shape[0] // 4


def build_features(u, v) -> FeatureVector:
    u = u.values if isinstance(u, Embedding) else np.asarray(u, dtype=np.float64)
    v = v.values if isinstance(v, Embedding) else np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return FeatureVector(np.concatenate([u, v, np.abs(u - v), u * v]))


def select_body_quote(u_quote: Quote, body_quotes, enc) -> tuple[Quote, Embedding, float]:
    """Most similar body quote to the headline quote under the encoder.

    Ties go to the lowest index. Returns the quote, its embedding, and the
    cosine similarity.
    """
    if not body_quotes:
        raise ValueError("body_quotes must be non-empty")
    embeddings = encode_texts(enc, [u_quote.text] + [q.text for q in body_quotes])
    u_emb, body_embs = embeddings[0], embeddings[1:]
    sims = [cosine_sim(u_emb, row) for row in body_embs]
    best = int(np.argmax(sims))
    return body_quotes[best], Embedding(body_embs[best]), float(sims[best])


def _sigmoid(z):
    out = np.empty_like(z)
    positive = z >= 0
    out[positive] = 1.0 / (1.0 + np.exp(-z[positive]))
    ez = np.exp(z[~positive])
    out[~positive] = ez / (1.0 + ez)
    return out


class ClassifierParams:
    """Weights of the fixed 4d -> 64 -> 1 MLP head."""

    PARAM_NAMES = ("W1", "b1", "W2", "b2")

    def __init__(self, params: dict[str, np.ndarray]):
        self.params = {name: np.asarray(params[name], dtype=np.float64) for name in self.PARAM_NAMES}

    @classmethod
    def create(cls, input_dim: int, seed: int = 0) -> "ClassifierParams":
        rng = np.random.default_rng(seed)
        return cls(
            {
                "W1": rng.normal(0.0, np.sqrt(2.0 / input_dim), (input_dim, HIDDEN_DIM)),
                "b1": np.zeros(HIDDEN_DIM),
                "W2": rng.normal(0.0, np.sqrt(2.0 / HIDDEN_DIM), (HIDDEN_DIM, 1)),
                "b2": np.zeros(1),
            }
        )

    @property
    def input_dim(self) -> int:
        return self.params["W1"].shape[0]

    def copy(self) -> "ClassifierParams":
        return ClassifierParams({name: p.copy() for name, p in self.params.items()})

    def forward(self, features: np.ndarray):
        X = np.atleast_2d(np.asarray(features, dtype=np.float64))
        if X.shape[1] != self.input_dim:
            raise ValueError(f"feature dim {X.shape[1]} does not match classifier input {self.input_dim}")
        pre = X @ self.params["W1"] + self.params["b1"]
        hidden = np.maximum(pre, 0.0)
        logits = (hidden @ self.params["W2"] + self.params["b2"])[:, 0]
        return _sigmoid(logits), (X, pre, hidden)

    def backward(self, cache, d_logits: np.ndarray) -> dict[str, np.ndarray]:
        X, pre, hidden = cache
        d_logits = d_logits[:, None]
        grads = {"W2": hidden.T @ d_logits, "b2": d_logits.sum(axis=0)}
        d_hidden = (d_logits @ self.params["W2"].T) * (pre > 0)
        grads["W1"] = X.T @ d_hidden
        grads["b1"] = d_hidden.sum(axis=0)
        return grads

    def save(self, path) -> None:
        np.savez(path, input_dim=np.array(self.input_dim), **self.params)

    @classmethod
    def load(cls, path) -> "ClassifierParams":
        with np.load(path, allow_pickle=False) as data:
            return cls({name: data[name] for name in cls.PARAM_NAMES})


def classify(features, params: ClassifierParams) -> float:
    """Probability that the headline quote is contextomized."""
    values = features.values if isinstance(features, FeatureVector) else features
    probs, _ = params.forward(values)
    return float(probs[0])


@dataclass
class ClassifierConfig:
    learning_rate: float = 0.01
    batch_size: int = 16
    max_epochs: int = 10
    seed: int = 0
    val_fraction: float = 0.2

    def validate(self) -> None:
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be non-negative")
        if not 0 <= self.val_fraction < 1:
            raise ConfigError("val_fraction must be in [0, 1)")

    def to_dict(self) -> dict:
        return asdict(self)


def _bce_and_grad(probs: np.ndarray, labels: np.ndarray):
    eps = 1e-12
    clipped = np.clip(probs, eps, 1 - eps)
    loss = -(labels * np.log(clipped) + (1 - labels) * np.log(1 - clipped)).mean()
    d_logits = (probs - labels) / labels.shape[0]
    return loss, d_logits


def train_classifier(features, labels, config: ClassifierConfig | None = None) -> ClassifierParams:
    """Fit the probe classifier with Adam on binary cross-entropy.

    Deterministic under the config seed. A held-out fraction of the training
    data selects the best-epoch weights; with ``val_fraction=0`` the final
    weights are returned.
    """
    config = config or ClassifierConfig()
    config.validate()
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if features.ndim != 2 or features.shape[0] != labels.shape[0]:
        raise ValueError("features must be (n, dim) aligned with labels")
    classes = np.unique(labels)
    if not np.array_equal(classes, [0, 1]):
        raise ValueError("training data must contain both classes")

    rng = np.random.default_rng(config.seed)
    order = rng.permutation(features.shape[0])
    n_val = int(config.val_fraction * features.shape[0])
    val_idx, fit_idx = order[:n_val], order[n_val:]
    if len(np.unique(labels[fit_idx])) < 2:  # tiny sets: fall back to fitting on everything
        fit_idx, val_idx = order, order[:0]

    params = ClassifierParams.create(features.shape[1], seed=config.seed)
    optimizer = Adam(params.params, lr=config.learning_rate)
    best = None
    best_val = np.inf

    for epoch in range(config.max_epochs):
        epoch_order = rng.permutation(fit_idx)
        for start in range(0, len(epoch_order), config.batch_size):
            rows = epoch_order[start : start + config.batch_size]
            probs, cache = params.forward(features[rows])
            _, d_logits = _bce_and_grad(probs, labels[rows])
            optimizer.step(params.backward(cache, d_logits))
        if len(val_idx):
            val_probs, _ = params.forward(features[val_idx])
            val_loss, _ = _bce_and_grad(val_probs, labels[val_idx])
            if val_loss < best_val:
                best_val = val_loss
                best = params.copy()

    return best if best is not None else params


@dataclass
class DetectionResult:
    label: int
    probability: float
    matched_quote: Quote
    similarity: float


def featurize_example(example: DetectionExample, enc):
    """(features, matched quote, similarity) for one example."""
    matched, v_emb, sim = select_body_quote(example.headline_quote, example.body_quotes, enc)
    u_emb = enc.encode(example.headline_quote.text)
    return build_features(u_emb, v_emb), matched, sim


def detect(example: DetectionExample, enc, params: ClassifierParams) -> DetectionResult:
    """Full detection pipeline; label is 1 iff probability exceeds 0.5."""
    features, matched, sim = featurize_example(example, enc)
    probability = classify(features, params)
    return DetectionResult(
        label=1 if probability > 0.5 else 0,
        probability=probability,
        matched_quote=matched,
        similarity=sim,
    )


def prediction_record(example: DetectionExample, result: DetectionResult) -> dict:
    return {
        "article_id": example.article_id,
        "label": result.label,
        "probability": result.probability,
        "matched_quote": result.matched_quote.text,
        "similarity": result.similarity,
    }


def write_predictions(path, rows) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for row in rows:
            handle.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
            handle.write("\n")
            count += 1
    return count
