"""Text encoders: deterministic toy backbone, projection head, cosine similarity.

An encoder maps a sentence to a fixed-dimension vector by featurizing with a
backbone and passing the result through a trainable 2-layer projection head.
The toy backbone (hashed character n-gram counts) is exact and CPU-fast, so
every loss and metric can be tested without an external model. Any object
with ``encode(text, dropout_seed=None) -> Embedding`` and an ``identifier``
string satisfies the encoder interface used by mining and detection.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, asdict, replace

import numpy as np

from ._stable import stable_hash
from .errors import ConfigError, EncoderStateError

TOY = "toy"
EXTERNAL = "external-transformer"


@dataclass
class Embedding:
    """A real vector produced by an encoder; tracks unit-norm status."""

    values: np.ndarray
    normalized: bool = False

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 1:
            raise ValueError("embedding values must be a 1-d vector")
        if self.normalized and abs(np.linalg.norm(self.values) - 1.0) >= 1e-6:
            raise ValueError("embedding flagged normalized but norm differs from 1")

    @property
    def d(self) -> int:
        return self.values.shape[0]


@dataclass
class EncoderConfig:
    backbone: str = TOY
    backbone_dim: int = 256
    projection_hidden_dim: int = 100
    projection_output_dim: int = 100
    dropout_rate: float = 0.1  # used for dropout-pair positive construction
    hash_seed: int = 0
    ngram_sizes: tuple[int, ...] = (1, 2, 3)

    def validate(self) -> None:
        if self.backbone not in (TOY, EXTERNAL):
            raise ConfigError(f"unknown backbone {self.backbone!r}")
        for name in ("backbone_dim", "projection_hidden_dim", "projection_output_dim"):
            if getattr(self, name) <= 0:
                raise ConfigError(f"{name} must be positive")
        if not 0 <= self.dropout_rate < 1:
            raise ConfigError("dropout_rate must be in [0, 1)")
        if not self.ngram_sizes or any(n <= 0 for n in self.ngram_sizes):
            raise ConfigError("ngram_sizes must be positive integers")

    def to_dict(self) -> dict:
        data = asdict(self)
        data["ngram_sizes"] = list(self.ngram_sizes)
        return data

    @classmethod
    def from_dict(cls, data: dict) -> "EncoderConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown encoder config keys: {', '.join(unknown)}")
        data = dict(data)
        if "ngram_sizes" in data:
            data["ngram_sizes"] = tuple(data["ngram_sizes"])
        config = cls(**data)
        config.validate()
        return config


def ngram_bucket(gram: str, size: int, dim: int, hash_seed: int = 0) -> int:
    """Bucket index for one character n-gram; stable across platforms."""
    return stable_hash(f"{size}:{gram}", seed=hash_seed) % dim


def toy_encode_raw(text: str, config: EncoderConfig | None = None) -> Embedding:
    """Hashed character n-gram counts of ``text`` in ``backbone_dim`` buckets.

    This is the toy backbone's featurization, before the projection head.
    """
    cfg = config or EncoderConfig()
    values = np.zeros(cfg.backbone_dim, dtype=np.float64)
    for size in cfg.ngram_sizes:
        for start in range(len(text) - size + 1):
            gram = text[start : start + size]
            values[ngram_bucket(gram, size, cfg.backbone_dim, cfg.hash_seed)] += 1.0
    return Embedding(values)


class ProjectionHead:
    """Two affine layers with a tanh in between: in_dim -> hidden -> out.

    Dropout (inverted, per-row seeded masks) is applied to the hidden
    activation only, and only when mask seeds are supplied.
    """

    PARAM_NAMES = ("W1", "b1", "W2", "b2")

    def __init__(self, params: dict[str, np.ndarray]):
        self.params = {name: np.asarray(params[name], dtype=np.float64) for name in self.PARAM_NAMES}

    @classmethod
    def create(cls, in_dim: int, hidden_dim: int, out_dim: int, seed: int = 0) -> "ProjectionHead":
        rng = np.random.default_rng(seed)
        return cls(
            {
                "W1": rng.normal(0.0, np.sqrt(2.0 / (in_dim + hidden_dim)), (in_dim, hidden_dim)),
                "b1": np.zeros(hidden_dim),
                "W2": rng.normal(0.0, np.sqrt(2.0 / (hidden_dim + out_dim)), (hidden_dim, out_dim)),
                "b2": np.zeros(out_dim),
            }
        )

    @property
    def in_dim(self) -> int:
        return self.params["W1"].shape[0]

    @property
    def out_dim(self) -> int:
        return self.params["W2"].shape[1]

    def param_count(self) -> int:
        return sum(p.size for p in self.params.values())

    def copy_params(self) -> dict[str, np.ndarray]:
        return {name: p.copy() for name, p in self.params.items()}

    def _masks(self, n_rows: int, rate: float, seeds) -> np.ndarray:
        hidden = self.params["b1"].shape[0]
        masks = np.empty((n_rows, hidden))
        for row, seed in enumerate(seeds):
            keep = np.random.default_rng(int(seed)).random(hidden) >= rate
            masks[row] = keep / (1.0 - rate)
        return masks

    def forward(self, X: np.ndarray, dropout_rate: float = 0.0, dropout_seeds=None):
        """Run the head on rows of X; returns (output, cache for backward)."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        pre = X @ self.params["W1"] + self.params["b1"]
        hidden = np.tanh(pre)
        if dropout_seeds is not None and dropout_rate > 0.0:
            masks = self._masks(X.shape[0], dropout_rate, dropout_seeds)
            dropped = hidden * masks
        else:
            masks = None
            dropped = hidden
        out = dropped @ self.params["W2"] + self.params["b2"]
        cache = (X, hidden, dropped, masks)
        return out, cache

    def backward(self, cache, d_out: np.ndarray) -> dict[str, np.ndarray]:
        """Gradients of the head parameters given d(loss)/d(output rows)."""
        X, hidden, dropped, masks = cache
        d_out = np.asarray(d_out, dtype=np.float64)
        grads = {
            "W2": dropped.T @ d_out,
            "b2": d_out.sum(axis=0),
        }
        d_dropped = d_out @ self.params["W2"].T
        d_hidden = d_dropped * masks if masks is not None else d_dropped
        d_pre = d_hidden * (1.0 - hidden**2)
        grads["W1"] = X.T @ d_pre
        grads["b1"] = d_pre.sum(axis=0)
        return grads


class Encoder:
    """Backbone featurizer plus projection head behind one interface."""

    def __init__(self, config: EncoderConfig, head: ProjectionHead | None = None, backbone_fn=None):
        config.validate()
        if config.backbone == EXTERNAL and backbone_fn is None:
            raise ConfigError(
                "external-transformer backbone requires a sentence-vector callable "
                "(backbone_fn); the toy backbone needs none"
            )
        self.config = config
        self.head = head
        self._backbone_fn = backbone_fn
        self._raw_cache: dict[str, np.ndarray] = {}

    @classmethod
    def create(cls, config: EncoderConfig | None = None, seed: int = 0, backbone_fn=None) -> "Encoder":
        config = config or EncoderConfig()
        config.validate()
        head = ProjectionHead.create(
            config.backbone_dim, config.projection_hidden_dim, config.projection_output_dim, seed
        )
        return cls(config, head, backbone_fn)

    @property
    def initialized(self) -> bool:
        return self.head is not None

    @property
    def output_dim(self) -> int:
        self._require_head()
        return self.head.out_dim

    @property
    def identifier(self) -> str:
        """Backbone name plus a digest of the current head weights."""
        self._require_head()
        digest = hashlib.sha256()
        for name in ProjectionHead.PARAM_NAMES:
            digest.update(self.head.params[name].tobytes())
        return f"{self.config.backbone}:{digest.hexdigest()[:12]}"

    def _require_head(self):
        if self.head is None:
            raise EncoderStateError("encoder not initialized: create(), load(), or set a head first")

    def raw_features(self, text: str) -> np.ndarray:
        """L2-normalized backbone features, cached per text."""
        cached = self._raw_cache.get(text)
        if cached is not None:
            return cached
        if self.config.backbone == TOY:
            values = toy_encode_raw(text, self.config).values
        else:
            values = np.asarray(self._backbone_fn(text), dtype=np.float64)
            if values.shape != (self.config.backbone_dim,):
                raise ValueError(
                    f"backbone_fn returned shape {values.shape}, expected ({self.config.backbone_dim},)"
                )
        norm = np.linalg.norm(values)
        if norm > 0:
            values = values / norm
        values.setflags(write=False)
        self._raw_cache[text] = values
        return values

    def encode(self, text: str, dropout_seed: int | None = None) -> Embedding:
        """Projection-head output for one text.

        With ``dropout_seed`` the hidden-layer dropout mask is drawn
        deterministically from the seed (two calls with distinct seeds give a
        dropout positive pair); without it dropout is disabled.
        """
        out, _ = self._encode_rows([text], [dropout_seed] if dropout_seed is not None else None)
        return Embedding(out[0])

    def encode_batch(self, texts, dropout_seeds=None) -> np.ndarray:
        """Inference/training forward without keeping the backward cache."""
        out, _ = self._encode_rows(list(texts), dropout_seeds)
        return out

    def encode_training(self, texts, dropout_seeds=None):
        """Forward pass keeping the cache needed to backpropagate into the head."""
        return self._encode_rows(list(texts), dropout_seeds)

    def _encode_rows(self, texts, dropout_seeds):
        self._require_head()
        if not texts:
            raise ValueError("texts must be non-empty")
        for text in texts:
            if not text:
                raise ValueError("cannot encode empty text")
        if dropout_seeds is not None and len(dropout_seeds) != len(texts):
            raise ValueError("need one dropout seed per text")
        X = np.stack([self.raw_features(text) for text in texts])
        rate = self.config.dropout_rate if dropout_seeds is not None else 0.0
        return self.head.forward(X, rate, dropout_seeds)

    def clone(self) -> "Encoder":
        """Deep copy sharing nothing mutable with the original."""
        self._require_head()
        copy = Encoder(replace(self.config), ProjectionHead(self.head.copy_params()), self._backbone_fn)
        return copy

    def save(self, path) -> None:
        self._require_head()
        np.savez(
            path,
            config=np.array(json.dumps(self.config.to_dict(), sort_keys=True)),
            **self.head.params,
        )

    @classmethod
    def load(cls, path, backbone_fn=None) -> "Encoder":
        with np.load(path, allow_pickle=False) as data:
            config = EncoderConfig.from_dict(json.loads(str(data["config"])))
            head = ProjectionHead({name: data[name] for name in ProjectionHead.PARAM_NAMES})
        return cls(config, head, backbone_fn)


def _as_vector(value) -> np.ndarray:
    if isinstance(value, Embedding):
        return value.values
    return np.asarray(value, dtype=np.float64)


def cosine_sim(a, b) -> float:
    """Cosine similarity of two embeddings (vectors accepted too)."""
    va, vb = _as_vector(a), _as_vector(b)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na, nb = np.linalg.norm(va), np.linalg.norm(vb)
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity undefined for the zero vector")
    return float(va @ vb / (na * nb))


def encode_texts(enc, texts) -> np.ndarray:
    """Stack embeddings for a list of texts from any encoder-like object."""
    batch = getattr(enc, "encode_batch", None)
    if batch is not None:
        return np.asarray(batch(texts), dtype=np.float64)
    return np.stack([_as_vector(enc.encode(text)) for text in texts])
