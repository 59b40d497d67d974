"""Contrastive losses over quote embeddings, MoCo machinery, training loop.

Loss forms, with sim = cosine similarity, temperature tau, batch size N:

* in-batch loss (dropout positives):
  mean_i -log( e^{sim(h_i, p_i)/tau} / sum_j e^{sim(h_i, p_j)/tau} )
* hard-negative loss (mined positive and negative per sample):
  mean_i -log( e^{sim(h_i, p_i)/tau}
               / sum_j [ e^{sim(h_i, p_j)/tau} + e^{sim(h_i, n_j)/tau} ] )
  The denominator sum runs over all j including i, so the anchor's own
  negative term is present.

Every loss returns analytic gradients with respect to all participating
embeddings, so the training loop and the finite-difference checks share one
code path.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, asdict

import numpy as np

from . import mining
from ._stable import stable_seed
from .encoder import Encoder
from .errors import ConfigError
from .optim import Adam

POSITIVE_DROPOUT = "dropout"
POSITIVE_MINED = "mined"

VARIANT_DROPOUT_POSITIVE = "simcse_positive_with_hard_negative"
VARIANT_NO_HARD_NEGATIVE = "quotecse_positive_no_hard_negative"

LOSS_KINDS = ("simcse", "quotecse", "ablation1", "ablation2")


@dataclass
class ContrastiveBatch:
    """Embeddings for one training step.

    ``positive_kind`` records how the positives were built: "dropout" for
    dropout-pair twins of the anchors, "mined" for body-quote positives.
    Negatives are present exactly for the hard-negative loss family.
    """

    anchors: np.ndarray
    positives: np.ndarray
    negatives: np.ndarray | None = None
    temperature: float = 0.05
    positive_kind: str = POSITIVE_DROPOUT

    def __post_init__(self):
        self.anchors = np.asarray(self.anchors, dtype=np.float64)
        self.positives = np.asarray(self.positives, dtype=np.float64)
        if self.anchors.ndim != 2 or self.anchors.shape[0] < 1:
            raise ValueError("anchors must be a non-empty (N, d) array")
        if self.positives.shape != self.anchors.shape:
            raise ValueError("positives must match anchors in shape")
        if self.negatives is not None:
            self.negatives = np.asarray(self.negatives, dtype=np.float64)
            if self.negatives.shape != self.anchors.shape:
                raise ValueError("negatives must match anchors in shape")
        if self.temperature <= 0:
            raise ValueError("temperature must be positive")
        if self.positive_kind not in (POSITIVE_DROPOUT, POSITIVE_MINED):
            raise ValueError(f"unknown positive_kind {self.positive_kind!r}")

    @property
    def size(self) -> int:
        return self.anchors.shape[0]


@dataclass
class LossResult:
    value: float
    per_sample: np.ndarray
    anchor_grads: np.ndarray
    positive_grads: np.ndarray
    negative_grads: np.ndarray | None = None


def _normalize_rows(M: np.ndarray):
    norms = np.linalg.norm(M, axis=1)
    if np.any(norms == 0.0):
        raise ValueError("zero vector has no cosine similarity")
    return M / norms[:, None], norms


def _sim_block(A: np.ndarray, B: np.ndarray):
    """Cosine matrix S[i, j] = sim(A_i, B_j) plus what backward needs."""
    A_hat, a_norms = _normalize_rows(A)
    B_hat, b_norms = _normalize_rows(B)
    return A_hat @ B_hat.T, (A_hat, a_norms, B_hat, b_norms)


def _sim_backward(G: np.ndarray, S: np.ndarray, cache):
    """Gradients of sum(G * S) w.r.t. the raw (unnormalized) A and B rows."""
    A_hat, a_norms, B_hat, b_norms = cache
    GS = G * S
    dA = (G @ B_hat - GS.sum(axis=1, keepdims=True) * A_hat) / a_norms[:, None]
    dB = (G.T @ A_hat - GS.sum(axis=0)[:, None] * B_hat) / b_norms[:, None]
    return dA, dB


def _info_nce(anchors, column_blocks, temperature):
    """Shared InfoNCE core.

    ``column_blocks`` is a list of (S, cache, wants_grad) whose S matrices
    are concatenated column-wise into the logit table; the positive term is
    the diagonal of the first block. Returns per-sample losses and the
    softmax weights split back per block.
    """
    logits = np.concatenate([S for S, _, _ in column_blocks], axis=1) / temperature
    row_max = logits.max(axis=1, keepdims=True)
    exp_shifted = np.exp(logits - row_max)
    denom = exp_shifted.sum(axis=1)
    log_denom = np.log(denom) + row_max[:, 0]
    positive_logit = np.diagonal(column_blocks[0][0]) / temperature
    per_sample = log_denom - positive_logit
    weights = exp_shifted / denom[:, None]
    split_points = np.cumsum([S.shape[1] for S, _, _ in column_blocks])[:-1]
    return per_sample, np.split(weights, split_points, axis=1)


def _in_batch_loss(anchors, positives, temperature):
    S, cache = _sim_block(anchors, positives)
    n = anchors.shape[0]
    per_sample, (W,) = _info_nce(anchors, [(S, cache, True)], temperature)
    G = (W - np.eye(n)) / (n * temperature)
    dA, dP = _sim_backward(G, S, cache)
    return LossResult(float(per_sample.mean()), per_sample, dA, dP)


def _hard_negative_loss(anchors, positives, negatives, temperature):
    S_pos, cache_pos = _sim_block(anchors, positives)
    S_neg, cache_neg = _sim_block(anchors, negatives)
    n = anchors.shape[0]
    per_sample, (W_pos, W_neg) = _info_nce(
        anchors, [(S_pos, cache_pos, True), (S_neg, cache_neg, True)], temperature
    )
    G_pos = (W_pos - np.eye(n)) / (n * temperature)
    G_neg = W_neg / (n * temperature)
    dA_pos, dP = _sim_backward(G_pos, S_pos, cache_pos)
    dA_neg, dN = _sim_backward(G_neg, S_neg, cache_neg)
    return LossResult(float(per_sample.mean()), per_sample, dA_pos + dA_neg, dP, dN)


def simcse_loss(batch: ContrastiveBatch) -> LossResult:
    """In-batch contrastive loss over dropout-pair positives."""
    if batch.negatives is not None:
        raise ValueError("this loss takes no hard negatives")
    if batch.positive_kind != POSITIVE_DROPOUT:
        raise ValueError("positives must be dropout pairs for this loss")
    return _in_batch_loss(batch.anchors, batch.positives, batch.temperature)


def quotecse_loss(batch: ContrastiveBatch) -> LossResult:
    """Hard-negative contrastive loss over mined positive/negative quotes."""
    if batch.negatives is None:
        raise ValueError("hard negatives are required")
    if batch.positive_kind != POSITIVE_MINED:
        raise ValueError("positives must be mined quotes for this loss")
    return _hard_negative_loss(batch.anchors, batch.positives, batch.negatives, batch.temperature)


def ablation_loss(batch: ContrastiveBatch, variant: str) -> LossResult:
    """Single-component ablations of the hard-negative loss.

    ``simcse_positive_with_hard_negative`` keeps mined negatives but swaps
    the mined positive for the anchor's dropout twin;
    ``quotecse_positive_no_hard_negative`` keeps the mined positive and
    drops the hard-negative terms entirely.
    """
    if variant == VARIANT_DROPOUT_POSITIVE:
        if batch.negatives is None:
            raise ValueError("variant keeps hard negatives; batch has none")
        if batch.positive_kind != POSITIVE_DROPOUT:
            raise ValueError("variant needs dropout-pair positives")
        return _hard_negative_loss(batch.anchors, batch.positives, batch.negatives, batch.temperature)
    if variant == VARIANT_NO_HARD_NEGATIVE:
        if batch.negatives is not None:
            raise ValueError("variant drops hard negatives; batch carries some")
        if batch.positive_kind != POSITIVE_MINED:
            raise ValueError("variant needs mined positives")
        return _in_batch_loss(batch.anchors, batch.positives, batch.temperature)
    raise ValueError(f"unknown ablation variant {variant!r}")


def moco_loss(batch: ContrastiveBatch, queue: np.ndarray | None) -> LossResult:
    """Batch loss with queued keys appended to every denominator.

    Queue entries are detached: they receive no gradient but repel anchors.
    With an empty queue this reduces exactly to the corresponding base loss.
    """
    queue = None if queue is None or len(queue) == 0 else np.asarray(queue, dtype=np.float64)
    n = batch.size
    blocks = []
    S_pos, cache_pos = _sim_block(batch.anchors, batch.positives)
    blocks.append((S_pos, cache_pos, True))
    if batch.negatives is not None:
        S_neg, cache_neg = _sim_block(batch.anchors, batch.negatives)
        blocks.append((S_neg, cache_neg, True))
    if queue is not None:
        S_q, cache_q = _sim_block(batch.anchors, queue)
        blocks.append((S_q, cache_q, False))
    per_sample, weight_blocks = _info_nce(batch.anchors, blocks, batch.temperature)

    G_pos = (weight_blocks[0] - np.eye(n)) / (n * batch.temperature)
    dA, dP = _sim_backward(G_pos, S_pos, cache_pos)
    dN = None
    next_block = 1
    if batch.negatives is not None:
        G_neg = weight_blocks[next_block] / (n * batch.temperature)
        dA_neg, dN = _sim_backward(G_neg, S_neg, cache_neg)
        dA = dA + dA_neg
        next_block += 1
    if queue is not None:
        G_q = weight_blocks[next_block] / (n * batch.temperature)
        dA_q, _ = _sim_backward(G_q, S_q, cache_q)
        dA = dA + dA_q
    return LossResult(float(per_sample.mean()), per_sample, dA, dP, dN)


@dataclass
class MocoState:
    """Momentum key encoder weights plus the FIFO queue of past keys."""

    key_params: dict[str, np.ndarray]
    queue: deque
    momentum: float = 0.999

    @classmethod
    def initialize(cls, enc: Encoder, queue_size: int = 40, momentum: float = 0.999) -> "MocoState":
        if queue_size < 1:
            raise ValueError("queue_size must be at least 1")
        if not 0 < momentum <= 1:
            raise ValueError("momentum must be in (0, 1]")
        return cls(enc.head.copy_params(), deque(maxlen=queue_size), momentum)

    @property
    def capacity(self) -> int:
        return self.queue.maxlen

    def queue_array(self) -> np.ndarray | None:
        if not self.queue:
            return None
        return np.stack(list(self.queue))

    def key_encoder(self, template: Encoder) -> Encoder:
        key_enc = template.clone()
        key_enc.head = type(template.head)({k: v.copy() for k, v in self.key_params.items()})
        return key_enc


def moco_step(
    state: MocoState,
    queries: np.ndarray,
    positive_texts,
    negative_texts,
    query_enc: Encoder,
    temperature: float = 0.05,
    positive_kind: str = POSITIVE_MINED,
) -> tuple[LossResult, MocoState]:
    """One momentum-contrast step.

    Keys are encoded by the key encoder held in ``state`` (inference mode);
    the queue joins every denominator; afterwards the key weights move to
    ``m * key + (1 - m) * query`` and the positive keys are enqueued with
    FIFO eviction. Only the queries receive gradients.
    """
    key_enc = state.key_encoder(query_enc)
    keys_pos = key_enc.encode_batch(positive_texts)
    keys_neg = key_enc.encode_batch(negative_texts) if negative_texts is not None else None
    batch = ContrastiveBatch(
        anchors=queries,
        positives=keys_pos,
        negatives=keys_neg,
        temperature=temperature,
        positive_kind=positive_kind,
    )
    loss = moco_loss(batch, state.queue_array())

    m = state.momentum
    new_key_params = {
        name: m * state.key_params[name] + (1.0 - m) * query_enc.head.params[name]
        for name in state.key_params
    }
    new_queue = deque(state.queue, maxlen=state.queue.maxlen)
    for row in keys_pos:
        new_queue.append(row.copy())
    return loss, MocoState(new_key_params, new_queue, m)


@dataclass
class TrainConfig:
    loss: str = "quotecse"
    temperature: float = 0.05
    batch_size: int = 16
    learning_rate: float = 0.01
    max_epochs: int = 10
    seed: int = 0
    moco: bool = False
    queue_size: int = 40
    momentum: float = 0.999
    reassign: bool = True
    redraw_negative: bool = True

    def validate(self) -> None:
        if self.loss not in LOSS_KINDS:
            raise ConfigError(f"loss must be one of {LOSS_KINDS}, got {self.loss!r}")
        if self.temperature <= 0:
            raise ConfigError("temperature must be positive")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be at least 1")
        if self.learning_rate < 0:
            raise ConfigError("learning_rate must be non-negative")
        if self.max_epochs < 0:
            raise ConfigError("max_epochs must be non-negative")
        if self.queue_size < 1:
            raise ConfigError("queue_size must be at least 1")
        if not 0 < self.momentum <= 1:
            raise ConfigError("momentum must be in (0, 1]")
        if self.moco and self.loss not in ("simcse", "quotecse"):
            raise ConfigError("moco applies to the simcse and quotecse losses only")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown training config keys: {', '.join(unknown)}")
        config = cls(**data)
        config.validate()
        return config


@dataclass
class CurvePoint:
    step: int
    train_loss: float
    val_loss: float | None = None


@dataclass
class TrainResult:
    encoder: Encoder
    curve: list[CurvePoint]
    best_epoch: int | None
    best_val_loss: float | None


def _uses_mined_samples(kind: str) -> bool:
    return kind in ("quotecse", "ablation1", "ablation2")


def _encode_for_loss(enc, triplets, kind, temperature, seed_parts, training):
    """Encode one batch of triplets for the given loss kind.

    Returns (batch, caches) where caches maps role -> backward cache (only
    for roles that should receive parameter gradients). Dropout is active
    only on the anchor/dropout-twin passes of the dropout-positive losses.
    """
    anchor_texts = [t.anchor.text for t in triplets]
    caches = {}
    if kind in ("simcse", "ablation1"):
        seeds_a = [stable_seed("dropout-a", *seed_parts, i) for i in range(len(triplets))]
        seeds_b = [stable_seed("dropout-b", *seed_parts, i) for i in range(len(triplets))]
        anchors, cache_a = enc.encode_training(anchor_texts, seeds_a)
        positives, cache_p = enc.encode_training(anchor_texts, seeds_b)
        positive_kind = POSITIVE_DROPOUT
    else:
        anchors, cache_a = enc.encode_training(anchor_texts)
        positives, cache_p = enc.encode_training([t.positive.text for t in triplets])
        positive_kind = POSITIVE_MINED
    caches["anchors"] = cache_a
    caches["positives"] = cache_p

    negatives = None
    if kind in ("quotecse", "ablation1"):
        negatives, cache_n = enc.encode_training([t.negative.text for t in triplets])
        caches["negatives"] = cache_n

    batch = ContrastiveBatch(anchors, positives, negatives, temperature, positive_kind)
    return batch, (caches if training else {})


def _loss_for_kind(batch: ContrastiveBatch, kind: str) -> LossResult:
    if kind == "simcse":
        return simcse_loss(batch)
    if kind == "quotecse":
        return quotecse_loss(batch)
    if kind == "ablation1":
        return ablation_loss(batch, VARIANT_DROPOUT_POSITIVE)
    if kind == "ablation2":
        return ablation_loss(batch, VARIANT_NO_HARD_NEGATIVE)
    raise ConfigError(f"unknown loss kind {kind!r}")


def _accumulate_head_grads(enc, caches, loss: LossResult) -> dict[str, np.ndarray]:
    grads = {name: np.zeros_like(p) for name, p in enc.head.params.items()}
    role_grads = {
        "anchors": loss.anchor_grads,
        "positives": loss.positive_grads,
        "negatives": loss.negative_grads,
    }
    for role, cache in caches.items():
        upstream = role_grads[role]
        if upstream is None:
            continue
        for name, g in enc.head.backward(cache, upstream).items():
            grads[name] += g
    return grads


def _validation_loss(enc, val_triplets, config: TrainConfig) -> float:
    total = 0.0
    count = 0
    for start in range(0, len(val_triplets), config.batch_size):
        chunk = val_triplets[start : start + config.batch_size]
        batch, _ = _encode_for_loss(
            enc, chunk, config.loss, config.temperature, ("val", start), training=False
        )
        result = _loss_for_kind(batch, config.loss)
        total += result.value * len(chunk)
        count += len(chunk)
    return total / count


def train(
    triplets,
    enc: Encoder,
    config: TrainConfig,
    val_triplets=None,
    articles: dict | None = None,
) -> TrainResult:
    """Train the encoder's projection head on mined triplets.

    Each step optionally re-runs sample assignment with the current encoder
    (``articles`` must then map article id -> Article), encodes the batch for
    the configured loss, and applies one Adam update. Deterministic given
    the config seed. When a validation set is supplied, the weights of the
    best-validation epoch are restored before returning.
    """
    config.validate()
    triplets = list(triplets)
    if not triplets:
        raise ValueError("cannot train on an empty triplet set")

    reassigning = config.reassign and articles is not None and _uses_mined_samples(config.loss)
    if reassigning:
        missing = sorted({t.article_id for t in triplets} - set(articles))
        if missing:
            raise ValueError(f"reassignment needs articles for: {', '.join(missing[:5])}")

    optimizer = Adam(enc.head.params, lr=config.learning_rate)
    moco_state = (
        MocoState.initialize(enc, config.queue_size, config.momentum) if config.moco else None
    )

    curve: list[CurvePoint] = []
    best_epoch = None
    best_val = None
    best_params = None
    global_step = 0

    for epoch in range(config.max_epochs):
        order = np.random.default_rng(stable_seed("epoch-order", epoch, seed=config.seed)).permutation(
            len(triplets)
        )
        for start in range(0, len(triplets), config.batch_size):
            batch_triplets = [triplets[i] for i in order[start : start + config.batch_size]]
            if reassigning:
                pairs = [(articles[t.article_id], t) for t in batch_triplets]
                batch_triplets = mining.reassign_batch(
                    pairs, enc, global_step, redraw_negative=config.redraw_negative
                )
                if not batch_triplets:
                    continue

            batch, caches = _encode_for_loss(
                enc,
                batch_triplets,
                config.loss,
                config.temperature,
                (config.seed, global_step),
                training=True,
            )
            if moco_state is not None:
                positive_texts = (
                    [t.anchor.text for t in batch_triplets]
                    if config.loss == "simcse"
                    else [t.positive.text for t in batch_triplets]
                )
                negative_texts = (
                    [t.negative.text for t in batch_triplets] if config.loss == "quotecse" else None
                )
                loss, moco_state = moco_step(
                    moco_state,
                    batch.anchors,
                    positive_texts,
                    negative_texts,
                    enc,
                    temperature=config.temperature,
                    positive_kind=batch.positive_kind,
                )
                caches = {"anchors": caches["anchors"]}  # keys carry no gradient
            else:
                loss = _loss_for_kind(batch, config.loss)

            optimizer.step(_accumulate_head_grads(enc, caches, loss))
            curve.append(CurvePoint(global_step, loss.value))
            global_step += 1

        if val_triplets:
            val_loss = _validation_loss(enc, list(val_triplets), config)
            if curve:
                curve[-1].val_loss = val_loss
            if best_val is None or val_loss < best_val:
                best_val = val_loss
                best_epoch = epoch
                best_params = enc.head.copy_params()

    if best_params is not None:
        enc.head = type(enc.head)(best_params)
    return TrainResult(enc, curve, best_epoch, best_val)
