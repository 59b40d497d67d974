"""Metrics and the repeated-split evaluation harness.

F1 and AUC grade the detection classifier; alignment and uniformity grade
embedding quality; precision@k models a filtering workflow. The harness
repeats a deterministic 8:2 split per seed, trains the probe classifier on
the train side, and reports mean and standard error across seeds.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from ._stable import stable_seed
from .corpus import split_indices
from .detection import ClassifierConfig, featurize_example, train_classifier
from .encoder import Embedding

# Fifteen repetitions of the split process.
DEFAULT_SEEDS = tuple(range(0, 150, 10))


def _as_array(values, name):
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.shape[0] == 0:
        raise ValueError(f"{name} must be a non-empty 1-d sequence")
    return arr


def f1_score(predictions, labels, positive_class: int = 1) -> float:
    """Harmonic mean of precision and recall for the positive class; 0 when
    precision + recall is 0."""
    preds = _as_array(predictions, "predictions")
    gold = _as_array(labels, "labels")
    if preds.shape != gold.shape:
        raise ValueError("predictions and labels must have equal length")
    tp = np.sum((preds == positive_class) & (gold == positive_class))
    fp = np.sum((preds == positive_class) & (gold != positive_class))
    fn = np.sum((preds != positive_class) & (gold == positive_class))
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom > 0 else 0.0


def auc_score(scores, labels) -> float:
    """Probability a random positive outranks a random negative, ties 0.5.

    Computed from tie-averaged ranks (Mann-Whitney U), independent of any
    pairwise enumeration.
    """
    s = _as_array(scores, "scores")
    y = _as_array(labels, "labels")
    if s.shape != y.shape:
        raise ValueError("scores and labels must have equal length")
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    if n_pos == 0 or n_neg == 0:
        raise ValueError("AUC needs both classes present")

    order = np.argsort(s, kind="mergesort")
    ranks = np.empty(len(s))
    i = 0
    while i < len(s):
        j = i
        while j + 1 < len(s) and s[order[j + 1]] == s[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0  # average 1-based rank
        i = j + 1
    u = ranks[y == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def _pair_arrays(pairs):
    xs, ys = [], []
    for x, y in pairs:
        xs.append(x.values if isinstance(x, Embedding) else np.asarray(x, dtype=np.float64))
        ys.append(y.values if isinstance(y, Embedding) else np.asarray(y, dtype=np.float64))
    return np.stack(xs), np.stack(ys)


def alignment(pairs) -> float:
    """Mean squared distance between the embeddings of positive pairs."""
    pairs = list(pairs)
    if not pairs:
        raise ValueError("alignment needs at least one pair")
    X, Y = _pair_arrays(pairs)
    if X.shape != Y.shape:
        raise ValueError("pair members must share dimension")
    return float(((X - Y) ** 2).sum(axis=1).mean())


def uniformity(points, max_pairs: int | None = None, seed: int = 0) -> float:
    """log mean over distinct unordered pairs of exp(-2 ||x - y||^2).

    All pairs are used by default; ``max_pairs`` switches to a seeded sample
    for large sets.
    """
    rows = [p.values if isinstance(p, Embedding) else np.asarray(p, dtype=np.float64) for p in points]
    if len(rows) < 2:
        raise ValueError("uniformity needs at least two points")
    X = np.stack(rows)
    sq_norms = (X**2).sum(axis=1)
    d2 = sq_norms[:, None] + sq_norms[None, :] - 2.0 * (X @ X.T)
    iu, ju = np.triu_indices(len(rows), k=1)
    pair_d2 = np.maximum(d2[iu, ju], 0.0)
    if max_pairs is not None and pair_d2.shape[0] > max_pairs:
        chosen = np.random.default_rng(seed).choice(pair_d2.shape[0], size=max_pairs, replace=False)
        pair_d2 = pair_d2[chosen]
    return float(np.log(np.exp(-2.0 * pair_d2).mean()))


def precision_at_k(scores, labels, k: int) -> float:
    """Fraction of positives among the k highest-scoring items; ties keep
    input order."""
    s = _as_array(scores, "scores")
    y = _as_array(labels, "labels")
    if s.shape != y.shape:
        raise ValueError("scores and labels must have equal length")
    if not 1 <= k <= len(s):
        raise ValueError(f"k must be in [1, {len(s)}], got {k}")
    order = np.argsort(-s, kind="stable")
    return float(y[order[:k]].sum() / k)


def write_precision_curve(path, scores, labels, ks=None, config_hash: str | None = None) -> None:
    """CSV of k, precision rows for a filtering curve."""
    ks = list(ks) if ks is not None else list(range(1, len(list(scores)) + 1))
    with open(path, "w", encoding="utf-8", newline="") as handle:
        if config_hash:
            handle.write(f"# config_hash={config_hash}\n")
        handle.write("k,precision\n")
        for k in ks:
            handle.write(f"{k},{precision_at_k(scores, labels, k)!r}\n")


@dataclass
class EvalConfig:
    ratio: float = 0.8
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)

    def to_dict(self) -> dict:
        return {"ratio": self.ratio, "classifier": self.classifier.to_dict()}


@dataclass
class EvalReport:
    seeds: list[int]
    per_seed: dict[str, list[float]]
    mean: dict[str, float]
    stderr: dict[str, float]
    config: dict

    def to_dict(self) -> dict:
        metrics = {
            name: {
                "per_seed": self.per_seed[name],
                "mean": self.mean[name],
                "stderr": self.stderr[name],
            }
            for name in sorted(self.per_seed)
        }
        return {"metrics": metrics, "seeds": self.seeds, "config": self.config}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def summarize(per_seed: dict[str, list[float]]) -> tuple[dict, dict]:
    """Mean and standard error (sample stddev / sqrt(n); 0 for one seed)."""
    means, stderrs = {}, {}
    for name, values in per_seed.items():
        arr = np.asarray(values, dtype=np.float64)
        means[name] = float(arr.mean())
        if len(arr) > 1 and arr.max() > arr.min():
            stderrs[name] = float(arr.std(ddof=1) / np.sqrt(len(arr)))
        else:
            stderrs[name] = 0.0
    return means, stderrs


def classifier_training_arrays(examples, enc):
    """Feature matrix and label vector for a labeled example set."""
    feature_rows = []
    labels = []
    for example in examples:
        features, _, _ = featurize_example(example, enc)
        feature_rows.append(features.values)
        labels.append(example.label)
    return np.stack(feature_rows), np.asarray(labels, dtype=np.float64)


def repeated_split_eval(examples, enc, config: EvalConfig | None = None, seeds=DEFAULT_SEEDS) -> EvalReport:
    """Repeat split -> train probe -> score for each seed.

    Features are computed once (the encoder is frozen); each seed gets its
    own deterministic 8:2 split and classifier initialization.
    """
    seeds = list(seeds)
    if not seeds:
        raise ValueError("seeds must be non-empty")
    config = config or EvalConfig()
    examples = list(examples)
    F, y = classifier_training_arrays(examples, enc)

    per_seed = {"f1": [], "auc": []}
    for seed in seeds:
        train_idx, test_idx = split_indices(len(examples), config.ratio, seed)
        clf_config = ClassifierConfig(**{**config.classifier.to_dict(), "seed": stable_seed("clf", seed)})
        params = train_classifier(F[train_idx], y[train_idx], clf_config)
        probs, _ = params.forward(F[test_idx])
        preds = (probs > 0.5).astype(int)
        per_seed["f1"].append(f1_score(preds, y[test_idx]))
        per_seed["auc"].append(auc_score(probs, y[test_idx]))

    mean, stderr = summarize(per_seed)
    return EvalReport(
        seeds=seeds,
        per_seed=per_seed,
        mean=mean,
        stderr=stderr,
        config={"ratio": config.ratio, "classifier": config.classifier.to_dict(), "encoder": getattr(enc, "identifier", "unknown")},
    )


def _normalize_rows(X: np.ndarray) -> np.ndarray:
    norms = np.linalg.norm(X, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return X / norms


def embedding_quality(
    enc,
    triplets,
    dropout_seed_base: int = 0,
    normalize: bool = True,
    articles: dict | None = None,
) -> dict:
    """Alignment (title-title and title-body) plus uniformity for an encoder.

    Title-title pairs are dropout twins of each anchor; title-body pairs are
    anchor and mined positive; uniformity runs over the anchor embeddings.
    Embeddings are L2-normalized first (the measures assume the unit
    sphere) unless ``normalize`` is off.

    When ``articles`` (id -> Article) is given, positive assignments are
    first refreshed with the evaluated encoder, matching the protocol where
    assignments track the target embedding during training.
    """
    triplets = list(triplets)
    if not triplets:
        raise ValueError("embedding_quality needs at least one triplet")
    if articles is not None:
        from .mining import reassign_batch

        pairs = [(articles[t.article_id], t) for t in triplets if t.article_id in articles]
        triplets = reassign_batch(pairs, enc, global_step=0)
        if not triplets:
            raise ValueError("no triplet survived reassignment")
    anchor_texts = [t.anchor.text for t in triplets]
    positive_texts = [t.positive.text for t in triplets]

    anchors = enc.encode_batch(anchor_texts)
    positives = enc.encode_batch(positive_texts)
    seeds_a = [stable_seed("quality-a", dropout_seed_base, i) for i in range(len(triplets))]
    seeds_b = [stable_seed("quality-b", dropout_seed_base, i) for i in range(len(triplets))]
    twin_a = enc.encode_batch(anchor_texts, dropout_seeds=seeds_a)
    twin_b = enc.encode_batch(anchor_texts, dropout_seeds=seeds_b)

    if normalize:
        anchors, positives = _normalize_rows(anchors), _normalize_rows(positives)
        twin_a, twin_b = _normalize_rows(twin_a), _normalize_rows(twin_b)

    return {
        "alignment_title_title": alignment(list(zip(twin_a, twin_b))),
        "alignment_title_body": alignment(list(zip(anchors, positives))),
        "uniformity": uniformity(list(anchors)),
    }
