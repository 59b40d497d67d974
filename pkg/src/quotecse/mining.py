"""Triplet mining from unlabeled articles under journalism rules.

For each article the first headline quote is the anchor: the most similar
body quote becomes the positive, a random remaining body quote the hard
negative. Articles are dropped when the body has fewer than two quotes, the
headline quote appears verbatim in the body, or the anchor-positive cosine
similarity falls below the mining threshold (kept at the boundary).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Iterable

import numpy as np

from ._stable import stable_seed
from .corpus import Article, BODY, HEADLINE, Quote, is_identical_quote, nominal_quote
from .encoder import cosine_sim, encode_texts
from .errors import DataFormatError

DEFAULT_THRESHOLD = 0.75

DROP_NO_HEADLINE = "no_headline_quote"
DROP_NO_BODY_PAIR = "no_body_pair"
DROP_IDENTICAL = "identical"
DROP_BELOW_THRESHOLD = "below_threshold"


@dataclass
class MinedTriplet:
    article_id: str
    anchor: Quote
    positive: Quote
    negative: Quote
    anchor_positive_sim: float
    assigner: str


def _assignment_failure(article: Article) -> str | None:
    if not article.headline_quotes:
        return DROP_NO_HEADLINE
    if len(article.body_quotes) < 2:
        return DROP_NO_BODY_PAIR
    if is_identical_quote(article.headline_quotes[0], article.body_quotes):
        return DROP_IDENTICAL
    return None


def assign_samples(article: Article, enc, rng_seed: int) -> MinedTriplet | None:
    """Pick positive and negative body quotes for an article's anchor.

    Positive is the argmax of cosine similarity with the anchor (ties go to
    the lowest index); the negative is drawn uniformly from the remaining
    body quotes under ``rng_seed``. Returns None for articles failing the
    structural rules (threshold filtering happens separately).
    """
    if _assignment_failure(article) is not None:
        return None
    anchor = article.headline_quotes[0]
    embeddings = encode_texts(enc, [anchor.text] + [q.text for q in article.body_quotes])
    anchor_emb, body_embs = embeddings[0], embeddings[1:]
    sims = np.array([cosine_sim(anchor_emb, row) for row in body_embs])
    positive_index = int(np.argmax(sims))
    remaining = [i for i in range(len(article.body_quotes)) if i != positive_index]
    rng = np.random.default_rng(rng_seed)
    negative_index = remaining[int(rng.integers(len(remaining)))]
    return MinedTriplet(
        article_id=article.id,
        anchor=anchor,
        positive=article.body_quotes[positive_index],
        negative=article.body_quotes[negative_index],
        anchor_positive_sim=float(sims[positive_index]),
        assigner=getattr(enc, "identifier", enc.__class__.__name__),
    )


def filter_by_threshold(triplet: MinedTriplet, threshold: float = DEFAULT_THRESHOLD) -> bool:
    """Keep a triplet iff its anchor-positive similarity reaches the
    threshold; the boundary value itself is kept."""
    return triplet.anchor_positive_sim >= threshold


def reassign_batch(
    batch: list[tuple[Article, MinedTriplet]],
    current_enc,
    global_step: int,
    redraw_negative: bool = True,
) -> list[MinedTriplet]:
    """Re-run assignment for a training batch with the current encoder.

    The threshold filter is NOT re-applied: corpus membership was fixed at
    mining time. Negative draws are seeded from (article id, step) so runs
    reproduce while negatives vary across steps. With ``redraw_negative``
    off, the previous negative is kept unless it collides with the new
    positive. Articles that no longer satisfy the structural rules are
    skipped for this step.
    """
    reassigned = []
    for article, previous in batch:
        fresh = assign_samples(article, current_enc, stable_seed("reassign", article.id, global_step))
        if fresh is None:
            continue
        if not redraw_negative and previous.negative.text != fresh.positive.text:
            fresh = replace(fresh, negative=previous.negative)
        reassigned.append(fresh)
    return reassigned


@dataclass
class MiningResult:
    train: list[MinedTriplet]
    val: list[MinedTriplet]
    test: list[MinedTriplet]
    stats: dict[str, int]

    @property
    def kept(self) -> list[MinedTriplet]:
        return self.train + self.val + self.test


def mine_corpus(
    articles: Iterable[Article],
    enc,
    threshold: float = DEFAULT_THRESHOLD,
    seed: int = 0,
) -> MiningResult:
    """Mine triplets from every article, filter, and split 80/10/10.

    Stats count kept triplets and drops by reason; the counters sum to the
    number of input articles. The split shuffles kept triplets under the
    seed; train gets round-half-up 80%, validation floor-half of the rest,
    test the remainder.
    """
    kept: list[MinedTriplet] = []
    stats = {
        "kept": 0,
        DROP_NO_HEADLINE: 0,
        DROP_NO_BODY_PAIR: 0,
        DROP_IDENTICAL: 0,
        DROP_BELOW_THRESHOLD: 0,
    }
    for article in articles:
        failure = _assignment_failure(article)
        if failure is not None:
            stats[failure] += 1
            continue
        try:
            triplet = assign_samples(article, enc, stable_seed("mine", article.id, seed=seed))
        except (OSError, ValueError, KeyError) as exc:
            raise DataFormatError(f"article {article.id}: {exc}") from exc
        if not filter_by_threshold(triplet, threshold):
            stats[DROP_BELOW_THRESHOLD] += 1
            continue
        stats["kept"] += 1
        kept.append(triplet)

    order = np.random.default_rng(stable_seed("corpus-split", seed=seed)).permutation(len(kept))
    n_train = int(0.8 * len(kept) + 0.5)
    n_val = (len(kept) - n_train) // 2
    train = [kept[i] for i in order[:n_train]]
    val = [kept[i] for i in order[n_train : n_train + n_val]]
    test = [kept[i] for i in order[n_train + n_val :]]
    return MiningResult(train, val, test, stats)


def triplet_to_record(triplet: MinedTriplet) -> dict:
    return {
        "article_id": triplet.article_id,
        "anchor": triplet.anchor.text,
        "positive": triplet.positive.text,
        "negative": triplet.negative.text,
        "anchor_positive_sim": triplet.anchor_positive_sim,
    }


def write_triplets(path, triplets: Iterable[MinedTriplet]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for triplet in triplets:
            handle.write(json.dumps(triplet_to_record(triplet), ensure_ascii=False, sort_keys=True))
            handle.write("\n")
            count += 1
    return count


def load_triplets(path) -> list[MinedTriplet]:
    """Read triplet JSONL back. Quote spans are nominal after a round trip;
    only the texts matter downstream."""
    triplets = []
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                triplets.append(
                    MinedTriplet(
                        article_id=str(record["article_id"]),
                        anchor=nominal_quote(record["anchor"], HEADLINE, 0),
                        positive=nominal_quote(record["positive"], BODY, 0),
                        negative=nominal_quote(record["negative"], BODY, 1),
                        anchor_positive_sim=float(record["anchor_positive_sim"]),
                        assigner="file",
                    )
                )
            except (json.JSONDecodeError, ValueError, TypeError, KeyError) as exc:
                raise DataFormatError(str(exc), path=path, line=line_number) from exc
    return triplets
