"""News-article corpus handling: quote extraction, exclusion rules, splits.

An article is a title plus a body text; direct quotations are the delimited
spans inside each. Headline quotes come from the title, body quotes from the
body, and a labeled detection example pairs one headline quote with the body
quotes of its article.
"""

from __future__ import annotations

import json
import re
import unicodedata
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataFormatError

HEADLINE = "headline"
BODY = "body"

# Double-quote family only; single quotes are usually emphasis, not quotation.
DEFAULT_DELIMITERS: tuple[tuple[str, str], ...] = (
    ('"', '"'),
    ("“", "”"),  # “ ”
    ("『", "』"),  # 『 』
    ("「", "」"),  # 「 」
)

# Shorter spans are punctuation noise, not quotations.
MIN_QUOTE_CHARS = 2

_WS_RUN = re.compile(r"\s+")


@dataclass(frozen=True)
class Quote:
    """One direct quotation.

    ``text`` has delimiters stripped and surrounding whitespace trimmed;
    ``span`` covers the source text including the delimiter marks.
    """

    text: str
    span: tuple[int, int]
    source: str  # HEADLINE or BODY
    index: int

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("quote text must be non-empty after trimming")
        start, end = self.span
        if not start < end:
            raise ValueError(f"quote span must satisfy start < end, got {self.span}")
        if self.source not in (HEADLINE, BODY):
            raise ValueError(f"quote source must be {HEADLINE!r} or {BODY!r}")


@dataclass
class Article:
    """A news item: title, body, and the quotes extracted from each."""

    id: str
    title: str
    body: str
    headline_quotes: list[Quote] = field(default_factory=list)
    body_quotes: list[Quote] = field(default_factory=list)

    def validate(self) -> None:
        """Check span/source invariants; raises ValueError on violation."""
        for quote in self.headline_quotes:
            if quote.source != HEADLINE:
                raise ValueError(f"article {self.id}: headline quote with source {quote.source!r}")
            _check_span(self.id, self.title, quote)
        previous_start = -1
        for quote in self.body_quotes:
            if quote.source != BODY:
                raise ValueError(f"article {self.id}: body quote with source {quote.source!r}")
            _check_span(self.id, self.body, quote)
            if quote.span[0] <= previous_start:
                raise ValueError(f"article {self.id}: body quotes out of document order")
            previous_start = quote.span[0]


def _check_span(article_id: str, source_text: str, quote: Quote) -> None:
    start, end = quote.span
    if start < 0 or end > len(source_text) or end - start < 2:
        raise ValueError(f"article {article_id}: span {quote.span} outside source text")
    inner = source_text[start + 1 : end - 1]
    if inner.strip() != quote.text:
        raise ValueError(
            f"article {article_id}: span {quote.span} does not reproduce quote text"
        )


@dataclass
class DetectionExample:
    """A labeled headline quote with its article's body quotes.

    ``label`` is 1 for contextomized, 0 for modified; ``None`` marks an
    unlabeled record awaiting prediction.
    """

    article_id: str
    headline_quote: Quote
    body_quotes: list[Quote]
    label: int | None

    def validate(self, require_label: bool = True) -> None:
        if require_label and self.label not in (0, 1):
            raise ValueError(f"example {self.article_id}: label must be 0 or 1")
        if self.label not in (0, 1, None):
            raise ValueError(f"example {self.article_id}: label must be 0, 1, or None")
        if not self.body_quotes:
            raise ValueError(f"example {self.article_id}: needs at least one body quote")
        if is_identical_quote(self.headline_quote, self.body_quotes):
            raise ValueError(
                f"example {self.article_id}: headline quote identical to a body quote"
            )


def extract_quotes(
    text: str,
    delimiters: Sequence[tuple[str, str]] = DEFAULT_DELIMITERS,
    source: str = BODY,
    min_chars: int = MIN_QUOTE_CHARS,
) -> list[Quote]:
    """Extract maximal non-overlapping delimited spans in document order.

    The scan takes the earliest opening mark, pairs it with the next matching
    closing mark, and resumes after the closed span, so marks nested inside a
    span are not re-matched. A trailing open with no close yields no quote.
    Spans shorter than ``min_chars`` after stripping are discarded.
    """
    if not delimiters:
        raise ValueError("delimiters must be non-empty")
    for open_mark, close_mark in delimiters:
        if len(open_mark) != 1 or len(close_mark) != 1:
            raise ValueError("delimiter marks must be single characters")

    quotes: list[Quote] = []
    pos = 0
    index = 0
    while pos < len(text):
        earliest: tuple[int, str] | None = None
        for open_mark, close_mark in delimiters:
            found = text.find(open_mark, pos)
            if found != -1 and (earliest is None or found < earliest[0]):
                earliest = (found, close_mark)
        if earliest is None:
            break
        start, close_mark = earliest
        end = text.find(close_mark, start + 1)
        if end == -1:
            break  # unbalanced trailing open
        inner = text[start + 1 : end].strip()
        if len(inner) >= min_chars:
            quotes.append(Quote(text=inner, span=(start, end + 1), source=source, index=index))
            index += 1
        pos = end + 1
    return quotes


def canonicalize_quote(text: str) -> str:
    """Trim and collapse internal whitespace runs to single spaces."""
    return _WS_RUN.sub(" ", text.strip())


def is_identical_quote(headline_quote: Quote, body_quotes: Sequence[Quote]) -> bool:
    """True iff some body quote equals the headline quote after whitespace
    canonicalization. Comparison is otherwise exact: no case folding, no
    semantic matching."""
    target = canonicalize_quote(headline_quote.text)
    return any(canonicalize_quote(q.text) == target for q in body_quotes)


def make_article(
    article_id: str,
    title: str,
    body: str,
    headline_quotes: list[Quote] | None = None,
    body_quotes: list[Quote] | None = None,
    delimiters: Sequence[tuple[str, str]] = DEFAULT_DELIMITERS,
) -> Article:
    """Build an Article, extracting quotes from any side not supplied.

    When extraction runs, title/body are NFC-normalized first; precomputed
    quotes are taken verbatim (their spans refer to the text as given).
    """
    if headline_quotes is None:
        title = unicodedata.normalize("NFC", title)
        headline_quotes = extract_quotes(title, delimiters, source=HEADLINE)
    if body_quotes is None:
        body = unicodedata.normalize("NFC", body)
        body_quotes = extract_quotes(body, delimiters, source=BODY)
    article = Article(article_id, title, body, headline_quotes, body_quotes)
    article.validate()
    return article


def _quote_from_record(raw, source: str, index: int) -> Quote:
    if not isinstance(raw, dict) or "text" not in raw or "span" not in raw:
        raise ValueError("quote records need 'text' and 'span' fields")
    span = raw["span"]
    if not isinstance(span, (list, tuple)) or len(span) != 2:
        raise ValueError("quote span must be a [start, end] pair")
    return Quote(text=raw["text"], span=(int(span[0]), int(span[1])), source=source, index=index)


def _article_from_record(record: dict, delimiters) -> Article:
    for key in ("id", "title", "body"):
        if key not in record:
            raise ValueError(f"missing required field {key!r}")
        if not isinstance(record[key], str):
            raise ValueError(f"field {key!r} must be a string")
    headline_quotes = None
    body_quotes = None
    if "headline_quotes" in record:
        headline_quotes = [
            _quote_from_record(q, HEADLINE, i) for i, q in enumerate(record["headline_quotes"])
        ]
    if "body_quotes" in record:
        body_quotes = [
            _quote_from_record(q, BODY, i) for i, q in enumerate(record["body_quotes"])
        ]
    return make_article(
        record["id"], record["title"], record["body"], headline_quotes, body_quotes, delimiters
    )


def load_articles(
    path, delimiters: Sequence[tuple[str, str]] = DEFAULT_DELIMITERS
) -> list[Article]:
    """Load article JSONL; quotes are extracted where absent, taken verbatim
    where precomputed. Malformed lines raise DataFormatError with the line
    number."""
    articles = []
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                if not isinstance(record, dict):
                    raise ValueError("record must be a JSON object")
                articles.append(_article_from_record(record, delimiters))
            except (json.JSONDecodeError, ValueError, TypeError) as exc:
                raise DataFormatError(str(exc), path=path, line=line_number) from exc
    return articles


def article_to_record(article: Article) -> dict:
    return {
        "id": article.id,
        "title": article.title,
        "body": article.body,
        "headline_quotes": [{"text": q.text, "span": list(q.span)} for q in article.headline_quotes],
        "body_quotes": [{"text": q.text, "span": list(q.span)} for q in article.body_quotes],
    }


def write_articles(path, articles: Iterable[Article]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for article in articles:
            handle.write(json.dumps(article_to_record(article), ensure_ascii=False, sort_keys=True))
            handle.write("\n")
            count += 1
    return count


def nominal_quote(text: str, source: str, index: int) -> Quote:
    """Wrap a bare quote string (no known source span) into a Quote.

    The span is nominal, as if the text were delimited in isolation; it is
    only valid outside an Article.
    """
    return Quote(text=text, span=(0, len(text) + 2), source=source, index=index)


def load_detection_examples(path, require_label: bool = True) -> list[DetectionExample]:
    """Load labeled detection examples from JSONL.

    Schema per line: {"article_id": str, "headline_quote": str,
    "body_quotes": [str, ...], "label": 0|1}. With ``require_label=False``
    the label may be absent (unlabeled inputs for prediction), and the
    identical-quote exclusion is not enforced.
    """
    examples = []
    with open(path, encoding="utf-8") as handle:
        for line_number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                examples.append(_example_from_record(record, require_label))
            except (json.JSONDecodeError, ValueError, TypeError) as exc:
                raise DataFormatError(str(exc), path=path, line=line_number) from exc
    return examples


def _example_from_record(record: dict, require_label: bool) -> DetectionExample:
    for key in ("article_id", "headline_quote", "body_quotes"):
        if key not in record:
            raise ValueError(f"missing required field {key!r}")
    body = record["body_quotes"]
    if not isinstance(body, list) or not body:
        raise ValueError("body_quotes must be a non-empty list")
    label = record.get("label")
    if label is None and require_label:
        raise ValueError("missing required field 'label'")
    if label is not None and label not in (0, 1):
        raise ValueError(f"label must be 0 or 1, got {label!r}")
    example = DetectionExample(
        article_id=str(record["article_id"]),
        headline_quote=nominal_quote(record["headline_quote"], HEADLINE, 0),
        body_quotes=[nominal_quote(text, BODY, i) for i, text in enumerate(body)],
        label=label,
    )
    if require_label:
        example.validate(require_label=True)
    return example


def write_detection_examples(path, examples: Iterable[DetectionExample]) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as handle:
        for example in examples:
            record = {
                "article_id": example.article_id,
                "headline_quote": example.headline_quote.text,
                "body_quotes": [q.text for q in example.body_quotes],
            }
            if example.label is not None:
                record["label"] = example.label
            handle.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
            handle.write("\n")
            count += 1
    return count


@dataclass
class SplitResult:
    train: list
    test: list
    metadata: dict


def split_indices(n: int, ratio: float, seed: int) -> tuple[list[int], list[int]]:
    """Deterministic shuffled partition of range(n); train gets
    round-half-up(ratio * n) items."""
    if not 0 < ratio < 1:
        raise ValueError(f"ratio must be in (0, 1), got {ratio}")
    if n <= 0:
        raise ValueError("cannot split an empty collection")
    order = np.random.default_rng(seed).permutation(n)
    n_train = int(ratio * n + 0.5)
    return [int(i) for i in order[:n_train]], [int(i) for i in order[n_train:]]


def split_labeled(
    examples: Sequence[DetectionExample], ratio: float, seed: int
) -> SplitResult:
    """Deterministically shuffle and partition labeled examples.

    Returns train/test lists plus metadata with per-split label counts.
    """
    train_idx, test_idx = split_indices(len(examples), ratio, seed)
    train = [examples[i] for i in train_idx]
    test = [examples[i] for i in test_idx]

    def label_counts(items):
        counts = {0: 0, 1: 0}
        for item in items:
            if item.label in counts:
                counts[item.label] += 1
        return {str(k): v for k, v in counts.items()}

    metadata = {
        "ratio": ratio,
        "seed": seed,
        "n_train": len(train),
        "n_test": len(test),
        "train_label_counts": label_counts(train),
        "test_label_counts": label_counts(test),
    }
    return SplitResult(train=train, test=test, metadata=metadata)
