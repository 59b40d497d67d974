"""Synthetic news corpus with controlled paraphrases and semantic flips.

Each quote renders a meaning (subject, object, verb class) through one of
several templates and verb suffixes. A paraphrase keeps the meaning but
changes suffix and template: a large lexical change with no semantic
change. A semantic flip swaps the verb stem for its antonym, which shares
a 5-character prefix and differs only in the tail: a small lexical change
with a large semantic change, the shape of a contextomized quote. Flipped
framings appear only as within-article hard negatives and as contextomized
headlines, never as anchors or planted positives.

Generated articles plant a paraphrase of the headline quote in the body
next to a flipped hard negative, so mining and contrastive training have a
known ground truth; labeled examples mark flipped headlines
contextomized(1) and paraphrased headlines modified(0).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Article, DetectionExample, HEADLINE, BODY, make_article, nominal_quote

TOPICS = [
    {
        "subjects": ["the finance ministry", "the central bank", "the budget office"],
        "objects": ["the relief package", "the bond program", "the spending cap"],
    },
    {
        "subjects": ["the health agency", "the hospital board", "the vaccine panel"],
        "objects": ["the booster rollout", "the clinic network", "the screening drive"],
    },
    {
        "subjects": ["the transit authority", "the rail operator", "the port commission"],
        "objects": ["the ferry schedule", "the freight corridor", "the fare reform"],
    },
    {
        "subjects": ["the energy regulator", "the grid operator", "the mining bureau"],
        "objects": ["the solar quota", "the fuel subsidy", "the turbine project"],
    },
    {
        "subjects": ["the school district", "the teachers union", "the exam board"],
        "objects": ["the tutoring fund", "the laptop scheme", "the syllabus overhaul"],
    },
    {
        "subjects": ["the housing office", "the zoning panel", "the tenants council"],
        "objects": ["the rent ceiling", "the permit queue", "the repair backlog"],
    },
]

# Antonym stem pairs sharing a 5-char prefix, differing only in the tail:
# the flip is a minimal surface edit, unlike the paraphrase's suffix and
# template swap.
VERB_STEM_PAIRS = [
    ("boostrev", "boostild"),
    ("embranco", "embraska"),
    ("widenaro", "widenulp"),
    ("praisemo", "praisuke"),
    ("approvto", "approske"),
    ("amplifra", "ampliosd"),
]

VERB_SUFFIXES = ["ent", "ika", "oru", "ave"]

TEMPLATES = [
    "{s} {v} {o}",
    "{s} {v} {o} despite the criticism",
    "officials confirmed {s} {v} {o}",
    "according to the memo, {s} {v} {o}",
    "{s}, aides said, {v} {o}",
    "by most accounts {s} {v} {o}",
]

LEAD_INS = [
    "Sources said",
    "One official added",
    "A spokesperson noted",
    "The report cited",
]


@dataclass(frozen=True)
class Meaning:
    topic: int
    subject: str
    object: str
    pair: int
    side: int  # which class of the antonym pair

    def flipped(self) -> "Meaning":
        return Meaning(self.topic, self.subject, self.object, self.pair, 1 - self.side)


def render(meaning: Meaning, suffix: int, template: int) -> str:
    verb = VERB_STEM_PAIRS[meaning.pair][meaning.side] + VERB_SUFFIXES[suffix]
    return TEMPLATES[template].format(s=meaning.subject, v=verb, o=meaning.object)


def _sample_meaning(rng) -> Meaning:
    # side 0 is the affirmed framing; side 1 exists only as its flip
    topic = int(rng.integers(len(TOPICS)))
    return Meaning(
        topic=topic,
        subject=TOPICS[topic]["subjects"][int(rng.integers(3))],
        object=TOPICS[topic]["objects"][int(rng.integers(3))],
        pair=int(rng.integers(len(VERB_STEM_PAIRS))),
        side=0,
    )


def _distinct_pair(rng, n) -> tuple[int, int]:
    first = int(rng.integers(n))
    second = int((first + 1 + rng.integers(n - 1)) % n)
    return first, second


def _other_object(rng, meaning: Meaning) -> str:
    options = [o for o in TOPICS[meaning.topic]["objects"] if o != meaning.object]
    return options[int(rng.integers(len(options)))]


def _template_avoiding(rng, avoid: int) -> int:
    return (avoid + 1 + int(rng.integers(len(TEMPLATES) - 1))) % len(TEMPLATES)


def _distractor(rng, meaning: Meaning, avoid_template: int) -> str:
    distractor_meaning = Meaning(
        meaning.topic, meaning.subject, _other_object(rng, meaning),
        int(rng.integers(len(VERB_STEM_PAIRS))), 0,
    )
    return render(distractor_meaning, int(rng.integers(len(VERB_SUFFIXES))),
                  _template_avoiding(rng, avoid_template))


def generate_article(rng, article_id: str) -> Article:
    """One unlabeled article: anchor headline quote, planted paraphrase,
    flipped hard negative, and sometimes an off-object distractor."""
    meaning = _sample_meaning(rng)
    suffix_a, suffix_p = _distinct_pair(rng, len(VERB_SUFFIXES))
    template_a, template_p = _distinct_pair(rng, len(TEMPLATES))

    anchor = render(meaning, suffix_a, template_a)
    positive = render(meaning, suffix_p, template_p)
    # same-topic quotes never reuse the anchor's template, or surface overlap
    # would outweigh the verb stem and drown the planted positive
    flip = render(meaning.flipped(), int(rng.integers(len(VERB_SUFFIXES))),
                  _template_avoiding(rng, template_a))

    body_texts = [positive, flip]
    if rng.random() < 0.6:
        body_texts.append(_distractor(rng, meaning, template_a))
    rng.shuffle(body_texts)

    title = f'Daily brief: "{anchor}"'
    sentences = []
    for text in body_texts:
        lead = LEAD_INS[int(rng.integers(len(LEAD_INS)))]
        sentences.append(f'{lead} "{text}".')
    return make_article(article_id, title, " ".join(sentences))


def generate_example(rng, article_id: str) -> DetectionExample:
    """One labeled example; label 1 flips the matched body quote's meaning."""
    meaning = _sample_meaning(rng)
    suffix_v, suffix_u = _distinct_pair(rng, len(VERB_SUFFIXES))
    template_v, template_u = _distinct_pair(rng, len(TEMPLATES))
    label = int(rng.integers(2))

    matched = render(meaning, suffix_v, template_v)
    headline_meaning = meaning.flipped() if label == 1 else meaning
    headline = render(headline_meaning, suffix_u, template_u)

    body_texts = [matched]
    for _ in range(int(rng.integers(3))):
        body_texts.append(_distractor(rng, meaning, template_u))
    rng.shuffle(body_texts)

    return DetectionExample(
        article_id=article_id,
        headline_quote=nominal_quote(headline, HEADLINE, 0),
        body_quotes=[nominal_quote(text, BODY, i) for i, text in enumerate(body_texts)],
        label=label,
    )


@dataclass
class SyntheticData:
    articles: list[Article]
    examples: list[DetectionExample]


def generate(n_articles: int = 2000, n_examples: int = 600, seed: int = 0) -> SyntheticData:
    rng = np.random.default_rng(seed)
    articles = [generate_article(rng, f"syn-a{i:05d}") for i in range(n_articles)]
    examples = [generate_example(rng, f"syn-l{i:05d}") for i in range(n_examples)]
    for example in examples:
        example.validate(require_label=True)
    return SyntheticData(articles, examples)
