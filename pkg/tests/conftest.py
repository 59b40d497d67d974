import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from quotecse.corpus import make_article
from quotecse.encoder import Embedding


class StubEncoder:
    """Encoder mapping known texts to fixed vectors; exact sims for tests."""

    identifier = "stub"

    def __init__(self, table: dict):
        self.table = {k: np.asarray(v, dtype=np.float64) for k, v in table.items()}

    def encode(self, text, dropout_seed=None):
        return Embedding(self.table[text])


def vector_with_cosine(target: float):
    """Unit 2-d vector whose cosine with (1, 0) is exactly target."""
    return np.array([target, np.sqrt(max(0.0, 1.0 - target * target))])


def article_with_sims(article_id: str, body_sims, headline_text="anchor", identical=False):
    """Article plus stub encoder where body quote k has the given cosine
    with the headline quote."""
    body_texts = [f"body quote {k} of {article_id}" for k in range(len(body_sims))]
    if identical and body_texts:
        body_texts[0] = headline_text
    title = f'News: "{headline_text}"'
    body = " ".join(f'It said "{t}".' for t in body_texts)
    article = make_article(article_id, title, body)
    table = {headline_text: np.array([1.0, 0.0])}
    for text, sim in zip(body_texts, body_sims):
        if text != headline_text:  # identical-quote case: keep the anchor vector
            table[text] = vector_with_cosine(sim)
    return article, StubEncoder(table)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
