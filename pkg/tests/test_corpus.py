import json

import pytest
from hypothesis import given, settings, strategies as st

from quotecse.corpus import (
    BODY,
    DEFAULT_DELIMITERS,
    HEADLINE,
    Quote,
    canonicalize_quote,
    extract_quotes,
    is_identical_quote,
    load_articles,
    load_detection_examples,
    make_article,
    nominal_quote,
    split_labeled,
    write_articles,
    write_detection_examples,
)
from quotecse.errors import DataFormatError


class TestExtractQuotes:
    def test_two_ascii_quotes(self):
        text = 'He said "hello" then "bye".'
        quotes = extract_quotes(text, [('"', '"')])
        assert [q.text for q in quotes] == ["hello", "bye"]
        assert text[quotes[0].span[0] : quotes[0].span[1]] == '"hello"'
        assert [q.index for q in quotes] == [0, 1]

    def test_no_quotes(self):
        assert extract_quotes("no quotes here") == []

    def test_mixed_mark_pairs_in_order(self):
        # hand-traced scan: opens at 6 and 14, closes at 8 and 16
        text = 'start "a" mid “b” end'
        quotes = extract_quotes(text, [('"', '"'), ("“", "”")], min_chars=1)
        assert [q.text for q in quotes] == ["a", "b"]
        assert [q.span for q in quotes] == [(6, 9), (14, 17)]

    def test_unbalanced_trailing_open_yields_nothing(self):
        assert extract_quotes('left "open forever', [('"', '"')]) == []
        quotes = extract_quotes('done "ok" and "dangling', [('"', '"')])
        assert [q.text for q in quotes] == ["ok"]

    def test_nested_marks_not_rematched(self):
        text = "a 『outer 「inner』 tail"
        quotes = extract_quotes(text, [("『", "』"), ("「", "」")])
        assert [q.text for q in quotes] == ["outer 「inner"]

    def test_short_spans_discarded(self):
        quotes = extract_quotes('point "a" then "long enough"', [('"', '"')])
        assert [q.text for q in quotes] == ["long enough"]

    def test_bad_delimiters_rejected(self):
        with pytest.raises(ValueError):
            extract_quotes("text", [])
        with pytest.raises(ValueError):
            extract_quotes("text", [("<<", ">>")])

    @settings(max_examples=60, deadline=None)
    @given(st.lists(st.sampled_from(["alpha beta", "plain run", "x y z"]), min_size=0, max_size=6),
           st.integers(0, len(DEFAULT_DELIMITERS) - 1))
    def test_round_trip_recovers_planted_quotes(self, inner_texts, pair_index):
        open_mark, close_mark = DEFAULT_DELIMITERS[pair_index]
        parts = ["lead segment "]
        for text in inner_texts:
            parts.append(f"{open_mark}{text}{close_mark}")
            parts.append(" filler piece ")
        document = "".join(parts)
        quotes = extract_quotes(document, DEFAULT_DELIMITERS)
        assert [q.text for q in quotes] == inner_texts
        for quote in quotes:
            segment = document[quote.span[0] : quote.span[1]]
            assert segment[0] == open_mark and segment[-1] == close_mark
            assert segment[1:-1].strip() == quote.text


class TestIdenticalQuote:
    def _headline(self, text):
        return nominal_quote(text, HEADLINE, 0)

    def _bodies(self, *texts):
        return [nominal_quote(t, BODY, i) for i, t in enumerate(texts)]

    def test_exact_match(self):
        assert is_identical_quote(self._headline("A debt crisis"), self._bodies("A debt crisis"))

    def test_case_sensitive(self):
        assert not is_identical_quote(self._headline("A debt crisis"), self._bodies("a debt crisis"))

    def test_whitespace_canonicalization(self):
        assert is_identical_quote(self._headline("  A  debt crisis "), self._bodies("A debt crisis"))

    @settings(max_examples=60, deadline=None)
    @given(st.text(alphabet="ab \t", min_size=1, max_size=12),
           st.text(alphabet="ab \t", min_size=1, max_size=12))
    def test_matches_iff_canonical_forms_equal(self, a, b):
        if not a.strip() or not b.strip():
            return
        headline = self._headline(a)
        expected = canonicalize_quote(a) == canonicalize_quote(b)
        assert is_identical_quote(headline, self._bodies(b)) == expected


class TestArticles:
    def test_make_article_extracts_both_sides(self):
        article = make_article("a1", 'T: "headline quote"', 'Body "first" and "second".')
        assert [q.text for q in article.headline_quotes] == ["headline quote"]
        assert [q.text for q in article.body_quotes] == ["first", "second"]
        assert all(q.source == BODY for q in article.body_quotes)

    def test_invalid_span_rejected(self):
        good = make_article("a2", 'T "h quote"', 'B "quote one" x "quote two"')
        bad_quote = Quote(text="quote one", span=(0, 5), source=BODY, index=0)
        good.body_quotes[0] = bad_quote
        with pytest.raises(ValueError):
            good.validate()

    def test_load_articles_roundtrip(self, tmp_path):
        path = tmp_path / "articles.jsonl"
        records = [
            {"id": "x1", "title": 'A "alpha beta"', "body": 'Said "gamma delta". Then "epsilon zeta".'},
            {"id": "x2", "title": "no quotes", "body": 'Only "one quote here".'},
            {"id": "x3", "title": 'B "third title"', "body": "nothing quoted"},
        ]
        path.write_text("\n".join(json.dumps(r) for r in records), encoding="utf-8")
        articles = load_articles(path)
        assert len(articles) == 3
        assert [q.text for q in articles[0].body_quotes] == ["gamma delta", "epsilon zeta"]

        out = tmp_path / "annotated.jsonl"
        write_articles(out, articles)
        again = load_articles(out)
        assert [a.id for a in again] == ["x1", "x2", "x3"]
        assert again[0].body_quotes == articles[0].body_quotes

    def test_malformed_line_reports_line_number(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        path.write_text('{"id": "a", "title": "t", "body": "b"}\nnot json\n', encoding="utf-8")
        with pytest.raises(DataFormatError, match="line 2"):
            load_articles(path)

    def test_missing_field_is_schema_error(self, tmp_path):
        path = tmp_path / "missing.jsonl"
        path.write_text('{"id": "a", "title": "t"}\n', encoding="utf-8")
        with pytest.raises(DataFormatError, match="body"):
            load_articles(path)

    def test_precomputed_quotes_taken_verbatim(self, tmp_path):
        title = 'Has "headline words" inside'
        record = {
            "id": "pre1",
            "title": title,
            "body": 'Body has "planted text" somewhere',
            "headline_quotes": [{"text": "headline words", "span": [4, 20]}],
            "body_quotes": [{"text": "planted text", "span": [9, 23]}],
        }
        path = tmp_path / "pre.jsonl"
        path.write_text(json.dumps(record) + "\n", encoding="utf-8")
        article = load_articles(path)[0]
        assert article.headline_quotes[0].span == (4, 20)
        assert article.body_quotes[0].text == "planted text"


class TestDetectionExamples:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "labeled.jsonl"
        rows = [
            {"article_id": "e1", "headline_quote": "claim one", "body_quotes": ["other text"], "label": 1},
            {"article_id": "e2", "headline_quote": "claim two", "body_quotes": ["claim two again", "more"], "label": 0},
        ]
        path.write_text("\n".join(json.dumps(r) for r in rows), encoding="utf-8")
        examples = load_detection_examples(path)
        assert [e.label for e in examples] == [1, 0]
        out = tmp_path / "out.jsonl"
        write_detection_examples(out, examples)
        assert [e.article_id for e in load_detection_examples(out)] == ["e1", "e2"]

    def test_identical_pair_rejected_when_labeled(self, tmp_path):
        path = tmp_path / "bad.jsonl"
        row = {"article_id": "e", "headline_quote": "same words", "body_quotes": ["same words"], "label": 0}
        path.write_text(json.dumps(row) + "\n", encoding="utf-8")
        with pytest.raises(DataFormatError, match="line 1"):
            load_detection_examples(path)

    def test_label_optional_for_prediction_inputs(self, tmp_path):
        path = tmp_path / "wild.jsonl"
        row = {"article_id": "w", "headline_quote": "unlabeled claim", "body_quotes": ["body quote"]}
        path.write_text(json.dumps(row) + "\n", encoding="utf-8")
        assert load_detection_examples(path, require_label=False)[0].label is None
        with pytest.raises(DataFormatError, match="label"):
            load_detection_examples(path, require_label=True)


class TestSplitLabeled:
    def test_cardinality_and_disjointness(self):
        examples = [_example(i) for i in range(10)]
        result = split_labeled(examples, 0.8, seed=0)
        assert len(result.train) == 8 and len(result.test) == 2
        ids = {e.article_id for e in result.train} | {e.article_id for e in result.test}
        assert len(ids) == 10

    def test_determinism(self):
        examples = [_example(i) for i in range(25)]
        first = split_labeled(examples, 0.8, seed=42)
        second = split_labeled(examples, 0.8, seed=42)
        assert [e.article_id for e in first.train] == [e.article_id for e in second.train]
        assert [e.article_id for e in first.test] == [e.article_id for e in second.test]

    def test_paper_scale_counts(self):
        examples = [_example(i) for i in range(1600)]
        result = split_labeled(examples, 0.8, seed=1)
        assert len(result.train) == 1280 and len(result.test) == 320

    def test_partition_rule_for_all_small_n(self):
        for n in range(1, 1001, 7):
            train_like = int(0.8 * n + 0.5)
            examples = [_example(i) for i in range(n)]
            result = split_labeled(examples, 0.8, seed=n)
            assert len(result.train) == train_like
            assert len(result.train) + len(result.test) == n
            overlap = {e.article_id for e in result.train} & {e.article_id for e in result.test}
            assert not overlap

    def test_metadata_reports_label_counts(self):
        examples = [_example(i) for i in range(10)]
        metadata = split_labeled(examples, 0.8, seed=3).metadata
        total = sum(metadata["train_label_counts"].values()) + sum(metadata["test_label_counts"].values())
        assert total == 10

    def test_out_of_range_ratio(self):
        with pytest.raises(ValueError):
            split_labeled([_example(0)], 1.0, seed=0)
        with pytest.raises(ValueError):
            split_labeled([], 0.8, seed=0)


def _example(i):
    from quotecse.corpus import DetectionExample

    return DetectionExample(
        article_id=f"ex{i}",
        headline_quote=nominal_quote(f"headline text {i}", HEADLINE, 0),
        body_quotes=[nominal_quote(f"body text {i}", BODY, 0)],
        label=i % 2,
    )
