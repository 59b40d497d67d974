import numpy as np
import pytest

from quotecse.encoder import (
    Embedding,
    Encoder,
    EncoderConfig,
    ProjectionHead,
    cosine_sim,
    ngram_bucket,
    toy_encode_raw,
)
from quotecse.errors import ConfigError, EncoderStateError

from oracles import finite_difference_grads


def small_config(**overrides):
    base = dict(backbone_dim=64, projection_hidden_dim=24, projection_output_dim=16)
    base.update(overrides)
    return EncoderConfig(**base)


class TestCosine:
    def test_identity(self):
        assert cosine_sim([1.0, 0.0], [1.0, 0.0]) == 1.0

    def test_orthogonal(self):
        assert cosine_sim([1.0, 0.0], [0.0, 1.0]) == 0.0

    def test_derived_value(self):
        # dot = 1, norms = sqrt(2) and 1
        assert cosine_sim([1.0, 1.0], [1.0, 0.0]) == pytest.approx(0.7071067811865475, abs=1e-9)

    def test_self_similarity_one(self, rng):
        for _ in range(25):
            v = rng.normal(size=int(rng.integers(2, 20)))
            assert cosine_sim(v, v) == pytest.approx(1.0, abs=1e-9)

    def test_symmetry_and_scale_invariance(self, rng):
        for _ in range(25):
            a, b = rng.normal(size=6), rng.normal(size=6)
            alpha = float(rng.uniform(0.1, 10.0))
            assert cosine_sim(a, b) == pytest.approx(cosine_sim(b, a), abs=1e-9)
            assert cosine_sim(alpha * a, b) == pytest.approx(cosine_sim(a, b), abs=1e-9)

    def test_errors(self):
        with pytest.raises(ValueError):
            cosine_sim([0.0, 0.0], [1.0, 0.0])
        with pytest.raises(ValueError):
            cosine_sim([1.0, 0.0], [1.0, 0.0, 0.0])


class TestToyFeaturizer:
    def test_identical_strings_identical_vectors(self):
        cfg = small_config()
        a = toy_encode_raw("the budget grows", cfg)
        b = toy_encode_raw("the budget grows", cfg)
        np.testing.assert_array_equal(a.values, b.values)

    def test_single_character_sets_exactly_its_buckets(self):
        cfg = EncoderConfig(backbone_dim=8)
        vec = toy_encode_raw("a", cfg).values
        # hand trace: only the 1-gram "a" exists
        expected_bucket = ngram_bucket("a", 1, 8, cfg.hash_seed)
        expected = np.zeros(8)
        expected[expected_bucket] = 1.0
        np.testing.assert_array_equal(vec, expected)

    def test_disjoint_ngram_sets_give_zero_dot_product(self):
        cfg = EncoderConfig(backbone_dim=4096)
        left, right = "abc", "xyz"
        buckets = lambda text: {
            ngram_bucket(text[i : i + n], n, cfg.backbone_dim, cfg.hash_seed)
            for n in cfg.ngram_sizes
            for i in range(len(text) - n + 1)
        }
        assert not (buckets(left) & buckets(right))  # no hash collisions for these
        dot = float(toy_encode_raw(left, cfg).values @ toy_encode_raw(right, cfg).values)
        assert dot == 0.0

    def test_counts_accumulate(self):
        cfg = EncoderConfig(backbone_dim=512, ngram_sizes=(1,))
        vec = toy_encode_raw("aa", cfg).values
        assert vec[ngram_bucket("a", 1, 512, 0)] == 2.0


class TestProjectionHead:
    def test_reported_scale_parameter_count(self):
        # 768*100 + 100 + 100*100 + 100 = 87,000: the reported "87k" head
        head = ProjectionHead.create(768, 100, 100, seed=0)
        assert head.param_count() == 87_000

    def test_forward_shape_and_determinism(self):
        head = ProjectionHead.create(16, 8, 4, seed=1)
        x = np.random.default_rng(0).normal(size=(3, 16))
        out1, _ = head.forward(x)
        out2, _ = head.forward(x)
        np.testing.assert_array_equal(out1, out2)
        assert out1.shape == (3, 4)

    def test_parameter_gradients_match_finite_differences(self):
        head = ProjectionHead.create(6, 5, 4, seed=2)
        rng = np.random.default_rng(3)
        x = rng.normal(size=(3, 6))
        target = rng.normal(size=(3, 4))

        def loss_value():
            out, _ = head.forward(x)
            return 0.5 * float(((out - target) ** 2).sum())

        out, cache = head.forward(x)
        grads = head.backward(cache, out - target)
        numeric = finite_difference_grads(loss_value, [head.params[n] for n in head.PARAM_NAMES])
        for name, num in zip(head.PARAM_NAMES, numeric):
            np.testing.assert_allclose(grads[name], num, rtol=1e-4, atol=1e-8)

    def test_dropout_gradients_match_finite_differences(self):
        head = ProjectionHead.create(6, 5, 4, seed=4)
        rng = np.random.default_rng(5)
        x = rng.normal(size=(2, 6))
        target = rng.normal(size=(2, 4))
        seeds = [11, 12]

        def loss_value():
            out, _ = head.forward(x, dropout_rate=0.3, dropout_seeds=seeds)
            return 0.5 * float(((out - target) ** 2).sum())

        out, cache = head.forward(x, dropout_rate=0.3, dropout_seeds=seeds)
        grads = head.backward(cache, out - target)
        numeric = finite_difference_grads(loss_value, [head.params[n] for n in head.PARAM_NAMES])
        for name, num in zip(head.PARAM_NAMES, numeric):
            np.testing.assert_allclose(grads[name], num, rtol=1e-4, atol=1e-8)


class TestEncoder:
    def test_inference_mode_is_deterministic(self):
        enc = Encoder.create(small_config(), seed=0)
        a = enc.encode("the spending cap widens")
        b = enc.encode("the spending cap widens")
        np.testing.assert_array_equal(a.values, b.values)
        assert a.d == 16

    def test_dropout_seeds_give_distinct_positive_pair(self):
        enc = Encoder.create(small_config(), seed=0)
        text = "the spending cap widens"
        a = enc.encode(text, dropout_seed=1)
        b = enc.encode(text, dropout_seed=2)
        assert not np.array_equal(a.values, b.values)
        assert cosine_sim(a, b) > 0.0

    def test_same_dropout_seed_reproduces(self):
        enc = Encoder.create(small_config(), seed=0)
        a = enc.encode("stable text", dropout_seed=9)
        b = enc.encode("stable text", dropout_seed=9)
        np.testing.assert_array_equal(a.values, b.values)

    def test_empty_text_rejected(self):
        enc = Encoder.create(small_config(), seed=0)
        with pytest.raises(ValueError):
            enc.encode("")

    def test_uninitialized_encoder_is_state_error(self):
        enc = Encoder(small_config())
        with pytest.raises(EncoderStateError):
            enc.encode("anything")

    def test_checkpoint_round_trip_bit_exact(self, tmp_path):
        enc = Encoder.create(small_config(), seed=7)
        path = tmp_path / "enc.npz"
        enc.save(path)
        loaded = Encoder.load(path)
        assert loaded.identifier == enc.identifier
        texts = ["alpha one", "beta two", "gamma three"]
        np.testing.assert_array_equal(loaded.encode_batch(texts), enc.encode_batch(texts))

    def test_external_backbone_requires_callable(self):
        with pytest.raises(ConfigError):
            Encoder.create(EncoderConfig(backbone="external-transformer", backbone_dim=4), seed=0)
        enc = Encoder.create(
            EncoderConfig(backbone="external-transformer", backbone_dim=4,
                          projection_hidden_dim=3, projection_output_dim=2),
            seed=0,
            backbone_fn=lambda text: np.array([1.0, 2.0, 3.0, float(len(text))]),
        )
        assert enc.encode("four").d == 2

    def test_embedding_normalized_flag_checked(self):
        with pytest.raises(ValueError):
            Embedding(np.array([3.0, 4.0]), normalized=True)
        Embedding(np.array([0.6, 0.8]), normalized=True)

    def test_clone_is_independent(self):
        enc = Encoder.create(small_config(), seed=0)
        copy = enc.clone()
        copy.head.params["W1"] += 1.0
        assert not np.array_equal(copy.head.params["W1"], enc.head.params["W1"])
