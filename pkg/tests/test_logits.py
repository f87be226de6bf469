"""Logit kernel operations: spec examples, invariants, property tests."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tokrail.logits import (
    SUPPRESSED,
    ContractDeadlockError,
    Vocabulary,
    apply_bias,
    apply_mask,
    apply_temperature,
    entropy,
    sample,
    softmax,
    top_k,
)

from conftest import random_logits


finite_logits = st.lists(
    st.floats(min_value=-30, max_value=30, allow_nan=False), min_size=2, max_size=40
).map(lambda xs: np.array(xs, dtype=np.float64))


class TestSoftmax:
    def test_symmetry(self):
        np.testing.assert_allclose(softmax(np.array([0.0, 0.0]), 1.0), [0.5, 0.5])

    def test_ln3(self):
        np.testing.assert_allclose(softmax(np.array([math.log(3), 0.0]), 1.0), [0.75, 0.25], atol=1e-12)

    def test_suppressed_entry(self):
        # Oracle: direct exp/normalize of the two live entries.
        p = softmax(np.array([2.0, SUPPRESSED, 0.0]), 1.0)
        e2, e0 = math.exp(2.0), math.exp(0.0)
        np.testing.assert_allclose(p, [e2 / (e2 + e0), 0.0, e0 / (e2 + e0)], atol=1e-12)
        assert p[1] == 0.0

    def test_rejects_bad_inputs(self):
        with pytest.raises(ValueError):
            softmax(np.array([1.0, np.nan]), 1.0)
        with pytest.raises(ValueError):
            softmax(np.array([1.0, np.inf]), 1.0)
        with pytest.raises(ValueError):
            softmax(np.array([SUPPRESSED, SUPPRESSED]), 1.0)
        with pytest.raises(ValueError):
            softmax(np.array([1.0, 2.0]), 0.0)

    @given(finite_logits)
    @settings(deadline=None)
    def test_sums_to_one(self, z):
        assert abs(softmax(z, 1.0).sum() - 1.0) < 1e-9

    @given(finite_logits, st.floats(min_value=-5, max_value=5, allow_nan=False))
    @settings(deadline=None)
    def test_shift_invariance(self, z, c):
        np.testing.assert_allclose(softmax(z, 1.0), softmax(z + c, 1.0), atol=1e-9)

    def test_large_magnitudes_stable(self):
        p = softmax(np.array([1000.0, 999.0, -1000.0]), 1.0)
        assert np.isfinite(p).all() and abs(p.sum() - 1.0) < 1e-9


class TestEntropy:
    def test_uniform(self):
        assert entropy(np.full(4, 0.25)) == pytest.approx(math.log(4), abs=1e-9)

    def test_one_hot(self):
        assert entropy(np.array([0.0, 1.0, 0.0])) == 0.0

    def test_three_quarters(self):
        # Oracle: direct formula evaluation.
        expected = -(0.75 * math.log(0.75) + 0.25 * math.log(0.25))
        assert entropy(np.array([0.75, 0.25])) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.562335, abs=1e-6)


class TestTopK:
    def test_basic(self):
        assert top_k(np.array([0.1, 0.7, 0.2]), 2) == [(1, 0.7), (2, 0.2)]

    def test_tie_lower_id(self):
        assert top_k(np.array([0.5, 0.5]), 1) == [(0, 0.5)]

    def test_full(self):
        assert [i for i, _ in top_k(np.full(4, 0.25), 4)] == [0, 1, 2, 3]

    def test_k_out_of_range(self):
        with pytest.raises(ValueError):
            top_k(np.array([1.0]), 2)
        with pytest.raises(ValueError):
            top_k(np.array([1.0]), 0)


class TestApplyBias:
    def test_adds_on_favored(self):
        np.testing.assert_array_equal(apply_bias(np.ones(3), {0}, 2.0), [3.0, 1.0, 1.0])

    def test_empty_set_identity(self):
        z = np.array([1.5, -2.0, 0.0])
        np.testing.assert_array_equal(apply_bias(z, set(), 5.0), z)

    def test_bias_then_softmax(self):
        # Oracle: exp/normalize by hand.
        p = softmax(apply_bias(np.zeros(2), {1}, math.log(3)), 1.0)
        np.testing.assert_allclose(p, [0.25, 0.75], atol=1e-12)

    def test_suppressed_stays_suppressed(self):
        out = apply_bias(np.array([0.0, SUPPRESSED]), {0, 1}, 4.0)
        assert out[1] == SUPPRESSED

    def test_id_outside_vocab(self):
        with pytest.raises(ValueError):
            apply_bias(np.zeros(3), {3}, 1.0)

    @given(finite_logits, st.floats(min_value=0.1, max_value=8, allow_nan=False))
    @settings(deadline=None)
    def test_odds_multiplier(self, z, beta):
        # Odds of a favored vs unfavored token scale by exp(beta) at tau=1.
        favored = {0}
        p0 = softmax(z, 1.0)
        p1 = softmax(apply_bias(z, favored, beta), 1.0)
        odds0 = p0[0] / p0[1]
        odds1 = p1[0] / p1[1]
        assert odds1 / odds0 == pytest.approx(math.exp(beta), rel=1e-6)


class TestApplyTemperature:
    def test_scales(self):
        np.testing.assert_array_equal(apply_temperature(np.array([2.0, 0.0]), 0.5), [4.0, 0.0])

    def test_identity_at_one(self):
        z = np.array([1.0, -2.0, 0.5])
        np.testing.assert_array_equal(apply_temperature(z, 1.0), z)

    def test_rejects_widening(self):
        for tau in (0.0, -1.0, 1.5):
            with pytest.raises(ValueError):
                apply_temperature(np.array([1.0, 0.0]), tau)

    def test_entropy_strictly_decreases(self):
        z = np.array([1.0, 0.0, -1.0])
        h_sharp = entropy(softmax(apply_temperature(z, 0.5), 1.0))
        h_base = entropy(softmax(z, 1.0))
        assert h_sharp < h_base

    def test_acceptance_style_sweep(self, rng):
        # argmax invariance exact; entropy never increases.
        for tau in (0.5, 0.7, 0.9):
            for _ in range(200):
                z = random_logits(rng, int(rng.integers(2, 40)))
                p0 = softmax(z, 1.0)
                p1 = softmax(apply_temperature(z, tau), 1.0)
                assert int(np.argmax(p1)) == int(np.argmax(p0))
                assert entropy(p1) <= entropy(p0) + 1e-12


class TestApplyMask:
    def test_suppresses_others(self):
        out = apply_mask(np.array([2.0, 1.0, 0.0]), {0})
        assert out[0] == 2.0 and out[1] == SUPPRESSED and out[2] == SUPPRESSED

    def test_all_allowed_identity(self):
        z = np.array([2.0, 1.0, 0.0])
        np.testing.assert_array_equal(apply_mask(z, {0, 1, 2}), z)

    def test_invalid_mass_exactly_zero(self):
        p = softmax(apply_mask(np.array([3.0, 1.0, -2.0, 0.5]), {1, 3}), 1.0)
        assert p[0] == 0.0 and p[2] == 0.0

    def test_empty_allowlist_is_deadlock(self):
        with pytest.raises(ContractDeadlockError):
            apply_mask(np.array([1.0, 2.0]), set())

    @given(finite_logits, st.data())
    @settings(deadline=None)
    def test_allowed_ratios_preserved(self, z, data):
        n = len(z)
        allowed = data.draw(
            st.sets(st.integers(min_value=0, max_value=n - 1), min_size=1, max_size=n)
        )
        p0 = softmax(z, 1.0)
        p1 = softmax(apply_mask(z, allowed), 1.0)
        sub = sum(p0[i] for i in allowed)
        for i in allowed:
            assert p1[i] == pytest.approx(p0[i] / sub, abs=1e-9)


class TestSample:
    def test_greedy(self):
        assert sample(np.array([0.1, 0.9]), "greedy") == 1

    def test_greedy_tie_lower_id(self):
        assert sample(np.array([0.45, 0.45, 0.1]), "greedy") == 0

    def test_one_hot_multinomial(self):
        for seed in (0, 7, 99):
            r = np.random.default_rng(seed)
            assert sample(np.array([0.0, 0.0, 0.0, 1.0]), "multinomial", r) == 3

    def test_multinomial_frequency(self):
        # Law-of-large-numbers check against the underlying distribution.
        r = np.random.default_rng(5)
        dist = np.array([0.25, 0.75])
        draws = [sample(dist, "multinomial", r) for _ in range(100_000)]
        assert np.mean(draws) == pytest.approx(0.75, abs=0.01)

    def test_multinomial_deterministic_per_seed(self):
        dist = np.array([0.3, 0.3, 0.4])
        a = [sample(dist, "multinomial", np.random.default_rng(3)) for _ in range(5)]
        b = [sample(dist, "multinomial", np.random.default_rng(3)) for _ in range(5)]
        assert a == b

    def test_multinomial_never_picks_zero_prob(self):
        r = np.random.default_rng(11)
        dist = np.array([0.0, 1.0, 0.0])
        assert all(sample(dist, "multinomial", r) == 1 for _ in range(200))


class TestVocabulary:
    def test_ids_and_texts(self):
        v = Vocabulary(["a", "bc", "<eos>"])
        assert v.size == 3
        assert v.text(1) == "bc"
        assert v.text_bytes(2) == b"<eos>"
        assert v.id_of("bc") == 1
        assert v.decode([0, 1, 2], skip=frozenset({2})) == "abc"

    def test_rejects_empty_text(self):
        with pytest.raises(ValueError):
            Vocabulary(["a", ""])
        with pytest.raises(ValueError):
            Vocabulary([])
