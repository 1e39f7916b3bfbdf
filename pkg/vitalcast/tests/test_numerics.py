"""
Unit Tests for the Numerical Substrate

Seeded streams, Adam and the gradient checker.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from vitalcast.core.errors import ContractViolation, NonFiniteError
from vitalcast.core.numerics import AdamState, Rng, adam_step, grad_check, require_finite


class TestRng:
    """Test seeded random streams"""

    def test_reference_outputs_seed_zero(self):
        """PCG64 via SeedSequence(0) gives the documented first draws"""
        np.testing.assert_allclose(Rng(0).uniform(3), [0.63696169, 0.26978671, 0.04097352], atol=1e-8)

    def test_same_seed_same_stream(self):
        assert np.array_equal(Rng(42).normal(10), Rng(42).normal(10))

    def test_different_seeds_differ(self):
        assert not np.array_equal(Rng(1).uniform(5), Rng(2).uniform(5))

    def test_substream_ignores_parent_draws(self):
        """Child streams depend only on the key path"""
        fresh = Rng(7)
        used = Rng(7)
        used.uniform(100)
        assert np.array_equal(fresh.substream("a", 3).uniform(4), used.substream("a", 3).uniform(4))

    def test_substream_keys_matter(self):
        root = Rng(7)
        assert not np.array_equal(root.substream("a").uniform(4), root.substream("b").uniform(4))
        assert not np.array_equal(root.substream(1, 2).uniform(4), root.substream(2, 1).uniform(4))

    def test_identity_names_the_stream(self):
        root = Rng(9)
        assert root.identity == (9,)
        assert root.substream(4).identity == (9, 4)
        assert root.substream("x").identity == Rng(9).substream("x").identity

    def test_choice_without_replacement(self):
        picked = Rng(3).choice(list("abcdefgh"), 5)
        assert len(picked) == 5
        assert len(set(picked)) == 5

    def test_choice_too_many_raises(self):
        with pytest.raises(ContractViolation):
            Rng(0).choice([1, 2], 3)

    def test_negative_seed_rejected(self):
        with pytest.raises(ContractViolation):
            Rng(-1)

    def test_negative_key_rejected(self):
        with pytest.raises(ContractViolation):
            Rng(0).substream(-3)

    def test_spawn_children_are_independent(self):
        a, b = Rng(5).spawn(2)
        assert not np.array_equal(a.uniform(5), b.uniform(5))

    def test_empty_draws(self):
        assert Rng(0).uniform(0).size == 0
        assert Rng(0).normal(0).size == 0

    def test_shuffle_reproducible(self):
        items = list(range(1, 11))
        assert Rng(12).shuffle(items) == Rng(12).shuffle(items)
        assert sorted(Rng(12).shuffle(items)) == items

    def test_normal_moments(self):
        values = Rng(1).normal(100_000)
        assert abs(values.mean()) < 0.02
        assert abs(values.var() - 1.0) < 0.03


class TestAdam:
    """Test the bias-corrected Adam step"""

    def test_first_step_moves_by_learning_rate(self):
        """With bias correction the first update is lr * sign(g)"""
        params = np.array([1.0, -2.0, 0.5])
        grads = np.array([0.3, -4.0, 1e-3])
        new, state = adam_step(params, grads, AdamState.zeros(3), lr=0.01)
        np.testing.assert_allclose(new, params - 0.01 * np.sign(grads), atol=1e-6)
        assert state.t == 1

    def test_scalar_hand_values(self):
        params, state = adam_step(np.array([1.0]), np.array([1.0]), AdamState.zeros(1), lr=0.001)
        np.testing.assert_allclose(state.m, [0.1])
        np.testing.assert_allclose(state.v, [0.001])
        assert params[0] == pytest.approx(0.9990, abs=1e-7)
        params, state = adam_step(params, np.array([1.0]), state, lr=0.001)
        assert params[0] == pytest.approx(0.9980, abs=1e-7)
        assert state.t == 2

    def test_inputs_not_modified(self):
        params = np.ones(2)
        grads = np.ones(2)
        state = AdamState.zeros(2)
        adam_step(params, grads, state, lr=0.1)
        assert np.array_equal(params, np.ones(2))
        assert state.t == 0
        assert np.array_equal(state.m, np.zeros(2))

    @given(
        st.lists(st.floats(-5, 5), min_size=1, max_size=6),
        st.integers(min_value=0, max_value=20),
    )
    @settings(max_examples=40, deadline=None)
    def test_zero_gradient_is_fixed_point(self, values, warmup):
        """Zero gradient leaves params unchanged whatever the moment state"""
        params = np.array(values)
        state = AdamState.zeros(params.size)
        rng = np.random.default_rng(warmup)
        for _ in range(warmup):
            _, state = adam_step(params, rng.normal(size=params.size), state, lr=0.01)
        new, _ = adam_step(params, np.zeros(params.size), state, lr=0.01)
        assert np.array_equal(new, params)

    def test_dimension_mismatch(self):
        with pytest.raises(ContractViolation):
            adam_step(np.zeros(3), np.zeros(2), AdamState.zeros(3), lr=0.1)

    def test_non_finite_gradient_names_index(self):
        with pytest.raises(NonFiniteError) as exc_info:
            adam_step(np.zeros(3), np.array([0.0, np.nan, 1.0]), AdamState.zeros(3), lr=0.1)
        assert exc_info.value.index == 1

    def test_minimises_quadratic(self):
        params = np.array([3.0, -2.0])
        state = AdamState.zeros(2)
        for _ in range(2000):
            params, state = adam_step(params, 2.0 * params, state, lr=0.05)
        assert np.all(np.abs(params) < 0.05)


class TestGradCheck:
    """Test the central-difference gradient checker"""

    def test_quadratic_passes(self):
        x = np.array([1.0, -2.0, 0.5])
        report = grad_check(lambda v: float(np.sum(v**2)), x, 2.0 * x)
        assert report.passed
        assert report.max_relative_error < 1e-6

    def test_wrong_gradient_fails(self):
        x = np.array([1.0, -2.0])
        report = grad_check(lambda v: float(np.sum(v**2)), x, np.array([2.0, 0.0]))
        assert not report.passed
        assert report.failing == [1]

    def test_params_restored(self):
        x = np.array([0.3, 0.7])
        original = x.copy()
        grad_check(lambda v: float(np.sum(np.sin(v))), x, np.cos(x))
        assert np.array_equal(x, original)

    def test_square_at_three(self):
        report = grad_check(lambda v: float(v[0] ** 2), np.array([3.0]), np.array([6.0]))
        assert report.numeric[0] == pytest.approx(6.0)
        assert report.max_relative_error < 1e-8

    def test_kink_is_flagged(self):
        """|x| at 0: central difference gives 0 against a subgradient of 1"""
        report = grad_check(lambda v: float(abs(v[0])), np.array([0.0]), np.array([1.0]), tol=0.5)
        assert report.failing == [0]

    def test_non_finite_loss(self):
        with pytest.raises(NonFiniteError):
            grad_check(lambda v: float(np.log(v[0])), np.array([0.0]), np.array([1.0]), h=1e-3)

    def test_bad_step(self):
        with pytest.raises(ContractViolation):
            grad_check(lambda v: 0.0, np.zeros(1), np.zeros(1), h=0.0)


class TestRequireFinite:
    def test_reports_first_bad_index(self):
        with pytest.raises(NonFiniteError) as exc_info:
            require_finite(np.array([[1.0, 2.0], [np.inf, 3.0]]), "matrix")
        assert exc_info.value.index == 2
