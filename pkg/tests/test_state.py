import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hbac.state import (
    DomainError,
    PopulationState,
    qubit_bias,
    shannon_entropy,
    thermal_state,
    uniform_state,
)

from oracles import binary_entropy

biases = st.floats(-1.0, 1.0, allow_nan=False)


def random_state(seed, n):
    rng = np.random.default_rng(seed)
    return PopulationState.normalized(n, rng.random(2**n))


class TestThermalState:
    def test_zero_bias_is_uniform(self):
        np.testing.assert_array_equal(thermal_state([0]).probs, [0.5, 0.5])

    def test_fully_polarized(self):
        np.testing.assert_array_equal(thermal_state([1]).probs, [1.0, 0.0])

    def test_three_qubit_ground_population(self):
        assert thermal_state([0.2, 0.2, 0.2]).probs[0] == pytest.approx(0.6**3, abs=1e-15)

    def test_msb_is_qubit_zero(self):
        # qubit 0 fully polarized, qubit 1 unpolarized: indices 00 and 01 carry everything
        np.testing.assert_allclose(thermal_state([1, 0]).probs, [0.5, 0.5, 0, 0])

    @pytest.mark.parametrize("bad", [1.5, -1.01, float("nan")])
    def test_rejects_bias_out_of_range(self, bad):
        with pytest.raises(DomainError):
            thermal_state([0.1, bad])

    @given(st.lists(biases, min_size=1, max_size=6))
    def test_bias_round_trip(self, bs):
        s = thermal_state(bs)
        np.testing.assert_allclose(s.biases(), bs, atol=1e-12)


class TestQubitBias:
    def test_uniform(self):
        s = uniform_state(3)
        assert [qubit_bias(s, i) for i in range(3)] == [0, 0, 0]

    def test_round_trip_second_qubit(self):
        assert qubit_bias(thermal_state([0.3, -0.1]), 1) == pytest.approx(-0.1, abs=1e-15)

    @pytest.mark.parametrize("i", [-1, 2, 5])
    def test_index_out_of_range(self, i):
        with pytest.raises(DomainError):
            qubit_bias(uniform_state(2), i)


class TestUniformState:
    def test_one_qubit(self):
        np.testing.assert_array_equal(uniform_state(1).probs, [0.5, 0.5])

    def test_two_qubits(self):
        np.testing.assert_array_equal(uniform_state(2).probs, [0.25] * 4)

    def test_three_qubits_unbiased(self):
        np.testing.assert_array_equal(uniform_state(3).biases(), [0, 0, 0])

    def test_rejects_zero(self):
        with pytest.raises(DomainError):
            uniform_state(0)


class TestEntropy:
    def test_uniform(self):
        assert shannon_entropy(uniform_state(3)) == pytest.approx(3.0, abs=1e-15)

    def test_pure(self):
        assert shannon_entropy(thermal_state([1, 1, -1])) == 0.0

    def test_single_biased_qubit(self):
        h = shannon_entropy(thermal_state([0.5]))
        assert h == pytest.approx(binary_entropy(0.75), abs=1e-15)
        assert h == pytest.approx(0.8113, abs=5e-5)

    @settings(max_examples=50)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 5))
    def test_permutation_invariant(self, seed, n):
        s = random_state(seed, n)
        perm = np.random.default_rng(seed + 1).permutation(2**n)
        assert shannon_entropy(s.with_probs(s.probs[perm])) == pytest.approx(
            shannon_entropy(s), abs=1e-12)

    @given(st.integers(0, 2**32 - 1), st.integers(1, 5))
    def test_range(self, seed, n):
        h = shannon_entropy(random_state(seed, n))
        assert -1e-12 <= h <= n + 1e-12


class TestValidation:
    def test_wrong_length(self):
        with pytest.raises(DomainError):
            PopulationState(2, [0.5, 0.5])

    def test_not_normalized(self):
        with pytest.raises(DomainError):
            PopulationState(1, [0.6, 0.6])

    def test_negative_entry(self):
        with pytest.raises(DomainError):
            PopulationState(1, [1.1, -0.1])

    def test_value_semantics(self):
        s = uniform_state(2)
        with pytest.raises(ValueError):
            s.probs[0] = 1.0


@settings(max_examples=50)
@given(st.integers(0, 2**32 - 1), st.integers(2, 5), st.data())
def test_marginals_agree_two_ways(seed, n, data):
    s = random_state(seed, n)
    qubits = data.draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=n, unique=True))
    fast = s.marginal(qubits)
    slow = np.zeros(2 ** len(qubits))
    for k, p in enumerate(s.probs):
        bits = [(k >> (n - 1 - q)) & 1 for q in qubits]
        slow[int("".join(map(str, bits)), 2)] += p
    np.testing.assert_allclose(fast, slow, atol=1e-14, rtol=0)
    for q in range(n):
        m = s.marginal([q])
        assert m[0] - m[1] == pytest.approx(qubit_bias(s, q), abs=1e-14)
