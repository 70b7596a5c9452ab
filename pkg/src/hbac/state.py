"""Diagonal n-qubit states.

Basis index convention: qubit 0 is the most significant bit, so index
``k`` has qubit ``i`` in state ``(k >> (n - 1 - i)) & 1``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

NORM_TOL = 1e-12
MAX_QUBITS = 20


class DomainError(ValueError):
    """Raised when an argument is outside an operation's domain."""


class NumericalError(ArithmeticError):
    """Raised when a computation produces non-finite values."""


def bit_values(n: int, i: int) -> np.ndarray:
    """Bit ``i`` of every basis index of an ``n``-qubit register."""
    return (np.arange(2**n) >> (n - 1 - i)) & 1


@dataclass(frozen=True)
class PopulationState:
    """Probability of each computational basis state (the diagonal of rho)."""

    n_qubits: int
    probs: np.ndarray

    def __post_init__(self):
        n = self.n_qubits
        if not isinstance(n, (int, np.integer)) or n < 1:
            raise DomainError(f"n_qubits must be a positive integer, got {n!r}")
        if n > MAX_QUBITS:
            raise DomainError(f"n_qubits={n} exceeds the limit of {MAX_QUBITS}")
        p = np.array(self.probs, dtype=float)
        if p.shape != (2**n,):
            raise DomainError(f"expected {2**n} probabilities, got shape {p.shape}")
        if not np.all(np.isfinite(p)):
            raise NumericalError("non-finite probability")
        if np.any(p < -NORM_TOL) or np.any(p > 1 + NORM_TOL):
            raise DomainError("probabilities must lie in [0, 1]")
        total = p.sum()
        if abs(total - 1.0) > NORM_TOL:
            raise DomainError(f"probabilities sum to {total!r}, not 1")
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "n_qubits", int(n))
        object.__setattr__(self, "probs", p)

    @classmethod
    def normalized(cls, n_qubits: int, probs: Sequence[float]) -> "PopulationState":
        """Build a state, rescaling ``probs`` to unit sum first."""
        p = np.asarray(probs, dtype=float)
        total = p.sum()
        if not np.isfinite(total) or total <= 0:
            raise DomainError("cannot normalize probabilities")
        return cls(n_qubits, p / total)

    def with_probs(self, probs: np.ndarray) -> "PopulationState":
        return PopulationState(self.n_qubits, probs)

    def biases(self) -> np.ndarray:
        return np.array([qubit_bias(self, i) for i in range(self.n_qubits)])

    def marginal(self, qubits: Sequence[int]) -> np.ndarray:
        """Joint distribution of ``qubits`` (in the given order), MSB first."""
        for q in qubits:
            _check_index(self.n_qubits, q)
        t = self.probs.reshape((2,) * self.n_qubits)
        drop = tuple(k for k in range(self.n_qubits) if k not in qubits)
        m = t.sum(axis=drop)
        kept = sorted(qubits)
        m = np.transpose(m, [kept.index(q) for q in qubits])
        return m.reshape(-1)

    def __eq__(self, other):
        if not isinstance(other, PopulationState):
            return NotImplemented
        return self.n_qubits == other.n_qubits and np.array_equal(self.probs, other.probs)

    __hash__ = None


def _check_index(n: int, i: int) -> None:
    if not isinstance(i, (int, np.integer)) or not 0 <= i < n:
        raise DomainError(f"qubit index {i!r} out of range for {n} qubits")


def _check_bias(b: float) -> None:
    if not np.isfinite(b) or not -1.0 <= b <= 1.0:
        raise DomainError(f"bias {b!r} outside [-1, 1]")


def thermal_state(biases: Sequence[float]) -> PopulationState:
    """Product state with ``P(qubit i = 0) = (1 + biases[i]) / 2``."""
    biases = [float(b) for b in biases]
    if not biases:
        raise DomainError("need at least one qubit")
    for b in biases:
        _check_bias(b)
    p = np.ones(1)
    for b in biases:
        p = np.kron(p, [(1 + b) / 2, (1 - b) / 2])
    return PopulationState(len(biases), p)


def uniform_state(n: int) -> PopulationState:
    if not isinstance(n, (int, np.integer)) or n < 1:
        raise DomainError(f"n must be >= 1, got {n!r}")
    if n > MAX_QUBITS:
        raise DomainError(f"n={n} exceeds the limit of {MAX_QUBITS}")
    return PopulationState(n, np.full(2**n, 2.0**-n))


def qubit_bias(state: PopulationState, i: int) -> float:
    """P(qubit i = 0) - P(qubit i = 1)."""
    _check_index(state.n_qubits, i)
    sign = 1 - 2 * bit_values(state.n_qubits, i)
    return float(np.dot(sign, state.probs))


def shannon_entropy(state: PopulationState) -> float:
    """Entropy of the population vector in bits."""
    p = state.probs[state.probs > 0]
    return float(-np.sum(p * np.log2(p)))
