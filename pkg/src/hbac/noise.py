"""Imperfection models: per-gate depolarizing noise and a finite, warming bath."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .state import DomainError, PopulationState

DEFAULT_GATE_DURATIONS = {
    "swap": 1.6e-3,
    "compress": 2.2e-3,
    # spin-lock refresh (matching condition plus ramps)
    "refresh": 35e-6,
    "sort": 2.2e-3,
}

# gate kinds followed by a depolarizing application
DEFAULT_NOISY_KINDS = ("swap", "compress", "sort")


@dataclass(frozen=True)
class NoiseModel:
    depolarizing_per_gate: float = 0.0
    gate_durations: dict = field(default_factory=lambda: dict(DEFAULT_GATE_DURATIONS))
    noisy_kinds: tuple = DEFAULT_NOISY_KINDS
    mode: str = "global"

    def __post_init__(self):
        _check_probability(self.depolarizing_per_gate)
        durations = dict(DEFAULT_GATE_DURATIONS)
        durations.update(self.gate_durations)
        for kind, t in durations.items():
            if kind not in DEFAULT_GATE_DURATIONS:
                raise DomainError(f"unknown gate kind {kind!r}")
            if not math.isfinite(t) or t < 0:
                raise DomainError(f"duration of {kind!r} must be >= 0")
        object.__setattr__(self, "gate_durations", durations)
        for kind in self.noisy_kinds:
            if kind not in DEFAULT_GATE_DURATIONS:
                raise DomainError(f"unknown gate kind {kind!r}")
        object.__setattr__(self, "noisy_kinds", tuple(self.noisy_kinds))
        if self.mode not in ("global", "local"):
            raise DomainError(f"depolarizing mode must be 'global' or 'local', got {self.mode!r}")

    def duration(self, kind: str) -> float:
        return self.gate_durations[kind]

    def after_gate(self, state: PopulationState, kind: str) -> PopulationState:
        """Noise charged to one gate of the given kind."""
        p = self.depolarizing_per_gate
        if p == 0 or kind not in self.noisy_kinds:
            return state
        if self.mode == "global":
            return apply_depolarizing(state, p)
        for i in range(state.n_qubits):
            state = apply_local_depolarizing(state, i, p)
        return state


@dataclass(frozen=True)
class BathModel:
    """Heat-bath bias that drops by a fraction ``heating_per_refresh`` on every
    refresh and decays with ``t1rho`` (seconds; ``None`` disables it)."""

    epsilon0: float
    heating_per_refresh: float = 0.0
    t1rho: Optional[float] = None
    efficiency: float = 1.0

    def __post_init__(self):
        if not math.isfinite(self.epsilon0) or not 0.0 <= self.epsilon0 <= 1.0:
            raise DomainError(f"epsilon0 must lie in [0, 1], got {self.epsilon0!r}")
        if not 0.0 <= self.heating_per_refresh < 1.0:
            raise DomainError("heating_per_refresh must lie in [0, 1)")
        if self.t1rho is not None and not self.t1rho > 0:
            raise DomainError("t1rho must be positive when enabled")
        if not 0.0 <= self.efficiency <= 1.0:
            raise DomainError("efficiency must lie in [0, 1]")

    @property
    def reference_bias(self) -> float:
        """Reset-qubit bias right after the first refresh."""
        return self.efficiency * self.epsilon0


def _check_probability(p: float) -> None:
    if not math.isfinite(p) or not 0.0 <= p <= 1.0:
        raise DomainError(f"probability {p!r} outside [0, 1]")


def apply_depolarizing(state: PopulationState, p: float) -> PopulationState:
    """Mix the whole register with the uniform state: ``(1-p) rho + p I/2^n``."""
    _check_probability(p)
    probs = (1.0 - p) * state.probs + p / state.probs.size
    return state.with_probs(probs)


def apply_local_depolarizing(state: PopulationState, i: int, p: float) -> PopulationState:
    """Depolarize qubit ``i`` alone, leaving the other qubits' joint marginal intact."""
    _check_probability(p)
    n = state.n_qubits
    if not 0 <= i < n:
        raise DomainError(f"qubit index {i!r} out of range for {n} qubits")
    t = state.probs.reshape((2,) * n)
    mixed = np.broadcast_to(t.sum(axis=i, keepdims=True) / 2, t.shape)
    return state.with_probs(((1.0 - p) * t + p * mixed).reshape(-1))


def bath_bias_at(bath: BathModel, refresh_count: int, elapsed_time: float) -> float:
    if refresh_count < 0 or elapsed_time < 0:
        raise DomainError("refresh_count and elapsed_time must be non-negative")
    bias = bath.epsilon0 * (1.0 - bath.heating_per_refresh) ** refresh_count
    if bath.t1rho is not None:
        bias *= math.exp(-elapsed_time / bath.t1rho)
    return bias
