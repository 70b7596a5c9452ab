"""Cooling gates, circuit schedules and the partner-pairing loop.

Qubit roles for the three-carbon register: target C2 is qubit 0, C1 is
qubit 1 and the reset carbon Cm is qubit 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from .noise import BathModel, NoiseModel, bath_bias_at
from .state import (
    DomainError,
    NumericalError,
    PopulationState,
    _check_index,
    bit_values,
    qubit_bias,
    shannon_entropy,
    uniform_state,
)

C2, C1, CM = 0, 1, 2


class ConvergenceError(RuntimeError):
    def __init__(self, message: str, last: float, previous: float):
        super().__init__(message)
        self.last = last
        self.previous = previous


# -- gates -----------------------------------------------------------------


def _permute(state: PopulationState, dest: np.ndarray) -> PopulationState:
    """Move the population of basis index ``k`` to ``dest[k]``."""
    out = np.empty_like(state.probs)
    out[dest] = state.probs
    return state.with_probs(out)


def ppa_sort(state: PopulationState) -> PopulationState:
    """Sort populations in descending order (ties keep their original order)."""
    order = np.argsort(-state.probs, kind="stable")
    return state.with_probs(state.probs[order])


def swap_qubits(state: PopulationState, i: int, j: int) -> PopulationState:
    n = state.n_qubits
    _check_index(n, i)
    _check_index(n, j)
    if i == j:
        raise DomainError("swap needs two distinct qubits")
    idx = np.arange(2**n)
    bi, bj = bit_values(n, i), bit_values(n, j)
    mask = (1 << (n - 1 - i)) | (1 << (n - 1 - j))
    dest = np.where(bi != bj, idx ^ mask, idx)
    return _permute(state, dest)


def compress3(state: PopulationState, target: int, a: int, b: int) -> PopulationState:
    """Exchange the populations of patterns |011> and |100> on (target, a, b)."""
    n = state.n_qubits
    for q in (target, a, b):
        _check_index(n, q)
    if len({target, a, b}) != 3:
        raise DomainError("compress3 needs three distinct qubits")
    bt, ba, bb = bit_values(n, target), bit_values(n, a), bit_values(n, b)
    hit = ((bt == 0) & (ba == 1) & (bb == 1)) | ((bt == 1) & (ba == 0) & (bb == 0))
    mask = (1 << (n - 1 - target)) | (1 << (n - 1 - a)) | (1 << (n - 1 - b))
    idx = np.arange(2**n)
    return _permute(state, np.where(hit, idx ^ mask, idx))


def refresh(state: PopulationState, reset_index: int, bath_bias: float,
            efficiency: float = 1.0) -> PopulationState:
    """Replace the reset qubit by a fresh thermal qubit of bias ``efficiency * bath_bias``."""
    n = state.n_qubits
    _check_index(n, reset_index)
    if not math.isfinite(bath_bias) or not -1.0 <= bath_bias <= 1.0:
        raise DomainError(f"bath bias {bath_bias!r} outside [-1, 1]")
    if not 0.0 <= efficiency <= 1.0:
        raise DomainError(f"efficiency {efficiency!r} outside [0, 1]")
    eps = efficiency * bath_bias
    t = state.probs.reshape((2,) * n)
    rest = t.sum(axis=reset_index, keepdims=True)
    shape = [1] * n
    shape[reset_index] = 2
    fresh = np.array([(1 + eps) / 2, (1 - eps) / 2]).reshape(shape)
    return state.with_probs((rest * fresh).reshape(-1))


def unitary_cooling_limit(state: PopulationState) -> float:
    """Largest qubit-0 bias reachable by any permutation of the populations."""
    return qubit_bias(ppa_sort(state), 0)


# -- schedules ----------------------------------------------------------------


@dataclass(frozen=True)
class Refresh:
    reset: int
    kind = "refresh"

    def label(self) -> str:
        return f"refresh({self.reset})"

    def indices(self):
        return (self.reset,)


@dataclass(frozen=True)
class Swap:
    i: int
    j: int
    kind = "swap"

    def label(self) -> str:
        return f"swap({self.i},{self.j})"

    def indices(self):
        return (self.i, self.j)


@dataclass(frozen=True)
class Compress3:
    target: int
    a: int
    b: int
    kind = "compress"

    def label(self) -> str:
        return f"compress({self.target},{self.a},{self.b})"

    def indices(self):
        return (self.target, self.a, self.b)


@dataclass(frozen=True)
class PpaSort:
    kind = "sort"

    def label(self) -> str:
        return "sort"

    def indices(self):
        return ()


Step = Union[Refresh, Swap, Compress3, PpaSort]


@dataclass(frozen=True)
class Schedule:
    """``steps`` repeated ``rounds`` times; ``first_round``, when given,
    replaces ``steps`` in round 1."""

    steps: Tuple[Step, ...]
    rounds: int = 1
    first_round: Optional[Tuple[Step, ...]] = None

    def __post_init__(self):
        object.__setattr__(self, "steps", tuple(self.steps))
        if self.first_round is not None:
            object.__setattr__(self, "first_round", tuple(self.first_round))
        if self.rounds < 0:
            raise DomainError("rounds must be >= 0")
        for step in self.all_steps():
            if isinstance(step, Compress3) and len(set(step.indices())) != 3:
                raise DomainError(f"{step.label()}: indices must be distinct")
            if isinstance(step, Swap) and step.i == step.j:
                raise DomainError(f"{step.label()}: indices must be distinct")

    def all_steps(self):
        yield from self.steps
        if self.first_round:
            yield from self.first_round

    def validate(self, n: int) -> None:
        for step in self.all_steps():
            for q in step.indices():
                _check_index(n, q)

    def expanded(self):
        """Yield ``(round, step)`` in execution order."""
        for r in range(1, self.rounds + 1):
            body = self.first_round if (r == 1 and self.first_round is not None) else self.steps
            for step in body:
                yield r, step


def three_qubit_circuit(rounds: int = 4, target: int = C2, partner: int = C1,
                  reset: int = CM) -> Schedule:
    """The refresh/swap/compress circuit of the three-carbon experiment.

    Round 1 loads the bath polarization onto all three spins; later rounds
    reload only ``partner`` and ``reset`` before compressing onto ``target``.
    """
    later = (Refresh(reset), Swap(reset, partner), Refresh(reset),
             Compress3(target, partner, reset))
    first = (Refresh(reset), Swap(reset, partner), Refresh(reset), Swap(reset, target),
             Refresh(reset), Compress3(target, partner, reset))
    return Schedule(later, rounds, first)


def ppa_schedule(n: int, rounds: int) -> Schedule:
    return Schedule((Refresh(n - 1), PpaSort()), rounds)


# -- execution -----------------------------------------------------------------


@dataclass(frozen=True)
class StepRecord:
    round: int
    label: str
    biases: np.ndarray
    entropy: float
    bath_bias: float


@dataclass
class Trajectory:
    initial: StepRecord
    reference: float
    records: List[StepRecord] = field(default_factory=list)
    final_state: Optional[PopulationState] = None

    def relative(self, record: StepRecord) -> np.ndarray:
        """Biases in units of the polarization delivered by the first refresh."""
        if self.reference == 0:
            return np.full_like(record.biases, np.nan)
        return record.biases / self.reference

    def select(self, kind: str) -> List[StepRecord]:
        return [r for r in self.records if r.label.startswith(kind)]


class _Runner:
    """Mutable cursor holding the state, refresh count and elapsed time."""

    def __init__(self, state: PopulationState, bath: BathModel, noise: NoiseModel):
        self.state = state
        self.bath = bath
        self.noise = noise
        self.refreshes = 0
        self.elapsed = 0.0

    def bath_bias(self) -> float:
        return bath_bias_at(self.bath, self.refreshes, self.elapsed)

    def apply(self, step: Step) -> None:
        s = self.state
        if isinstance(step, Refresh):
            s = refresh(s, step.reset, self.bath_bias(), self.bath.efficiency)
            self.refreshes += 1
        else:
            if isinstance(step, Swap):
                s = swap_qubits(s, step.i, step.j)
            elif isinstance(step, Compress3):
                s = compress3(s, step.target, step.a, step.b)
            elif isinstance(step, PpaSort):
                s = ppa_sort(s)
            else:
                raise DomainError(f"unknown step {step!r}")
            s = self.noise.after_gate(s, step.kind)
        self.elapsed += self.noise.duration(step.kind)
        if not np.all(np.isfinite(s.probs)):
            raise NumericalError(f"non-finite populations after {step.label()}")
        self.state = s

    def record(self, rnd: int, label: str) -> StepRecord:
        return StepRecord(rnd, label, self.state.biases(), shannon_entropy(self.state),
                          self.bath_bias())


def run_schedule(initial: PopulationState, schedule: Schedule, bath: BathModel,
                 noise: Optional[NoiseModel] = None) -> Trajectory:
    noise = noise or NoiseModel()
    schedule.validate(initial.n_qubits)
    runner = _Runner(initial, bath, noise)
    traj = Trajectory(runner.record(0, "initial"), bath.reference_bias)
    for rnd, step in schedule.expanded():
        runner.apply(step)
        traj.records.append(runner.record(rnd, step.label()))
    traj.final_state = runner.state
    return traj


def run_ppa(n: int, bath: BathModel, noise: Optional[NoiseModel] = None,
            rounds: int = 1) -> Trajectory:
    """Alternate refresh of qubit ``n-1`` and a population sort, from the uniform state."""
    if n < 2:
        raise DomainError("the partner-pairing loop needs n >= 2")
    return run_schedule(uniform_state(n), ppa_schedule(n, rounds), bath, noise)


def steady_state_bias(n: int, bath: BathModel, noise: Optional[NoiseModel] = None,
                      tol: float = 1e-10, max_rounds: int = 10**5,
                      return_rounds: bool = False):
    """Qubit-0 bias of the partner-pairing loop once it stops moving by ``tol``."""
    if not tol > 0:
        raise DomainError("tol must be positive")
    if n < 2:
        raise DomainError("the partner-pairing loop needs n >= 2")
    noise = noise or NoiseModel()
    runner = _Runner(uniform_state(n), bath, noise)
    steps = ppa_schedule(n, 1).steps
    prev_probs = runner.state.probs
    prev = qubit_bias(runner.state, 0)
    for rounds in range(1, max_rounds + 1):
        for step in steps:
            runner.apply(step)
        cur = qubit_bias(runner.state, 0)
        # qubit 0 can stall for a round while the other qubits keep cooling
        moved = np.max(np.abs(runner.state.probs - prev_probs))
        if abs(cur - prev) < tol and moved < tol:
            return (cur, rounds) if return_rounds else cur
        before = prev
        prev, prev_probs = cur, runner.state.probs
    raise ConvergenceError(
        f"no steady state after {max_rounds} rounds (qubit-0 bias {before!r} -> {cur!r})",
        cur, before)
