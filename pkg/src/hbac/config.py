"""Run configuration: YAML sections mapped onto dataclasses, unknown keys rejected."""

from __future__ import annotations

import dataclasses
import typing
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import yaml

from . import engine
from .engine import Compress3, PpaSort, Refresh, Schedule, Swap
from .grape import GrapeConfig
from .noise import DEFAULT_GATE_DURATIONS, DEFAULT_NOISY_KINDS, BathModel, NoiseModel
from .spin import EnsembleSpec, SpinSystem, standard_gates
from .state import DomainError


class ConfigError(DomainError):
    pass


@dataclass
class SystemSection:
    n_qubits: int = 3
    target_index: int = 0
    partner_index: int = 1
    reset_index: int = 2
    names: List[str] = field(default_factory=lambda: ["C2", "C1", "Cm"])


@dataclass
class BathSection:
    epsilon0: float = 0.01
    heating_per_refresh: float = 0.0
    t1rho: Optional[float] = None
    efficiency: float = 1.0


@dataclass
class NoiseSection:
    depolarizing_per_gate: float = 0.0
    gate_durations: Dict[str, float] = field(default_factory=lambda: dict(DEFAULT_GATE_DURATIONS))
    placement: List[str] = field(default_factory=lambda: list(DEFAULT_NOISY_KINDS))
    mode: str = "global"


@dataclass
class ScheduleSection:
    kind: str = "three-qubit-circuit"
    rounds: int = 4
    steps: List[str] = field(default_factory=list)
    first_round: Optional[List[str]] = None


@dataclass
class SteadySection:
    tol: float = 1e-10
    max_rounds: int = 100000


@dataclass
class SweepSection:
    n: List[int] = field(default_factory=lambda: [3])
    epsilon: List[float] = field(default_factory=lambda: [0.87])
    depolarizing: List[float] = field(default_factory=lambda: [0.0, 0.01])
    workers: int = 1


@dataclass
class HamiltonianSection:
    # placeholder two-spin system in kHz; rows of dipolar/j_couplings are [i, j, value]
    chemical_shifts: List[float] = field(default_factory=lambda: [2.0, -1.5])
    dipolar: List[List[float]] = field(default_factory=lambda: [[0, 1, 2.0]])
    j_couplings: List[List[float]] = field(default_factory=lambda: [[0, 1, 0.05]])


@dataclass
class EnsembleSection:
    rf_scales: List[float] = field(default_factory=lambda: [0.95, 0.975, 1.0, 1.025, 1.05])
    offsets: List[float] = field(default_factory=lambda: [-150.0, -75.0, 0.0, 75.0, 150.0])
    weights: Optional[List[List[float]]] = None


@dataclass
class GrapeSection:
    goal: str = "swap01"
    n_samples: int = 100
    dt: float = 1e-5
    max_iterations: int = 2000
    target_fidelity: float = 0.9975
    initial_step_size: float = 1.0
    backtrack: float = 0.5
    smoothness_weight: float = 0.0
    amplitude_ceiling: float = 10.0
    seed: int = 0
    gradient_mode: str = "exact"
    fd_step: float = 1e-6
    stall_window: int = 20
    direction: str = "lbfgs"
    memory: int = 10


@dataclass
class OutputSection:
    directory: str = "."
    trajectory_csv: str = "trajectory.csv"
    summary_json: str = "summary.json"
    steady_json: str = "steady.json"
    sweep_csv: str = "sweep.csv"
    pulse_file: str = "pulse.txt"
    history_csv: str = "history.csv"
    verify_json: str = "verify.json"

    def path(self, name: str) -> Path:
        return Path(self.directory) / getattr(self, name)


@dataclass
class RunConfig:
    system: SystemSection = field(default_factory=SystemSection)
    bath: BathSection = field(default_factory=BathSection)
    noise: NoiseSection = field(default_factory=NoiseSection)
    schedule: ScheduleSection = field(default_factory=ScheduleSection)
    steady: SteadySection = field(default_factory=SteadySection)
    sweep: SweepSection = field(default_factory=SweepSection)
    hamiltonian: HamiltonianSection = field(default_factory=HamiltonianSection)
    ensemble: EnsembleSection = field(default_factory=EnsembleSection)
    grape: GrapeSection = field(default_factory=GrapeSection)
    output: OutputSection = field(default_factory=OutputSection)

    # -- model objects --------------------------------------------------------

    def bath_model(self) -> BathModel:
        b = self.bath
        return BathModel(b.epsilon0, b.heating_per_refresh, b.t1rho, b.efficiency)

    def noise_model(self) -> NoiseModel:
        n = self.noise
        return NoiseModel(n.depolarizing_per_gate, dict(n.gate_durations),
                          tuple(n.placement), n.mode)

    def build_schedule(self) -> Schedule:
        s, sysc = self.schedule, self.system
        if s.kind == "three-qubit-circuit":
            return engine.three_qubit_circuit(s.rounds, sysc.target_index, sysc.partner_index,
                                        sysc.reset_index)
        if s.kind == "ppa":
            return Schedule((Refresh(sysc.reset_index), PpaSort()), s.rounds)
        if s.kind == "explicit":
            first = None if s.first_round is None else [parse_step(t) for t in s.first_round]
            return Schedule([parse_step(t) for t in s.steps], s.rounds, first)
        raise ConfigError("schedule.kind must be three-qubit-circuit, ppa or explicit, "
                          f"got {s.kind!r}")

    def spin_system(self) -> SpinSystem:
        h = self.hamiltonian
        return SpinSystem(tuple(h.chemical_shifts), _pairs(h.dipolar, "dipolar"),
                          _pairs(h.j_couplings, "j_couplings"))

    def ensemble_spec(self) -> EnsembleSpec:
        e = self.ensemble
        return EnsembleSpec(tuple(e.rf_scales), tuple(e.offsets),
                            None if e.weights is None else np.array(e.weights, dtype=float))

    def grape_config(self) -> GrapeConfig:
        kw = dataclasses.asdict(self.grape)
        kw.pop("goal")
        return GrapeConfig(**kw)

    def goal_unitary(self) -> np.ndarray:
        n = len(self.hamiltonian.chemical_shifts)
        gates = standard_gates(n)
        if self.grape.goal not in gates:
            raise ConfigError(f"unknown goal {self.grape.goal!r} for {n} spins; "
                              f"choose from {sorted(gates)}")
        return gates[self.grape.goal]

    def qubit_names(self) -> List[str]:
        n = self.system.n_qubits
        names = list(self.system.names)
        if len(names) != n:
            names = [f"q{i}" for i in range(n)]
        return names

    def validate(self) -> None:
        """Build every model object once so bad values surface as ConfigError."""
        try:
            sysc = self.system
            if not 1 <= sysc.n_qubits <= 20:
                raise ConfigError("system.n_qubits must lie in [1, 20]")
            for name in ("target_index", "partner_index", "reset_index"):
                if not 0 <= getattr(sysc, name) < sysc.n_qubits:
                    raise ConfigError(f"system.{name} out of range")
            self.bath_model()
            self.noise_model()
            self.build_schedule().validate(sysc.n_qubits)
            if self.steady.tol <= 0 or self.steady.max_rounds < 1:
                raise ConfigError("steady.tol must be > 0 and steady.max_rounds >= 1")
            if self.sweep.workers < 1:
                raise ConfigError("sweep.workers must be >= 1")
            self.spin_system()
            self.ensemble_spec()
            self.grape_config()
            self.goal_unitary()
        except ConfigError:
            raise
        except (DomainError, TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc


def parse_step(text: str):
    """``"refresh 2"``, ``"swap 2 1"``, ``"compress 0 1 2"`` or ``"sort"``."""
    parts = str(text).split()
    if not parts:
        raise ConfigError("empty schedule step")
    kind, args = parts[0].lower(), parts[1:]
    try:
        idx = [int(a) for a in args]
    except ValueError:
        raise ConfigError(f"bad schedule step {text!r}") from None
    arity = {"refresh": 1, "swap": 2, "compress": 3, "sort": 0}
    if kind not in arity or len(idx) != arity[kind]:
        raise ConfigError(f"bad schedule step {text!r}")
    if kind == "refresh":
        return Refresh(*idx)
    if kind == "swap":
        return Swap(*idx)
    if kind == "compress":
        return Compress3(*idx)
    return PpaSort()


def _pairs(rows, name):
    out = {}
    for row in rows:
        if len(row) != 3:
            raise ConfigError(f"hamiltonian.{name} rows must be [i, j, value_kHz]")
        i, j, v = row
        if int(i) != i or int(j) != j:
            raise ConfigError(f"hamiltonian.{name}: spin indices must be integers")
        out[(int(i), int(j))] = float(v)
    return out


# -- (de)serialization ------------------------------------------------------------


def _coerce(value, hint, where):
    origin = typing.get_origin(hint)
    args = typing.get_args(hint)
    if origin is typing.Union:
        if value is None:
            return None
        inner = [a for a in args if a is not type(None)][0]
        return _coerce(value, inner, where)
    if origin in (list, List):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(f"{where}: expected a list")
        return [_coerce(v, args[0], f"{where}[{k}]") for k, v in enumerate(value)]
    if origin in (dict, Dict):
        if not isinstance(value, dict):
            raise ConfigError(f"{where}: expected a mapping")
        return {str(k): _coerce(v, args[1], f"{where}.{k}") for k, v in value.items()}
    if hint is bool:
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected true/false")
        return value
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or int(value) != value:
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    if hint is float:
        if isinstance(value, bool):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        try:
            return float(value)
        except (TypeError, ValueError):
            raise ConfigError(f"{where}: expected a number, got {value!r}") from None
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    raise TypeError(f"unsupported config type {hint!r}")


def _section_from(cls, data, where):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{where}: unknown keys {unknown}")
    kwargs = {k: _coerce(v, hints[k], f"{where}.{k}") for k, v in data.items()}
    return cls(**kwargs)


def config_from_dict(data) -> RunConfig:
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a mapping of sections")
    hints = typing.get_type_hints(RunConfig)
    unknown = sorted(set(data) - set(hints))
    if unknown:
        raise ConfigError(f"unknown sections {unknown}")
    cfg = RunConfig(**{k: _section_from(hints[k], v, k) for k, v in data.items()})
    cfg.validate()
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed YAML: {exc}") from exc
    return config_from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    return yaml.safe_dump(dataclasses.asdict(cfg), sort_keys=False, default_flow_style=None)
