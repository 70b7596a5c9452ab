"""Spin Hamiltonians, piecewise-constant propagation and gate fidelity.

Frequencies are configured in kHz. A chemical shift ``w`` contributes
``pi * w * sigma_z`` (so ``w`` is the precession frequency), a dipolar constant
``D`` contributes ``pi/2 * D * (2 ZZ - XX - YY)`` and a J constant contributes
``pi/2 * J * (ZZ + XX + YY)``. Generators are returned in rad/s.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import reduce
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from .state import DomainError, NumericalError

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)


def khz_to_rad(value_khz):
    """Angular prefactor for a frequency given in kHz: ``pi * 1e3 * value``.

    Combined with the Pauli operators this reproduces ``pi * w * sigma``.
    """
    return np.pi * 1e3 * np.asarray(value_khz, dtype=float)


def embed(op: np.ndarray, site: int, n: int) -> np.ndarray:
    """``op`` acting on spin ``site`` of ``n`` (spin 0 is the leftmost factor)."""
    factors = [np.eye(2, dtype=complex)] * n
    factors[site] = op
    return reduce(np.kron, factors)


def collective(op: np.ndarray, n: int) -> np.ndarray:
    return sum(embed(op, i, n) for i in range(n))


def _pair_map(values, n: int, name: str) -> Dict[Tuple[int, int], float]:
    out = {}
    for key, v in dict(values or {}).items():
        i, j = (int(k) for k in key)
        if not 0 <= i < j < n:
            raise DomainError(f"{name} coupling {key!r}: need 0 <= i < j < {n}")
        if not math.isfinite(v):
            raise DomainError(f"{name} coupling {key!r} is not finite")
        out[(i, j)] = float(v)
    return out


@dataclass(frozen=True)
class SpinSystem:
    """Chemical shifts and pairwise couplings, all in kHz."""

    chemical_shifts: Tuple[float, ...]
    dipolar: Dict[Tuple[int, int], float] = field(default_factory=dict)
    j_couplings: Dict[Tuple[int, int], float] = field(default_factory=dict)

    def __post_init__(self):
        shifts = tuple(float(w) for w in self.chemical_shifts)
        if not shifts:
            raise DomainError("need at least one spin")
        if not all(math.isfinite(w) for w in shifts):
            raise DomainError("chemical shifts must be finite")
        object.__setattr__(self, "chemical_shifts", shifts)
        n = len(shifts)
        object.__setattr__(self, "dipolar", _pair_map(self.dipolar, n, "dipolar"))
        object.__setattr__(self, "j_couplings", _pair_map(self.j_couplings, n, "J"))

    @property
    def n_spins(self) -> int:
        return len(self.chemical_shifts)

    @property
    def dim(self) -> int:
        return 2**self.n_spins


@dataclass(frozen=True)
class ControlPulse:
    """Piecewise-constant rf amplitudes ``(u_x, u_y)`` in kHz, each held for ``dt`` seconds."""

    dt: float
    samples: np.ndarray

    def __post_init__(self):
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise DomainError(f"dt must be positive, got {self.dt!r}")
        s = np.array(self.samples, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(s)):
            raise DomainError("pulse samples must be finite")
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def n_samples(self) -> int:
        return len(self.samples)

    @property
    def duration(self) -> float:
        return self.dt * self.n_samples

    def max_amplitude(self) -> float:
        if not self.n_samples:
            return 0.0
        return float(np.max(np.hypot(self.samples[:, 0], self.samples[:, 1])))

    def __eq__(self, other):
        if not isinstance(other, ControlPulse):
            return NotImplemented
        return self.dt == other.dt and np.array_equal(self.samples, other.samples)

    __hash__ = None


@dataclass(frozen=True)
class EnsembleSpec:
    """Grid of rf scale factors and static-field offsets (Hz) with weights.

    ``weights`` has shape ``(len(rf_scales), len(offsets))``; equal weights when omitted.
    """

    rf_scales: Tuple[float, ...] = tuple(np.linspace(0.95, 1.05, 5))
    offsets: Tuple[float, ...] = tuple(np.linspace(-150.0, 150.0, 5))
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        scales = tuple(float(x) for x in self.rf_scales)
        offsets = tuple(float(x) for x in self.offsets)
        if not scales or not offsets:
            raise DomainError("ensemble grids must be non-empty")
        if self.weights is None:
            w = np.full((len(scales), len(offsets)), 1.0 / (len(scales) * len(offsets)))
        else:
            w = np.array(self.weights, dtype=float).reshape(len(scales), len(offsets))
            if np.any(w < 0) or not np.isclose(w.sum(), 1.0, rtol=0, atol=1e-12):
                raise DomainError("ensemble weights must be non-negative and sum to 1")
        w.setflags(write=False)
        object.__setattr__(self, "rf_scales", scales)
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, rf_spread=0.05, offset_spread=150.0, n_rf=5, n_offset=5):
        return cls(tuple(np.linspace(1 - rf_spread, 1 + rf_spread, n_rf)),
                   tuple(np.linspace(-offset_spread, offset_spread, n_offset)))

    @classmethod
    def nominal(cls):
        return cls((1.0,), (0.0,))

    def members(self):
        """``(rf_scale, offset, weight)`` in fixed row-major order."""
        for a, s in enumerate(self.rf_scales):
            for b, o in enumerate(self.offsets):
                yield s, o, float(self.weights[a, b])


def build_drift(sys: SpinSystem) -> np.ndarray:
    n = sys.n_spins
    h = np.zeros((sys.dim, sys.dim), dtype=complex)
    for i, w in enumerate(sys.chemical_shifts):
        h += khz_to_rad(w) * embed(SIGMA_Z, i, n)
    for (i, j), d in sys.dipolar.items():
        zz = embed(SIGMA_Z, i, n) @ embed(SIGMA_Z, j, n)
        xx = embed(SIGMA_X, i, n) @ embed(SIGMA_X, j, n)
        yy = embed(SIGMA_Y, i, n) @ embed(SIGMA_Y, j, n)
        h += khz_to_rad(d) / 2 * (2 * zz - xx - yy)
    for (i, j), jc in sys.j_couplings.items():
        zz = embed(SIGMA_Z, i, n) @ embed(SIGMA_Z, j, n)
        xx = embed(SIGMA_X, i, n) @ embed(SIGMA_X, j, n)
        yy = embed(SIGMA_Y, i, n) @ embed(SIGMA_Y, j, n)
        h += khz_to_rad(jc) / 2 * (zz + xx + yy)
    return h


def offset_generator(sys: SpinSystem, offset_hz: float) -> np.ndarray:
    """Uniform static-field shift of every spin by ``offset_hz``."""
    return np.pi * offset_hz * collective(SIGMA_Z, sys.n_spins)


def control_operators(sys: SpinSystem) -> Tuple[np.ndarray, np.ndarray]:
    """Derivatives of the control generator w.r.t. ``u_x`` and ``u_y`` (per kHz, unit rf scale)."""
    n = sys.n_spins
    return khz_to_rad(1.0) * collective(SIGMA_X, n), khz_to_rad(1.0) * collective(SIGMA_Y, n)


def control_generator(sys: SpinSystem, u_x: float, u_y: float, rf_scale: float = 1.0) -> np.ndarray:
    """Global rf on all spins: ``pi * rf_scale * (u_x sum sigma_x + u_y sum sigma_y)``."""
    if not all(math.isfinite(v) for v in (u_x, u_y, rf_scale)):
        raise DomainError("control amplitudes must be finite")
    hx, hy = control_operators(sys)
    return rf_scale * (u_x * hx + u_y * hy)


def step_generators(sys: SpinSystem, pulse: ControlPulse, rf_scale: float = 1.0,
                    offset: float = 0.0, drift: Optional[np.ndarray] = None) -> np.ndarray:
    """Generator of every time step, shape ``(n_samples, d, d)``."""
    h0 = build_drift(sys) if drift is None else drift
    h0 = h0 + offset_generator(sys, offset)
    hx, hy = control_operators(sys)
    ux = pulse.samples[:, 0, None, None]
    uy = pulse.samples[:, 1, None, None]
    return h0[None] + rf_scale * (ux * hx[None] + uy * hy[None])


def expm_hermitian(h: np.ndarray, t: float):
    """``exp(-i h t)`` for (stacked) Hermitian ``h``; also returns the eigensystem."""
    evals, evecs = np.linalg.eigh(h)
    phases = np.exp(-1j * evals * t)
    u = (evecs * phases[..., None, :]) @ np.conj(np.swapaxes(evecs, -1, -2))
    return u, evals, evecs


def ordered_product(steps: np.ndarray, dim: int) -> np.ndarray:
    """``steps[-1] @ ... @ steps[0]``."""
    u = np.eye(dim, dtype=complex)
    for s in steps:
        u = s @ u
    return u


def propagate(sys: SpinSystem, pulse: ControlPulse, rf_scale: float = 1.0,
              offset: float = 0.0) -> np.ndarray:
    if pulse.n_samples == 0:
        return np.eye(sys.dim, dtype=complex)
    steps, _, _ = expm_hermitian(step_generators(sys, pulse, rf_scale, offset), pulse.dt)
    u = ordered_product(steps, sys.dim)
    if not np.all(np.isfinite(u)):
        raise NumericalError("non-finite propagator")
    return u


def gate_fidelity(u_goal: np.ndarray, u_sim: np.ndarray) -> float:
    """``|tr(U_goal^dag U_sim)|^2 / d^2``, insensitive to global phase."""
    u_goal = np.asarray(u_goal)
    u_sim = np.asarray(u_sim)
    if u_goal.ndim != 2 or u_goal.shape != u_sim.shape or u_goal.shape[0] != u_goal.shape[1]:
        raise DomainError(f"shape mismatch: {u_goal.shape} vs {u_sim.shape}")
    d = u_goal.shape[0]
    overlap = np.trace(np.conj(u_goal).T @ u_sim)
    return float(min(abs(overlap) ** 2 / d**2, 1.0))


def ensemble_generators(sys: SpinSystem, pulse: ControlPulse, ens: EnsembleSpec,
                        drift: Optional[np.ndarray] = None) -> np.ndarray:
    """Step generators for every grid member, shape ``(n_members, n_samples, d, d)``
    with members in :meth:`EnsembleSpec.members` order."""
    h0 = build_drift(sys) if drift is None else drift
    hz = np.pi * collective(SIGMA_Z, sys.n_spins)
    hx, hy = control_operators(sys)
    scales = np.repeat(np.asarray(ens.rf_scales), len(ens.offsets))
    offsets = np.tile(np.asarray(ens.offsets), len(ens.rf_scales))
    ctrl = pulse.samples[:, 0, None, None] * hx + pulse.samples[:, 1, None, None] * hy
    return (h0 + offsets[:, None, None, None] * hz[None, None]
            + scales[:, None, None, None] * ctrl[None])


def ensemble_fidelities(sys: SpinSystem, pulse: ControlPulse, u_goal: np.ndarray,
                        ens: EnsembleSpec) -> np.ndarray:
    """Pointwise fidelity at each grid member, shape ``(n_rf, n_offset)``."""
    u_goal = np.asarray(u_goal)
    if u_goal.shape != (sys.dim, sys.dim):
        raise DomainError(f"goal has shape {u_goal.shape}, system dimension is {sys.dim}")
    n_members = len(ens.rf_scales) * len(ens.offsets)
    u = np.broadcast_to(np.eye(sys.dim, dtype=complex), (n_members, sys.dim, sys.dim))
    if pulse.n_samples:
        steps, _, _ = expm_hermitian(ensemble_generators(sys, pulse, ens), pulse.dt)
        for k in range(pulse.n_samples):
            u = steps[:, k] @ u
    if not np.all(np.isfinite(u)):
        raise NumericalError("non-finite propagator")
    d = sys.dim
    overlap = np.einsum("ij,eij->e", np.conj(u_goal), u)
    f = np.minimum(np.abs(overlap) ** 2 / d**2, 1.0)
    return f.reshape(len(ens.rf_scales), len(ens.offsets))


def robust_fidelity(sys: SpinSystem, pulse: ControlPulse, u_goal: np.ndarray,
                    ens: EnsembleSpec) -> float:
    """Weighted mean of the gate fidelity over the ensemble grid."""
    f = ensemble_fidelities(sys, pulse, u_goal, ens)
    return float(np.sum(ens.weights * f))


def standard_gates(n: int) -> Dict[str, np.ndarray]:
    """Named target unitaries for an ``n``-spin register."""
    d = 2**n
    gates = {"identity": np.eye(d, dtype=complex)}
    if n == 1:
        gates["x"] = SIGMA_X.copy()
        gates["y"] = SIGMA_Y.copy()
        gates["hadamard"] = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    if n >= 2:
        gates["swap01"] = permutation_unitary(n, _swap_bits(n, 0, 1))
    if n >= 3:
        for a, b in ((0, 2), (1, 2)):
            gates[f"swap{a}{b}"] = permutation_unitary(n, _swap_bits(n, a, b))
        gates["compress"] = permutation_unitary(n, _compress_map(n))
    return gates


def permutation_unitary(n: int, dest: Sequence[int]) -> np.ndarray:
    """Permutation matrix sending basis state ``k`` to ``dest[k]``."""
    d = 2**n
    u = np.zeros((d, d), dtype=complex)
    u[np.asarray(dest), np.arange(d)] = 1.0
    return u


def _swap_bits(n: int, i: int, j: int):
    dest = []
    for k in range(2**n):
        bi, bj = (k >> (n - 1 - i)) & 1, (k >> (n - 1 - j)) & 1
        dest.append(k ^ ((1 << (n - 1 - i)) | (1 << (n - 1 - j))) if bi != bj else k)
    return dest


def _compress_map(n: int, target: int = 0, a: int = 1, b: int = 2):
    mask = (1 << (n - 1 - target)) | (1 << (n - 1 - a)) | (1 << (n - 1 - b))
    dest = []
    for k in range(2**n):
        bits = tuple((k >> (n - 1 - q)) & 1 for q in (target, a, b))
        dest.append(k ^ mask if bits in ((0, 1, 1), (1, 0, 0)) else k)
    return dest
