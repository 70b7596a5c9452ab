"""Gradient-ascent pulse engineering for robust unitary gates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional

import numpy as np

from .spin import (
    ControlPulse,
    EnsembleSpec,
    SpinSystem,
    build_drift,
    control_operators,
    ensemble_generators,
    expm_hermitian,
    robust_fidelity,
    step_generators,
)
from .state import DomainError, NumericalError

TARGET_REACHED = "target reached"
MAX_ITERATIONS = "max iterations"
STALLED = "stalled"

# sufficient-increase constant of the line search
ARMIJO = 1e-4


@dataclass(frozen=True)
class GrapeConfig:
    n_samples: int = 100
    dt: float = 1e-5
    max_iterations: int = 2000
    target_fidelity: float = 0.9975
    # largest per-sample amplitude change (kHz) of the first trial step
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

    def __post_init__(self):
        if self.n_samples < 0 or self.max_iterations < 0:
            raise DomainError("n_samples and max_iterations must be >= 0")
        if not self.dt > 0:
            raise DomainError("dt must be positive")
        if not 0 < self.target_fidelity <= 1:
            raise DomainError("target_fidelity must lie in (0, 1]")
        if not self.amplitude_ceiling > 0:
            raise DomainError("amplitude_ceiling must be positive")
        if not 0 < self.backtrack < 1:
            raise DomainError("backtrack must lie in (0, 1)")
        if not self.initial_step_size > 0:
            raise DomainError("initial_step_size must be positive")
        if self.smoothness_weight < 0:
            raise DomainError("smoothness_weight must be >= 0")
        if self.gradient_mode not in ("exact", "finite-difference"):
            raise DomainError(f"unknown gradient mode {self.gradient_mode!r}")
        if self.direction not in ("lbfgs", "gradient"):
            raise DomainError(f"unknown search direction {self.direction!r}")
        if self.memory < 1:
            raise DomainError("memory must be >= 1")


@dataclass
class GrapeResult:
    pulse: ControlPulse
    robust_fidelity: float
    objective: float
    iterations: int
    reason: str
    history: List[tuple] = field(default_factory=list)

    @property
    def fidelity_history(self) -> List[float]:
        return [h[2] for h in self.history]


def smoothness_penalty(samples: np.ndarray) -> float:
    """Sum of squared jumps between neighbouring samples, ramping from and to zero."""
    if len(samples) == 0:
        return 0.0
    padded = np.vstack([np.zeros((1, 2)), samples, np.zeros((1, 2))])
    return float(np.sum(np.diff(padded, axis=0) ** 2))


def _smoothness_gradient(samples: np.ndarray) -> np.ndarray:
    padded = np.vstack([np.zeros((1, 2)), samples, np.zeros((1, 2))])
    return 2 * (2 * padded[1:-1] - padded[:-2] - padded[2:])


def objective(sys: SpinSystem, pulse: ControlPulse, u_goal: np.ndarray,
              ens: EnsembleSpec, smoothness_weight: float = 0.0) -> float:
    f = robust_fidelity(sys, pulse, u_goal, ens)
    return f - smoothness_weight * smoothness_penalty(pulse.samples)


def _fidelity_and_gradient(sys, pulse, u_goal, ens, drift=None):
    """Robust fidelity and its exact gradient w.r.t. every ``(u_x, u_y)``."""
    d = sys.dim
    n = pulse.n_samples
    weights = ens.weights.reshape(-1)
    hx, hy = control_operators(sys)
    grad = np.zeros((n, 2))
    if n == 0:
        f = abs(np.trace(np.conj(u_goal).T)) ** 2 / d**2
        return float(np.sum(weights * f)), grad
    dt = pulse.dt
    h = ensemble_generators(sys, pulse, ens, drift)
    steps, evals, evecs = expm_hermitian(h, dt)
    e = len(weights)
    # forward[:, k] = U_k ... U_1 (forward[:, 0] = I); backward[:, k] = G^dag U_n ... U_{k+1}
    forward = np.empty((e, n + 1, d, d), dtype=complex)
    forward[:, 0] = np.eye(d)
    for k in range(n):
        forward[:, k + 1] = steps[:, k] @ forward[:, k]
    backward = np.empty((e, n + 1, d, d), dtype=complex)
    backward[:, n] = np.conj(u_goal).T
    for k in range(n - 1, -1, -1):
        backward[:, k] = backward[:, k + 1] @ steps[:, k]
    tau = np.trace(backward[:, 0], axis1=-2, axis2=-1)
    fid = np.minimum(np.abs(tau) ** 2 / d**2, 1.0)

    # dU_k = V (gamma * V^dag dH V) V^dag, gamma the divided differences of exp(-i lambda dt)
    la = evals[..., :, None]
    lb = evals[..., None, :]
    gamma = -1j * dt * np.exp(-0.5j * (la + lb) * dt) * np.sinc((la - lb) * dt / (2 * np.pi))
    vdag = np.conj(np.swapaxes(evecs, -1, -2))
    w_mat = vdag @ (forward[:, :-1] @ backward[:, 1:]) @ evecs
    scales = np.repeat(np.asarray(ens.rf_scales), len(ens.offsets))
    coeff = weights * 2 / d**2
    for c, hc in enumerate((hx, hy)):
        x = vdag @ hc @ evecs
        dtau = scales[:, None] * np.einsum("ekba,ekab,ekab->ek", w_mat, gamma, x)
        grad[:, c] = np.einsum("e,ek->k", coeff, np.real(np.conj(tau)[:, None] * dtau))
    total = float(np.sum(weights * fid))
    if not (np.isfinite(total) and np.all(np.isfinite(grad))):
        raise NumericalError("non-finite fidelity gradient")
    return total, grad


def gradient(sys: SpinSystem, pulse: ControlPulse, u_goal: np.ndarray, ens: EnsembleSpec,
             smoothness_weight: float = 0.0) -> np.ndarray:
    """Exact gradient of :func:`objective`, shape ``(n_samples, 2)``."""
    _, g = _fidelity_and_gradient(sys, pulse, u_goal, ens)
    return g - smoothness_weight * _smoothness_gradient(pulse.samples)


def finite_difference_gradient(sys, pulse, u_goal, ens, smoothness_weight=0.0, h=1e-6):
    """Central differences of :func:`objective`; slow, for cross-checking."""
    base = np.array(pulse.samples)
    out = np.zeros_like(base)
    for idx in np.ndindex(base.shape):
        vals = []
        for sign in (1, -1):
            s = base.copy()
            s[idx] += sign * h
            vals.append(objective(sys, ControlPulse(pulse.dt, s), u_goal, ens, smoothness_weight))
        out[idx] = (vals[0] - vals[1]) / (2 * h)
    return out


def project_amplitude(samples: np.ndarray, ceiling: float) -> np.ndarray:
    """Scale down any sample whose amplitude exceeds ``ceiling``."""
    amp = np.hypot(samples[:, 0], samples[:, 1])
    factor = np.minimum(1.0, ceiling / np.maximum(amp, 1e-300))
    return samples * factor[:, None]


def random_pulse(config: GrapeConfig) -> ControlPulse:
    """Seeded random start with each quadrature uniform in +-10% of the ceiling."""
    rng = np.random.default_rng(config.seed)
    c = 0.1 * config.amplitude_ceiling
    samples = rng.uniform(-c, c, size=(config.n_samples, 2))
    return ControlPulse(config.dt, project_amplitude(samples, config.amplitude_ceiling))


def _lbfgs_direction(grad, memory):
    """Quasi-Newton ascent direction from stored ``(s, y, 1/(y.s))`` pairs
    (``y`` is the change of the *negated* gradient)."""
    q = -grad.copy()
    alphas = []
    for s_k, y_k, rho in reversed(memory):
        a = rho * np.dot(s_k, q)
        alphas.append(a)
        q -= a * y_k
    s_k, y_k, _ = memory[-1]
    q *= np.dot(s_k, y_k) / np.dot(y_k, y_k)
    for (s_k, y_k, rho), a in zip(memory, reversed(alphas)):
        q += (a - rho * np.dot(y_k, q)) * s_k
    return -q


def optimize(sys: SpinSystem, u_goal: np.ndarray, ens: EnsembleSpec, config: GrapeConfig,
             initial: Optional[ControlPulse] = None, callback=None) -> GrapeResult:
    """Maximize the smoothness-penalized robust fidelity by gradient ascent.

    The search direction is the gradient (``direction="gradient"``) or an
    L-BFGS update of it (``"lbfgs"``). A backtracking line search shrinks the
    trial step by ``backtrack`` until the objective rises by at least a small
    fraction of the predicted gain, so accepted iterates never lose ground.
    ``history`` rows are ``(iteration, objective, robust_fidelity, step_size)``
    with ``step_size`` the largest amplitude change (kHz) of the accepted step.
    """
    u_goal = np.asarray(u_goal, dtype=complex)
    if u_goal.shape != (sys.dim, sys.dim):
        raise DomainError(f"goal has shape {u_goal.shape}, system dimension is {sys.dim}")
    lam = config.smoothness_weight
    ceiling = config.amplitude_ceiling
    drift = build_drift(sys)
    pulse = initial if initial is not None else random_pulse(config)
    samples = project_amplitude(np.array(pulse.samples), ceiling)
    dt = pulse.dt

    def evaluate(s):
        fid, g = _fidelity_and_gradient(sys, ControlPulse(dt, s), u_goal, ens, drift)
        return fid - lam * smoothness_penalty(s), fid, g - lam * _smoothness_gradient(s)

    def evaluate_fd(s):
        p = ControlPulse(dt, s)
        fid = robust_fidelity(sys, p, u_goal, ens)
        g = finite_difference_gradient(sys, p, u_goal, ens, lam, config.fd_step)
        return fid - lam * smoothness_penalty(s), fid, g

    evaluate_full = evaluate if config.gradient_mode == "exact" else evaluate_fd

    def value(s):
        fid = robust_fidelity(sys, ControlPulse(dt, s), u_goal, ens)
        return fid - lam * smoothness_penalty(s), fid

    def line_search(direction, step, slope):
        """Largest ``step * backtrack**k`` giving sufficient increase, or ``None``."""
        floor = 1e-12 * config.initial_step_size / max(np.max(np.abs(direction)), 1e-300)
        while step >= floor:
            trial = project_amplitude(samples + step * direction, ceiling)
            t_obj, t_fid = value(trial)
            if t_obj >= obj + ARMIJO * step * slope and t_obj >= obj:
                return step, trial, t_obj
            step *= config.backtrack
        return None

    obj, fid, grad = evaluate_full(samples)
    history = [(0, obj, fid, 0.0)]
    if callback:
        callback(history[-1])
    memory = []
    grad_step = config.initial_step_size
    reason = MAX_ITERATIONS
    idle = 0
    it = 0
    while True:
        if fid >= config.target_fidelity:
            reason = TARGET_REACHED
            break
        if it >= config.max_iterations:
            reason = MAX_ITERATIONS
            break
        g = grad.reshape(-1)
        scale = np.max(np.abs(g)) if g.size else 0.0
        if scale == 0 or not np.isfinite(scale):
            reason = STALLED
            break
        found = None
        if config.direction == "lbfgs" and memory:
            d = _lbfgs_direction(g, memory)
            slope = float(np.dot(g, d))
            if slope > 0:
                found = line_search(d.reshape(grad.shape), 1.0, slope)
            if found is None:
                memory.clear()
        if found is None:
            d = g / scale
            found = line_search(d.reshape(grad.shape), grad_step, float(np.dot(g, d)))
            if found is not None:
                grad_step = 2.0 * found[0]
        if found is None:
            reason = STALLED
            break
        step, trial, t_obj = found
        it += 1
        gain = t_obj - obj
        moved = (trial - samples).reshape(-1)
        samples = trial
        obj, fid, new_grad = evaluate_full(samples)
        y = -(new_grad - grad).reshape(-1)
        sy = float(np.dot(moved, y))
        if sy > 1e-12 * float(np.dot(y, y)):
            memory.append((moved, y, 1.0 / sy))
            del memory[:-config.memory]
        grad = new_grad
        history.append((it, obj, fid, float(np.max(np.abs(moved)))))
        if callback:
            callback(history[-1])
        idle = idle + 1 if gain < 1e-12 else 0
        if idle >= config.stall_window:
            reason = STALLED
            break
    return GrapeResult(ControlPulse(dt, samples), fid, obj, it, reason, history)
