"""Heat-bath algorithmic cooling on diagonal qubit registers, plus robust
GRAPE pulse synthesis for the gates the cooling circuit needs."""

from .engine import (
    Compress3,
    ConvergenceError,
    PpaSort,
    Refresh,
    Schedule,
    Swap,
    Trajectory,
    compress3,
    three_qubit_circuit,
    ppa_sort,
    refresh,
    run_ppa,
    run_schedule,
    steady_state_bias,
    swap_qubits,
    unitary_cooling_limit,
)
from .noise import BathModel, NoiseModel, apply_depolarizing, bath_bias_at
from .state import (
    DomainError,
    NumericalError,
    PopulationState,
    qubit_bias,
    shannon_entropy,
    thermal_state,
    uniform_state,
)

__version__ = "0.1.0"
