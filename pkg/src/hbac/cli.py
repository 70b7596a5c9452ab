"""Command-line drivers.

    hbac cool run|steady|sweep --config run.yaml
    hbac pulse grape|verify --config run.yaml
    hbac --print-default-config

Exit codes: 0 success, 1 invalid configuration or input file, 2 numerical
failure, 3 pulse optimization finished below the target fidelity.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import io
from .config import ConfigError, RunConfig, dump_config, load_config
from .engine import ConvergenceError, run_schedule, steady_state_bias
from .grape import TARGET_REACHED, optimize
from .noise import BathModel, NoiseModel
from .spin import ensemble_fidelities, propagate, gate_fidelity
from .state import DomainError, NumericalError, uniform_state

log = logging.getLogger("hbac")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_TARGET = 0, 1, 2, 3
SHANNON_BOUND = 1.5
MAX_SWEEP_QUBITS = 10


def gate_convention(noise: NoiseModel) -> str:
    kinds = ", ".join(noise.noisy_kinds) or "no"
    text = (f"{noise.mode} depolarizing p={io.fmt(noise.depolarizing_per_gate)} "
            f"after each {kinds} gate")
    if "refresh" not in noise.noisy_kinds:
        text += "; refresh noiseless"
    return text


def _prepare(path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


# -- cool ---------------------------------------------------------------------


def cmd_cool_run(cfg: RunConfig) -> dict:
    bath, noise = cfg.bath_model(), cfg.noise_model()
    schedule = cfg.build_schedule()
    names = cfg.qubit_names()
    target = cfg.system.target_index
    traj = run_schedule(uniform_state(cfg.system.n_qubits), schedule, bath, noise)

    rows = []
    for rec in [traj.initial] + traj.records:
        rel = traj.relative(rec)
        for q, name in enumerate(names):
            rows.append((rec.round, rec.label, name, float(rel[q]), float(rec.biases[q]),
                         rec.entropy, rec.bath_bias))
    io.write_csv(_prepare(cfg.output.path("trajectory_csv")),
                 ("round", "step_label", "qubit", "bias_over_bath", "bias_absolute",
                  "entropy_bits", "bath_bias"), rows)

    kind = "sort" if cfg.schedule.kind == "ppa" else "compress"
    after = [float(traj.relative(r)[target]) for r in traj.select(kind)]
    final = traj.records[-1] if traj.records else traj.initial
    final_rel = traj.relative(final)
    summary = {
        "schedule": cfg.schedule.kind,
        "rounds": cfg.schedule.rounds,
        "target": names[target],
        "reference_bias": traj.reference,
        "target_over_bath_after_compression": after,
        "final_biases": dict(zip(names, final.biases.tolist())),
        "final_biases_over_bath": dict(zip(names, final_rel.tolist())),
        "final_entropy_bits": final.entropy,
        "final_bath_bias": final.bath_bias,
        "shannon_bound_over_bath": SHANNON_BOUND,
        "exceeds_shannon_bound": bool(np.nan_to_num(final_rel[target]) > SHANNON_BOUND),
        "gate_count_convention": gate_convention(noise),
    }
    io.write_text(_prepare(cfg.output.path("summary_json")), io.to_json(summary))
    return summary


def _steady_row(args):
    n, eps, p, template, tol, max_rounds = args
    bath = BathModel(eps, template.heating_per_refresh, template.t1rho, template.efficiency)
    noise = NoiseModel(p, template.gate_durations, template.noisy_kinds, template.mode)
    bias, rounds = steady_state_bias(n, bath, noise, tol, max_rounds, return_rounds=True)
    return bias, rounds


def cmd_cool_steady(cfg: RunConfig) -> dict:
    bath, noise = cfg.bath_model(), cfg.noise_model()
    n = cfg.system.n_qubits
    bias, rounds = steady_state_bias(n, bath, noise, cfg.steady.tol, cfg.steady.max_rounds,
                                     return_rounds=True)
    ref = bath.reference_bias
    result = {
        "n_qubits": n,
        "epsilon_bath": bath.epsilon0,
        "steady_bias": bias,
        "steady_bias_over_bath": bias / ref if ref else None,
        "rounds_used": rounds,
        "gate_count_convention": gate_convention(noise),
    }
    io.write_text(_prepare(cfg.output.path("steady_json")), io.to_json(result))
    return result


class _BathTemplate:
    """Picklable bundle of the non-swept bath and noise parameters."""

    def __init__(self, bath: BathModel, noise: NoiseModel):
        self.heating_per_refresh = bath.heating_per_refresh
        self.t1rho = bath.t1rho
        self.efficiency = bath.efficiency
        self.gate_durations = dict(noise.gate_durations)
        self.noisy_kinds = noise.noisy_kinds
        self.mode = noise.mode


def cmd_cool_sweep(cfg: RunConfig, workers: int = None) -> list:
    sw = cfg.sweep
    for n in sw.n:
        if not 2 <= n <= MAX_SWEEP_QUBITS:
            raise ConfigError(f"sweep.n entries must lie in [2, {MAX_SWEEP_QUBITS}], got {n}")
    template = _BathTemplate(cfg.bath_model(), cfg.noise_model())
    grid = list(itertools.product(sw.n, sw.epsilon, sw.depolarizing))
    jobs = [(n, e, p, template, cfg.steady.tol, cfg.steady.max_rounds) for n, e, p in grid]
    workers = workers or sw.workers
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_steady_row, jobs))
    else:
        results = [_steady_row(j) for j in jobs]
    rows = []
    for (n, e, p), (bias, rounds) in zip(grid, results):
        ref = template.efficiency * e
        rows.append((n, float(e), float(p), bias, bias / ref if ref else float("nan"), rounds))
    io.write_csv(_prepare(cfg.output.path("sweep_csv")),
                 ("n", "epsilon_bath", "depolarizing", "steady_bias", "bias_over_bath",
                  "rounds_used"), rows)
    return rows


# -- pulse --------------------------------------------------------------------


def _verify_report(cfg: RunConfig, pulse) -> dict:
    sys_ = cfg.spin_system()
    goal = cfg.goal_unitary()
    ens = cfg.ensemble_spec()
    grid = ensemble_fidelities(sys_, pulse, goal, ens)
    return {
        "pointwise_fidelity": gate_fidelity(goal, propagate(sys_, pulse)),
        "robust_fidelity": float(np.sum(ens.weights * grid)),
        "worst_grid_fidelity": float(grid.min()),
    }


def cmd_pulse_grape(cfg: RunConfig, progress: bool = False):
    sys_ = cfg.spin_system()
    if cfg.grape_config().dt <= 0:
        raise ConfigError("grape.dt must be positive")
    callback = None
    if progress:
        def callback(row):
            if row[0] % 50 == 0:
                log.info("iteration %d  objective %.6f  fidelity %.6f", row[0], row[1], row[2])
    result = optimize(sys_, cfg.goal_unitary(), cfg.ensemble_spec(), cfg.grape_config(),
                      callback=callback)
    io.write_pulse(_prepare(cfg.output.path("pulse_file")), result.pulse)
    io.write_csv(_prepare(cfg.output.path("history_csv")),
                 ("iteration", "objective", "robust_fidelity", "step_size"), result.history)
    report = _verify_report(cfg, result.pulse)
    report.update(iterations=result.iterations, termination=result.reason,
                  objective=result.objective)
    return result, report


def cmd_pulse_verify(cfg: RunConfig, pulse_path) -> dict:
    pulse = io.read_pulse(pulse_path)
    report = _verify_report(cfg, pulse)
    io.write_text(_prepare(cfg.output.path("verify_json")), io.to_json(report))
    return report


# -- entry point ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hbac", description=__doc__.splitlines()[0])
    parser.add_argument("--print-default-config", action="store_true",
                        help="print the default configuration as YAML and exit")
    parser.add_argument("-v", "--verbose", action="store_true")
    groups = parser.add_subparsers(dest="group")

    def common(p):
        p.add_argument("-c", "--config", help="YAML run configuration (defaults if omitted)")
        p.add_argument("-o", "--output-dir", help="override output.directory")

    cool = groups.add_parser("cool", help="algorithmic cooling simulations")
    cool_cmds = cool.add_subparsers(dest="command", required=True)
    common(cool_cmds.add_parser("run", help="run the configured schedule, write trajectory CSV"))
    common(cool_cmds.add_parser("steady", help="steady-state bias of the partner-pairing loop"))
    sweep = cool_cmds.add_parser("sweep", help="steady bias over an (n, epsilon, noise) grid")
    common(sweep)
    sweep.add_argument("-j", "--workers", type=int, help="worker processes")

    pulse = groups.add_parser("pulse", help="robust control pulses")
    pulse_cmds = pulse.add_subparsers(dest="command", required=True)
    common(pulse_cmds.add_parser("grape", help="optimize a robust pulse"))
    verify = pulse_cmds.add_parser("verify", help="evaluate a pulse file")
    common(verify)
    verify.add_argument("pulse_file")
    return parser


def _load(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.output_dir:
        cfg.output.directory = args.output_dir
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(message)s")
    if args.print_default_config:
        sys.stdout.write(dump_config(RunConfig()))
        return EXIT_OK
    if args.group is None:
        parser.print_help()
        return EXIT_CONFIG

    try:
        cfg = _load(args)
        if args.group == "cool":
            if args.command == "run":
                out = cmd_cool_run(cfg)
            elif args.command == "steady":
                out = cmd_cool_steady(cfg)
            else:
                rows = cmd_cool_sweep(cfg, args.workers)
                out = {"rows": len(rows), "csv": str(cfg.output.path("sweep_csv"))}
            sys.stdout.write(io.to_json(out))
            return EXIT_OK
        if args.command == "grape":
            result, report = cmd_pulse_grape(cfg, progress=args.verbose)
            sys.stdout.write(io.to_json(report))
            return EXIT_OK if result.reason == TARGET_REACHED else EXIT_TARGET
        sys.stdout.write(io.to_json(cmd_pulse_verify(cfg, args.pulse_file)))
        return EXIT_OK
    except (NumericalError, ConvergenceError, FloatingPointError) as exc:
        print(f"hbac: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DomainError, OSError) as exc:
        print(f"hbac: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
