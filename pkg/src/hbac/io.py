"""Text formats: pulse files, CSV tables and JSON reports."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .spin import ControlPulse
from .state import DomainError


class PulseFormatError(DomainError):
    pass


def fmt(x) -> str:
    """Report formatting: 12 significant digits."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def _exact(x: float) -> str:
    # 17 significant digits, positional notation: parses back to the same double
    return np.format_float_positional(float(x), precision=17, unique=False,
                                      fractional=False, trim="k")


def write_pulse(path, pulse: ControlPulse) -> None:
    lines = [f"dt_seconds {_exact(pulse.dt)}", f"n_samples {pulse.n_samples}"]
    lines += [f"{_exact(ux)} {_exact(uy)}" for ux, uy in pulse.samples]
    Path(path).write_text("\n".join(lines) + "\n")


def read_pulse(path) -> ControlPulse:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise PulseFormatError(f"cannot read pulse file: {exc}") from exc
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise PulseFormatError("pulse file needs dt_seconds and n_samples header lines")
    try:
        key, dt = lines[0].split()
        if key != "dt_seconds":
            raise ValueError
        dt = float(dt)
        key, n = lines[1].split()
        if key != "n_samples":
            raise ValueError
        n = int(n)
    except ValueError:
        raise PulseFormatError("malformed pulse header") from None
    body = lines[2:]
    if len(body) != n:
        raise PulseFormatError(f"header announces {n} samples, found {len(body)}")
    try:
        samples = np.array([[float(v) for v in ln.split()] for ln in body], dtype=float)
    except ValueError:
        raise PulseFormatError("non-numeric pulse sample") from None
    if n and samples.shape != (n, 2):
        raise PulseFormatError("each sample line needs exactly two amplitudes")
    try:
        return ControlPulse(dt, samples.reshape(n, 2))
    except DomainError as exc:
        raise PulseFormatError(str(exc)) from exc


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])


def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if not math.isfinite(obj) else float(fmt(obj))
    return obj


def to_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def write_text(path, text: str) -> None:
    Path(path).write_text(text)
