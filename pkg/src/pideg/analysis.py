"""Envelope metrics: oscillation, settling, bumps and termination."""
from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

__all__ = [
    "OscillationReport",
    "alternation_ratio",
    "oscillation_frequency",
    "mean_abs_deviation",
    "oscillation_report",
    "settling_time",
    "max_bump",
    "is_finite_envelope",
    "analyze_trace",
]

MIN_FINITE_TAIL = 100


@dataclass(frozen=True)
class OscillationReport:
    mean_frequency_hz: float
    mean_abs_deviation: float
    alternation_ratio: float

    def to_dict(self):
        return asdict(self)


def _as_1d(x, min_len, name):
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} expects a 1-D sequence")
    if arr.size < min_len:
        raise ValueError(f"{name} needs at least {min_len} samples, got {arr.size}")
    return arr


def alternation_ratio(x) -> float:
    """Fraction of interior samples that are a strict local peak or trough.

    A value near 1 means the signal flips direction every sample, i.e. it
    oscillates at half the sampling rate.
    """
    arr = _as_1d(x, 3, "alternation_ratio")
    d = np.diff(arr)
    flips = np.sign(d[:-1]) * np.sign(d[1:]) < 0
    return float(np.count_nonzero(flips)) / flips.size


def oscillation_frequency(residual, fs: float) -> float:
    """Zero-crossing frequency estimate in Hz.

    Crossings are counted between consecutive samples of strictly opposite
    sign; samples that are exactly zero never form a crossing. The span is
    taken as ``(len - 1) / fs`` so that a signal flipping sign on every
    sample reports exactly ``fs / 2``.
    """
    arr = _as_1d(residual, 2, "oscillation_frequency")
    s = np.sign(arr)
    crossings = np.count_nonzero(s[:-1] * s[1:] < 0)
    duration = (arr.size - 1) / fs
    return crossings / (2.0 * duration)


def mean_abs_deviation(fc, lc) -> float:
    fc = np.asarray(fc, dtype=float)
    lc = np.asarray(lc, dtype=float)
    if fc.shape != lc.shape or fc.size == 0:
        raise ValueError("fc and lc must be non-empty and of equal shape")
    return float(np.mean(np.abs(fc - lc)))


def oscillation_report(fc, lc, fs: float) -> OscillationReport:
    fc = np.asarray(fc, dtype=float)
    lc = np.asarray(lc, dtype=float)
    return OscillationReport(
        mean_frequency_hz=oscillation_frequency(fc - lc, fs),
        mean_abs_deviation=mean_abs_deviation(fc, lc),
        alternation_ratio=alternation_ratio(fc),
    )


def settling_time(eo, target: float, tol: float, fs: float) -> Optional[float]:
    """Earliest time after which every sample stays within ``tol`` of ``target``.

    Returns ``None`` if the final sample is still outside the band.
    """
    if not 0.0 < tol < 1.0:
        raise ValueError("tol must lie strictly between 0 and 1")
    arr = _as_1d(eo, 1, "settling_time")
    outside = np.flatnonzero(np.abs(arr - target) > tol)
    if outside.size == 0:
        return 0.0
    last = int(outside[-1])
    if last == arr.size - 1:
        return None
    return (last + 1) / fs


def max_bump(eo) -> float:
    arr = _as_1d(eo, 2, "max_bump")
    return float(np.max(np.abs(np.diff(arr))))


def is_finite_envelope(eo, keyoff_start: int, eps: float = 1e-3,
                       min_quiet: Optional[int] = None) -> bool:
    """Judge whether the key-off tail has died out.

    The tail counts as finished when its trailing run of samples at or
    below ``eps`` is at least ``min_quiet`` long. The default is a quarter
    of the tail and never less than 100 samples, which keeps the negative
    half-cycle of a slow oscillation from passing for silence.
    """
    arr = np.asarray(eo, dtype=float)
    if not 0 <= keyoff_start < arr.size:
        raise ValueError(f"keyoff_start {keyoff_start} lies outside the trace")
    tail = arr[keyoff_start:]
    if tail.size < MIN_FINITE_TAIL:
        raise ValueError(
            f"key-off tail has {tail.size} samples; at least {MIN_FINITE_TAIL} are needed"
        )
    if min_quiet is None:
        min_quiet = max(MIN_FINITE_TAIL, tail.size // 4)
    loud = np.flatnonzero(tail > eps)
    quiet_run = tail.size if loud.size == 0 else tail.size - 1 - int(loud[-1])
    return quiet_run >= min_quiet


def analyze_trace(trace, window=None, target: float = 1.0, tol: float = 0.01,
                  eps: float = 1e-3) -> dict:
    """Flat metric dictionary for a trace, as emitted by ``pideg analyze``.

    ``window`` is an optional ``(start_s, end_s)`` pair; samples with
    ``start_s <= t < end_s`` are analysed. The finite-envelope verdict
    always looks at the trace's final key-off segment and is omitted when
    there is none long enough to judge.
    """
    n = len(trace)
    lo, hi = 0, n
    if window is not None:
        start_s, end_s = window
        if not end_s > start_s:
            raise ValueError("window end must be after its start")
        t = trace.t
        lo = int(np.searchsorted(t, start_s, side="left"))
        hi = int(np.searchsorted(t, end_s, side="left"))
    if hi - lo < 3:
        raise ValueError("analysis window must contain at least 3 samples")

    fc = trace.fc[lo:hi]
    lc = trace.lc[lo:hi]
    eo = trace.eo[lo:hi]
    report = oscillation_report(fc, lc, trace.fs).to_dict()
    out = {"samples": hi - lo}
    out.update(report)
    settle = settling_time(eo, target, tol, trace.fs)
    out["settled"] = settle is not None
    if settle is not None:
        out["settling_time_s"] = settle
    out["max_bump"] = max_bump(eo)
    off = trace.keyoff_start()
    if off is not None and n - off >= MIN_FINITE_TAIL:
        out["finite_envelope"] = is_finite_envelope(trace.eo, off, eps)
    return out
