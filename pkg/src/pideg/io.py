"""Trace CSV, WAV rendering and external-LC loading."""
from __future__ import annotations

import io
import math
import os
import tempfile
import wave
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np

from .engine import EnvelopeTrace
from .lc import External

__all__ = [
    "TRACE_HEADER",
    "RenderConfig",
    "TraceFormatError",
    "LcCsvError",
    "format_real",
    "format_trace_csv",
    "write_trace_csv",
    "read_trace_csv",
    "render_wav",
    "wav_bytes",
    "load_lc_csv",
    "atomic_write",
]

TRACE_HEADER = "n,t,gate,lc,fc,eo"

PathOrStream = Union[str, os.PathLike, io.IOBase]


class TraceFormatError(ValueError):
    pass


class LcCsvError(ValueError):
    def __init__(self, message, line):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class RenderConfig:
    fs: float = 1000.0
    audio_fs: int = 44100
    tone_hz: float = 440.0
    amplitude: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.fs) and self.fs > 0):
            raise ValueError("fs must be positive")
        if int(self.audio_fs) != self.audio_fs or self.audio_fs <= 0:
            raise ValueError("audio_fs must be a positive integer")
        if not (math.isfinite(self.tone_hz) and 0 < self.tone_hz < self.audio_fs / 2):
            raise ValueError(
                f"tone_hz must lie in (0, audio_fs/2) = (0, {self.audio_fs / 2}), got {self.tone_hz}"
            )
        if not 0 < self.amplitude <= 1:
            raise ValueError("amplitude must lie in (0, 1]")


def format_real(x: float) -> str:
    """Shortest decimal text that parses back to exactly ``x``."""
    s = repr(float(x))
    if s.endswith(".0"):
        s = s[:-2]
    return s


def format_trace_csv(trace: EnvelopeTrace) -> str:
    lines = [TRACE_HEADER]
    fs = trace.fs
    for i, (g, lc, fc, eo) in enumerate(zip(trace.gate.tolist(), trace.lc.tolist(),
                                            trace.fc.tolist(), trace.eo.tolist())):
        lines.append(f"{i},{i / fs:.8f},{g},{format_real(lc)},{format_real(fc)},{format_real(eo)}")
    return "\n".join(lines) + "\n"


def atomic_write(path, data: bytes):
    """Write ``data`` to ``path`` via a temporary file and a rename."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", suffix=".tmp", dir=path.parent or ".")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def _emit(data: bytes, destination: PathOrStream):
    if hasattr(destination, "write"):
        if isinstance(destination, io.TextIOBase):
            destination.write(data.decode("ascii"))
        else:
            destination.write(data)
    else:
        atomic_write(destination, data)


def write_trace_csv(trace: EnvelopeTrace, destination: PathOrStream) -> bytes:
    data = format_trace_csv(trace).encode("ascii")
    _emit(data, destination)
    return data


def _read_text(source) -> str:
    if hasattr(source, "read"):
        text = source.read()
        return text.decode("utf-8") if isinstance(text, bytes) else text
    return Path(source).read_text(encoding="utf-8")


def _infer_fs(n: np.ndarray, t: np.ndarray) -> float:
    if n.size < 2 or t[-1] <= 0:
        raise TraceFormatError("cannot infer the sampling rate from fewer than two samples")
    fs = n[-1] / t[-1]
    nearest = round(fs)
    if nearest > 0 and abs(fs - nearest) <= 1e-6 * fs:
        return float(nearest)
    return float(fs)


def read_trace_csv(source, fs: float = None) -> EnvelopeTrace:
    """Parse a trace written by :func:`write_trace_csv`.

    ``fs`` is inferred from the ``n`` and ``t`` columns unless given.
    """
    lines = _read_text(source).splitlines()
    if not lines or lines[0].strip() != TRACE_HEADER:
        raise TraceFormatError(f"expected header {TRACE_HEADER!r}")
    rows = [ln for ln in lines[1:] if ln.strip()]
    if not rows:
        raise TraceFormatError("trace has no samples")
    cols = [[] for _ in range(6)]
    for lineno, row in enumerate(rows, start=2):
        parts = row.split(",")
        if len(parts) != 6:
            raise TraceFormatError(f"line {lineno}: expected 6 fields, got {len(parts)}")
        try:
            values = [int(parts[0]), float(parts[1]), int(parts[2])] + [float(p) for p in parts[3:]]
        except ValueError:
            raise TraceFormatError(f"line {lineno}: malformed number") from None
        for col, v in zip(cols, values):
            col.append(v)
    n = np.asarray(cols[0])
    t = np.asarray(cols[1])
    if not np.array_equal(n, np.arange(n.size)):
        raise TraceFormatError("sample index column must count up from 0")
    if fs is None:
        fs = _infer_fs(n, t) if n.size > 1 else 1.0
    return EnvelopeTrace(np.asarray(cols[2]), np.asarray(cols[3]),
                         np.asarray(cols[4]), np.asarray(cols[5]), fs)


def wav_samples(trace: EnvelopeTrace, cfg: RenderConfig) -> np.ndarray:
    """Envelope-modulated sine as int16, envelope held between its samples."""
    n_env = len(trace)
    n_audio = int(round(n_env * cfg.audio_fs / trace.fs))
    k = np.arange(n_audio)
    idx = np.minimum((k * trace.fs / cfg.audio_fs).astype(np.int64), n_env - 1)
    env = trace.eo[idx]
    tone = np.sin(2.0 * np.pi * cfg.tone_hz * k / cfg.audio_fs)
    s = np.round(32767.0 * cfg.amplitude * env * tone)
    return np.clip(s, -32768, 32767).astype("<i2")


def wav_bytes(trace: EnvelopeTrace, cfg: RenderConfig) -> bytes:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as w:
        w.setnchannels(1)
        w.setsampwidth(2)
        w.setframerate(int(cfg.audio_fs))
        w.writeframes(wav_samples(trace, cfg).tobytes())
    return buf.getvalue()


def render_wav(trace: EnvelopeTrace, cfg: RenderConfig, destination: PathOrStream) -> bytes:
    data = wav_bytes(trace, cfg)
    _emit(data, destination)
    return data


def load_lc_csv(source) -> External:
    """Load a single-column LC buffer; a non-numeric first line is a header."""
    values = []
    for lineno, raw in enumerate(_read_text(source).splitlines(), start=1):
        cell = raw.strip()
        if not cell:
            continue
        try:
            v = float(cell)
        except ValueError:
            if lineno == 1:
                continue
            raise LcCsvError(f"cannot parse {cell!r} as a number", lineno) from None
        if not (math.isfinite(v) and 0.0 <= v <= 1.0):
            raise LcCsvError(f"value {cell} is outside [0, 1]", lineno)
        values.append(v)
    if not values:
        raise LcCsvError("no LC samples found", 1)
    return External(np.asarray(values))
