"""Leader-curve (LC) sources.

Every generator takes the number of samples since the last gate transition
and an optional ``start`` level. ``start`` is the LC value held when the
transition happened; passing it keeps the curve continuous when a key-off
arrives mid-rise (or a key-on mid-fall). Leaving it as ``None`` gives the
textbook curves, which assume the previous phase had saturated.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np

from .gate import Phase

__all__ = [
    "InverseExp",
    "Trapezoid",
    "External",
    "Adsr",
    "LcSource",
    "lc_inverse_exp",
    "lc_trapezoid",
    "lc_adsr",
    "lc_value",
]


def _check_rate(obj, name):
    value = getattr(obj, name)
    if not (isinstance(value, numbers.Real) and math.isfinite(value) and value > 0):
        raise ValueError(f"{name} must be a positive finite number, got {value!r}")
    object.__setattr__(obj, name, float(value))


@dataclass(frozen=True)
class InverseExp:
    """Exponential approach to 1 on key-on and decay to 0 on key-off."""

    kr: float = 100.0
    kf: float = 100.0

    def __post_init__(self):
        _check_rate(self, "kr")
        _check_rate(self, "kf")


@dataclass(frozen=True)
class Trapezoid:
    """Linear rise to 1 and linear fall to 0."""

    kr: float = 100.0
    kf: float = 100.0

    def __post_init__(self):
        _check_rate(self, "kr")
        _check_rate(self, "kf")


@dataclass(frozen=True, eq=False)
class External:
    """A pre-recorded LC, indexed by absolute sample number.

    The key-on/key-off structure is whatever the buffer contains; the rise
    and fall rates of the parametric curves do not apply.
    """

    samples: np.ndarray

    def __post_init__(self):
        buf = np.asarray(self.samples, dtype=float)
        if buf.ndim != 1 or buf.size == 0:
            raise ValueError("external LC buffer must be a non-empty 1-D sequence")
        bad = np.flatnonzero(~np.isfinite(buf) | (buf < 0.0) | (buf > 1.0))
        if bad.size:
            i = int(bad[0])
            raise ValueError(f"external LC value {buf[i]!r} at index {i} is outside [0, 1]")
        buf = buf.copy()
        buf.setflags(write=False)
        object.__setattr__(self, "samples", buf)

    def __len__(self):
        return int(self.samples.size)

    def __eq__(self, other):
        return isinstance(other, External) and np.array_equal(self.samples, other.samples)

    def __hash__(self):
        return hash(self.samples.tobytes())


@dataclass(frozen=True)
class Adsr:
    """Linear-segment ADSR used as a leader curve (times in seconds)."""

    attack_s: float = 0.1
    decay_s: float = 0.1
    sustain: float = 0.7
    release_s: float = 0.2

    def __post_init__(self):
        for name in ("attack_s", "decay_s", "release_s"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be a non-negative number, got {value!r}")
            object.__setattr__(self, name, float(value))
        if not (0.0 <= self.sustain <= 1.0):
            raise ValueError(f"sustain must lie in [0, 1], got {self.sustain!r}")
        object.__setattr__(self, "sustain", float(self.sustain))


LcSource = Union[InverseExp, Trapezoid, External, Adsr]


def lc_inverse_exp(n: int, phase: Phase, kr: float, kf: float, fs: float,
                   start: Optional[float] = None) -> float:
    if phase == Phase.KEY_ON:
        v0 = 0.0 if start is None else start
        return 1.0 - (1.0 - v0) * math.exp(-kr * n / fs)
    v0 = 1.0 if start is None else start
    return v0 * math.exp(-kf * n / fs)


def lc_trapezoid(n: int, phase: Phase, kr: float, kf: float, fs: float,
                 start: Optional[float] = None) -> float:
    if phase == Phase.KEY_ON:
        v0 = 0.0 if start is None else start
        return min(1.0, v0 + kr * n / fs)
    v0 = 1.0 if start is None else start
    return max(0.0, v0 - kf * n / fs)


def lc_adsr(t: float, phase: Phase, params: Adsr, start: Optional[float] = None) -> float:
    """Evaluate the ADSR leader curve ``t`` seconds into a phase.

    On key-on the attack ramps from ``start`` (default 0) to 1, the decay
    ramps to the sustain level and the sustain level is then held. On
    key-off the release ramps from ``start`` (default: the sustain level)
    down to 0.
    """
    if phase == Phase.KEY_ON:
        v0 = 0.0 if start is None else start
        a, d = params.attack_s, params.decay_s
        if t < a:
            return v0 + (1.0 - v0) * (t / a)
        if t < a + d:
            return 1.0 + (params.sustain - 1.0) * ((t - a) / d)
        return params.sustain
    v0 = params.sustain if start is None else start
    r = params.release_s
    if t >= r:
        return 0.0
    return v0 * (1.0 - t / r)


def lc_value(src: LcSource, n_global: int, phase: Phase, n_in_phase: int, fs: float,
             start: Optional[float] = None) -> float:
    """Dispatch to the generator for ``src``.

    External buffers are indexed by ``n_global`` and ignore phase; the
    parametric curves use ``n_in_phase``.
    """
    if isinstance(src, InverseExp):
        return lc_inverse_exp(n_in_phase, phase, src.kr, src.kf, fs, start)
    if isinstance(src, Trapezoid):
        return lc_trapezoid(n_in_phase, phase, src.kr, src.kf, fs, start)
    if isinstance(src, Adsr):
        return lc_adsr(n_in_phase / fs, phase, src, start)
    if isinstance(src, External):
        if not 0 <= n_global < src.samples.size:
            raise IndexError(
                f"sample {n_global} is beyond the external LC buffer ({src.samples.size} samples)"
            )
        return float(src.samples[n_global])
    raise TypeError(f"unsupported LC source: {type(src).__name__}")


def lc_from_values(values: Sequence[float]) -> External:
    return External(np.asarray(values, dtype=float))
