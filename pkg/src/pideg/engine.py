"""The PID envelope generator.

Each sample the controller sees the error between the leader curve and the
follower curve's previous value, runs the incremental (velocity-form) PID
recursion, and the follower accumulates the controller output::

    e[n]  = lc[n] - fc[n-1]
    c[n]  = c[n-1] + kp*(e[n]-e[n-1]) + (ki/r)*e[n] + kd*r*(e[n]-2e[n-1]+e[n-2])
    fc[n] = fc[n-1] + c[n]
    eo[n] = min(1, max(0, fc[n]))

``r`` is the sampling rate unless ``PidegParams.gain_rate`` overrides it;
``gain_rate=1`` treats ``ki`` and ``kd`` as per-sample gains.
"""
from __future__ import annotations

import math
import numbers
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from .gate import GateSignal, Phase
from .lc import External, LcSource, lc_value

__all__ = [
    "NumericBlowUp",
    "TakeoverConfig",
    "PidegParams",
    "EngineState",
    "EnvelopeTrace",
    "PidegEngine",
    "pid_step",
    "clamp_eo",
    "effective_gains",
    "takeover_should_trigger",
    "takeover_sample",
    "run_envelope",
]

# exp(-7) < 1e-3, so the penultimate takeover sample is below 0.1 % of its start.
TAKEOVER_DECAY = 7.0


class NumericBlowUp(FloatingPointError):
    """The recursion produced a non-finite value."""


@dataclass(frozen=True)
class TakeoverConfig:
    min_keyoff_samples: int = 100
    eo_threshold: float = 0.02
    length: int = 250

    def __post_init__(self):
        if int(self.min_keyoff_samples) != self.min_keyoff_samples or self.min_keyoff_samples < 0:
            raise ValueError("min_keyoff_samples must be a non-negative integer")
        if not 0.0 < self.eo_threshold < 1.0:
            raise ValueError("eo_threshold must lie strictly between 0 and 1")
        if int(self.length) != self.length or self.length < 1:
            raise ValueError("takeover length must be a positive integer")
        object.__setattr__(self, "eo_threshold", float(self.eo_threshold))


def _check_gain(name, value):
    if not (isinstance(value, numbers.Real) and math.isfinite(value) and value >= 0):
        raise ValueError(f"{name} must be a non-negative finite number, got {value!r}")


def _check_count(name, value):
    if value is not None and (int(value) != value or value < 1):
        raise ValueError(f"{name} must be a positive sample count, got {value!r}")


@dataclass(frozen=True)
class PidegParams:
    """Controller configuration.

    ``gain_ceiling`` clamps the three gains once, here, rather than per
    sample. ``i_disable_after_keyoff`` / ``d_disable_after_keyoff`` remove
    the integral / derivative contribution that many samples into key-off.
    """

    kp: float = 0.0
    ki: float = 0.0
    kd: float = 0.0
    windup: bool = False
    gain_ceiling: Optional[float] = None
    i_disable_after_keyoff: Optional[int] = None
    d_disable_after_keyoff: Optional[int] = None
    takeover: Optional[TakeoverConfig] = None
    gain_rate: Optional[float] = None

    def __post_init__(self):
        for name in ("kp", "ki", "kd"):
            _check_gain(name, getattr(self, name))
            object.__setattr__(self, name, float(getattr(self, name)))
        if self.gain_ceiling is not None:
            _check_gain("gain_ceiling", self.gain_ceiling)
            for name in ("kp", "ki", "kd"):
                object.__setattr__(self, name, min(getattr(self, name), self.gain_ceiling))
        _check_count("i_disable_after_keyoff", self.i_disable_after_keyoff)
        _check_count("d_disable_after_keyoff", self.d_disable_after_keyoff)
        if self.gain_rate is not None and not (math.isfinite(self.gain_rate) and self.gain_rate > 0):
            raise ValueError(f"gain_rate must be positive, got {self.gain_rate!r}")

    @property
    def gains(self) -> Tuple[float, float, float]:
        return self.kp, self.ki, self.kd


@dataclass
class EngineState:
    e_prev: float = 0.0
    e_prev2: float = 0.0
    c_prev: float = 0.0
    fc_prev: float = 0.0
    # Running integral and derivative contributions, kept so that the
    # key-off disable timers can remove them from c exactly.
    integral: float = 0.0
    kd_in_use: float = 0.0
    phase: Phase = Phase.KEY_OFF
    samples_in_phase: int = 0
    lc_prev: float = 0.0
    lc_start: float = 0.0
    eo_prev: float = 0.0
    takeover_active: bool = False
    takeover_done: bool = False
    takeover_index: int = 0
    takeover_start_value: float = 0.0

    def reset_recursion(self):
        self.e_prev = self.e_prev2 = self.c_prev = self.fc_prev = 0.0
        self.integral = self.kd_in_use = 0.0
        self.takeover_active = self.takeover_done = False
        self.takeover_index = 0
        self.takeover_start_value = 0.0


@dataclass
class EnvelopeTrace:
    """Per-sample record of a run. ``fc`` is the unclamped follower curve."""

    gate: np.ndarray
    lc: np.ndarray
    fc: np.ndarray
    eo: np.ndarray
    fs: float

    def __post_init__(self):
        self.gate = np.asarray(self.gate, dtype=np.int8)
        self.lc = np.asarray(self.lc, dtype=float)
        self.fc = np.asarray(self.fc, dtype=float)
        self.eo = np.asarray(self.eo, dtype=float)
        n = self.gate.shape
        if not (self.lc.shape == self.fc.shape == self.eo.shape == n) or len(n) != 1:
            raise ValueError("trace columns must be 1-D and of equal length")
        if not self.fs > 0:
            raise ValueError("fs must be positive")

    def __len__(self):
        return int(self.gate.size)

    @property
    def t(self) -> np.ndarray:
        return np.arange(len(self)) / self.fs

    @property
    def duration(self) -> float:
        return len(self) / self.fs

    def keyoff_start(self) -> Optional[int]:
        """Index where the final key-off segment begins, if the trace ends in key-off."""
        if len(self) == 0 or self.gate[-1] != Phase.KEY_OFF:
            return None
        on = np.flatnonzero(self.gate == Phase.KEY_ON)
        return 0 if on.size == 0 else int(on[-1]) + 1


def clamp_eo(fc: float) -> float:
    return max(0.0, min(1.0, fc))


def pid_step(state: EngineState, e_n: float, kp: float, ki: float, kd: float, fs: float) -> float:
    """Advance the velocity-form recursion by one sample and return ``c[n]``.

    ``state`` supplies and receives ``e[n-1]``, ``e[n-2]`` and ``c[n-1]``.
    The gains are the ones in effect for this sample (see
    :func:`effective_gains`).
    """
    if not math.isfinite(e_n):
        raise NumericBlowUp(f"non-finite error value {e_n!r}")
    e1, e2 = state.e_prev, state.e_prev2
    i_term = (ki / fs) * e_n
    c = state.c_prev + kp * (e_n - e1) + i_term + kd * fs * (e_n - 2.0 * e1 + e2)
    if not math.isfinite(c):
        raise NumericBlowUp("controller output left the floating-point range")
    state.integral += i_term
    state.e_prev2 = e1
    state.e_prev = e_n
    state.c_prev = c
    return c


def effective_gains(params: PidegParams, phase: Phase, samples_in_phase: int):
    kp, ki, kd = params.kp, params.ki, params.kd
    if phase == Phase.KEY_OFF:
        if params.i_disable_after_keyoff is not None and samples_in_phase >= params.i_disable_after_keyoff:
            ki = 0.0
        if params.d_disable_after_keyoff is not None and samples_in_phase >= params.d_disable_after_keyoff:
            kd = 0.0
    return kp, ki, kd


def takeover_should_trigger(cfg: TakeoverConfig, samples_in_keyoff: int, eo: float) -> bool:
    return samples_in_keyoff > cfg.min_keyoff_samples and eo < cfg.eo_threshold


def takeover_sample(cfg: TakeoverConfig, start_value: float, k: int) -> float:
    """Sample ``k`` of the decaying stream that replaces the PID output.

    The stream falls exponentially from ``start_value`` and its final
    sample is exactly zero.
    """
    if not 0 <= k < cfg.length:
        raise IndexError(f"takeover index {k} outside [0, {cfg.length})")
    if k == cfg.length - 1:
        return 0.0
    return start_value * math.exp(-TAKEOVER_DECAY * k / (cfg.length - 1))


class PidegEngine:
    """Sample-by-sample envelope generator.

    Create one, then call :meth:`process` with each gate value. The engine
    starts at rest in key-off with the leader curve at 0.
    """

    def __init__(self, params: PidegParams, lc: LcSource, fs: float):
        if not (math.isfinite(fs) and fs > 0):
            raise ValueError(f"fs must be positive, got {fs!r}")
        self.params = params
        self.lc = lc
        self.fs = float(fs)
        self.rate = float(params.gain_rate) if params.gain_rate is not None else self.fs
        self.state = EngineState()
        self.n = 0

    def reset(self):
        self.state = EngineState()
        self.n = 0

    def process(self, gate: int) -> Tuple[float, float, float]:
        """Consume one gate sample; return ``(lc, fc, eo)``."""
        st = self.state
        params = self.params
        phase = Phase.KEY_ON if gate else Phase.KEY_OFF

        if phase != st.phase:
            st.lc_start = st.lc_prev
            st.phase = phase
            st.samples_in_phase = 0
            if phase == Phase.KEY_ON and (st.takeover_active or st.takeover_done):
                st.reset_recursion()
        n_in = st.samples_in_phase
        lc = lc_value(self.lc, self.n, phase, n_in, self.fs, st.lc_start)
        st.lc_prev = lc

        if st.takeover_active or st.takeover_done:
            fc = eo = self._takeover_output()
        else:
            fc, eo = self._pid_output(lc, phase, n_in)

        st.eo_prev = eo
        st.samples_in_phase += 1
        self.n += 1
        return lc, fc, eo

    def _takeover_output(self) -> float:
        st = self.state
        if st.takeover_done:
            return 0.0
        cfg = self.params.takeover
        out = takeover_sample(cfg, st.takeover_start_value, st.takeover_index)
        st.takeover_index += 1
        if st.takeover_index == cfg.length:
            st.takeover_active = False
            st.takeover_done = True
        return out

    def _start_takeover(self, start_value: float):
        st = self.state
        st.takeover_active = True
        st.takeover_index = 0
        st.takeover_start_value = start_value

    def _pid_output(self, lc: float, phase: Phase, n_in: int):
        st = self.state
        params = self.params
        cfg = params.takeover
        kp, ki, kd = effective_gains(params, phase, n_in)

        # A disabled term's accumulated share has to leave c as well,
        # otherwise the follower keeps integrating a frozen contribution.
        # The velocity sum equals kp*e[n-1] + integral + kd*rate*(e[n-1]-e[n-2]),
        # so it is rebuilt from the surviving terms to avoid rounding residue.
        changed = False
        if ki == 0.0 and st.integral != 0.0:
            st.integral = 0.0
            changed = True
        if kd != st.kd_in_use:
            st.kd_in_use = kd
            changed = True
        if changed:
            st.c_prev = (kp * st.e_prev + st.integral
                         + kd * self.rate * (st.e_prev - st.e_prev2))

        try:
            c = pid_step(st, lc - st.fc_prev, kp, ki, kd, self.rate)
            fc = st.fc_prev + c
            if not math.isfinite(fc):
                raise NumericBlowUp("follower curve left the floating-point range")
        except NumericBlowUp:
            if (cfg is not None and phase == Phase.KEY_OFF
                    and takeover_should_trigger(cfg, n_in, st.eo_prev)):
                self._start_takeover(st.eo_prev)
                out = self._takeover_output()
                return out, out
            raise

        if params.windup:
            fc = clamp_eo(fc)
        st.fc_prev = fc
        eo = clamp_eo(fc)
        if cfg is not None and phase == Phase.KEY_OFF and takeover_should_trigger(cfg, n_in, eo):
            self._start_takeover(eo)
        return fc, eo


def run_envelope(gate: GateSignal, lc: LcSource, params: PidegParams, fs: float) -> EnvelopeTrace:
    """Render a full envelope for ``gate``."""
    total = gate.total_samples
    if isinstance(lc, External) and len(lc) < total:
        raise ValueError(
            f"external LC buffer has {len(lc)} samples but the gate needs {total}"
        )
    engine = PidegEngine(params, lc, fs)
    gates = gate.to_array()
    lcs = np.empty(total)
    fcs = np.empty(total)
    eos = np.empty(total)
    process = engine.process
    for i in range(total):
        lcs[i], fcs[i], eos[i] = process(gates[i])
    return EnvelopeTrace(gates, lcs, fcs, eos, float(fs))
