"""PID envelope generator: a gate-driven PID loop that follows a leader curve."""
from .analysis import (
    OscillationReport,
    alternation_ratio,
    analyze_trace,
    is_finite_envelope,
    max_bump,
    oscillation_frequency,
    settling_time,
)
from .engine import (
    EngineState,
    EnvelopeTrace,
    NumericBlowUp,
    PidegEngine,
    PidegParams,
    TakeoverConfig,
    clamp_eo,
    effective_gains,
    pid_step,
    run_envelope,
    takeover_sample,
    takeover_should_trigger,
)
from .estimator import PIDEnvelopeGenerator
from .gate import GateSignal, Phase, gate_from_spec
from .lc import Adsr, External, InverseExp, Trapezoid, lc_value

__version__ = "0.1.0"
