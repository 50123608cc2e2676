import math

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from pideg.analysis import (
    alternation_ratio,
    analyze_trace,
    is_finite_envelope,
    max_bump,
    mean_abs_deviation,
    oscillation_frequency,
    oscillation_report,
    settling_time,
)
from pideg.engine import EnvelopeTrace, PidegParams, run_envelope
from pideg.gate import gate_from_spec
from pideg.lc import InverseExp

FS = 1000.0
finite = st.floats(-1e3, 1e3, allow_nan=False)


class TestAlternation:
    def test_perfect(self):
        assert alternation_ratio([0, 1, 0, 1, 0]) == 1.0

    def test_constant(self):
        assert alternation_ratio([0, 0, 0, 0]) == 0.0

    def test_too_short(self):
        with pytest.raises(ValueError):
            alternation_ratio([0, 1])

    @given(x=st.lists(finite, min_size=3, max_size=50),
           a=st.integers(1, 64), b=st.integers(-100, 100))
    def test_affine_invariance(self, x, a, b):
        # Power-of-two style integer scales keep the arithmetic exact enough
        # that strict sign comparisons are not perturbed by rounding.
        arr = np.round(np.asarray(x)).astype(float)
        assert alternation_ratio(a * arr + b) == alternation_ratio(arr)


class TestFrequency:
    def test_sinusoid(self):
        t = np.arange(1000) / FS
        x = np.sin(2 * np.pi * 25 * t + 0.1)
        assert oscillation_frequency(x, FS) == pytest.approx(25, abs=0.5)

    def test_zero(self):
        assert oscillation_frequency(np.zeros(100), FS) == 0.0

    def test_nyquist(self):
        x = 1e-9 * (-1.0) ** np.arange(1000)
        assert oscillation_frequency(x, FS) == 500.0

    @given(f=st.floats(1.0, 400.0), phase=st.floats(0.01, 3.0))
    def test_sinusoid_within_resolution(self, f, phase):
        n = 2000
        x = np.sin(2 * np.pi * f * np.arange(n) / FS + phase)
        assume(np.all(x != 0))
        duration = (n - 1) / FS
        assert abs(oscillation_frequency(x, FS) - f) <= 1.0 / duration

    def test_too_short(self):
        with pytest.raises(ValueError):
            oscillation_frequency([1.0], FS)


class TestSettling:
    def test_constant_at_target(self):
        assert settling_time(np.ones(50), 1.0, 0.01, FS) == 0.0

    def test_exponential(self):
        t = np.arange(5000) / FS
        eo = 1 - np.exp(-t)
        assert settling_time(eo, 1.0, math.exp(-3), FS) == pytest.approx(3.0, abs=1 / FS)

    def test_perpetual_oscillation(self):
        eo = 1 + 0.02 * (-1.0) ** np.arange(1000)
        assert settling_time(eo, 1.0, 0.01, FS) is None

    @pytest.mark.parametrize("tol", [0.0, 1.0])
    def test_tol_range(self, tol):
        with pytest.raises(ValueError):
            settling_time([1.0], 1.0, tol, FS)

    @given(x=st.lists(st.floats(0, 1), min_size=1, max_size=60),
           t1=st.floats(0.001, 0.99), t2=st.floats(0.001, 0.99))
    def test_monotone_in_tol(self, x, t1, t2):
        lo, hi = sorted((t1, t2))
        a = settling_time(x, 0.5, lo, FS)
        b = settling_time(x, 0.5, hi, FS)
        if a is not None:
            assert b is not None and b <= a


class TestBump:
    def test_example(self):
        assert max_bump([0, 0.5, 0.6]) == 0.5

    def test_constant(self):
        assert max_bump([0.3] * 10) == 0.0

    @given(st.lists(finite, min_size=2, max_size=60))
    def test_reversal_invariance(self, x):
        assert max_bump(x) == max_bump(x[::-1])

    def test_pi_trace_small(self):
        tr = run_envelope(gate_from_spec("on:1,off:1", FS), InverseExp(100, 100),
                          PidegParams(kp=0.1, ki=1e-3, d_disable_after_keyoff=92,
                                      gain_rate=1.0), FS)
        assert max_bump(tr.eo) < 0.05


class TestFiniteEnvelope:
    def test_decaying_exponential(self):
        eo = np.concatenate([np.ones(100), np.exp(-np.arange(2000) / 50)])
        assert is_finite_envelope(eo, 100)

    def test_sustained_oscillation(self):
        eo = 0.5 + 0.1 * (-1.0) ** np.arange(2000)
        assert not is_finite_envelope(eo, 0)

    def test_slow_oscillation_with_quiet_troughs(self):
        # Half-wave rectified 1 Hz swing: long quiet runs, but the last one
        # is too short compared with the tail to count as termination.
        t = np.arange(5000) / FS
        eo = np.clip(0.2 * np.sin(2 * np.pi * t), 0, 1)
        assert not is_finite_envelope(eo, 0)

    def test_silent_tail(self):
        assert is_finite_envelope(np.zeros(100), 0)

    def test_short_tail_rejected(self):
        with pytest.raises(ValueError):
            is_finite_envelope(np.zeros(150), 60)

    def test_keyoff_outside(self):
        with pytest.raises(ValueError):
            is_finite_envelope(np.zeros(150), 150)


class TestReports:
    def test_mad(self):
        assert mean_abs_deviation([1, 2, 3], [1, 1, 1]) == 1.0

    def test_mad_shape_mismatch(self):
        with pytest.raises(ValueError):
            mean_abs_deviation([1, 2], [1])

    def test_frequency_bounded_by_nyquist(self):
        rng = np.random.default_rng(3)
        rep = oscillation_report(rng.normal(size=500), np.zeros(500), FS)
        assert 0 <= rep.mean_frequency_hz <= FS / 2

    def test_analyze_constant_trace(self):
        n = 200
        ones = np.ones(n)
        tr = EnvelopeTrace(np.ones(n, dtype=np.int8), ones, ones, ones, FS)
        rep = analyze_trace(tr)
        assert rep["alternation_ratio"] == 0.0
        assert rep["settling_time_s"] == 0.0
        assert "finite_envelope" not in rep

    def test_analyze_window(self):
        tr = run_envelope(gate_from_spec("on:1,off:1", FS), InverseExp(100, 100),
                          PidegParams(kp=2.0, d_disable_after_keyoff=92, gain_rate=1.0), FS)
        rep = analyze_trace(tr, window=(0.2, 0.9))
        assert rep["samples"] == 700
        assert rep["alternation_ratio"] >= 0.9
        assert rep["finite_envelope"] is True

    def test_analyze_window_too_small(self):
        n = 10
        z = np.zeros(n)
        tr = EnvelopeTrace(np.zeros(n, dtype=np.int8), z, z, z, FS)
        with pytest.raises(ValueError):
            analyze_trace(tr, window=(0.0, 0.002))
