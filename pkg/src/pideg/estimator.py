"""scikit-learn style front end.

``PIDEnvelopeGenerator`` is a stateless transformer: ``fit`` validates the
hyper-parameters and ``transform`` maps a gate column to the envelope. The
usual ``get_params`` / ``set_params`` / ``clone`` machinery therefore works
for parameter sweeps, e.g.::

    gen = PIDEnvelopeGenerator(kp=0.1)
    for kp in (1e-4, 1e-3, 1e-1):
        eo = clone(gen).set_params(kp=kp).fit_transform(gate)
"""
from __future__ import annotations

import numbers

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .engine import EnvelopeTrace, PidegParams, TakeoverConfig, run_envelope
from .gate import GateSignal
from .lc import Adsr, External, InverseExp, Trapezoid

__all__ = ["PIDEnvelopeGenerator", "check_gate", "make_lc"]

_LC_KINDS = ("invexp", "trap", "adsr")


def check_gate(X):
    """Validate a gate input and return it as a 1-D int8 array.

    Accepts a 1-D sequence or a single-column 2-D array of 0/1 values.
    """
    arr = check_array(X, ensure_2d=False, dtype=None, ensure_all_finite=True,
                      input_name="X")
    if arr.ndim == 2:
        if arr.shape[1] != 1:
            raise ValueError(f"gate input must have a single column, got {arr.shape[1]}")
        arr = arr[:, 0]
    if arr.size == 0:
        raise ValueError("gate input is empty")
    if not np.all((arr == 0) | (arr == 1)):
        raise ValueError("gate values must be 0 (key-off) or 1 (key-on)")
    return arr.astype(np.int8)


def make_lc(lc, kr=100.0, kf=100.0, adsr=None):
    """Resolve an LC specification into an LC source.

    ``lc`` is one of ``"invexp"``, ``"trap"``, ``"adsr"``, an LC source
    object, or a 1-D array used as an external buffer.
    """
    if isinstance(lc, (InverseExp, Trapezoid, External, Adsr)):
        return lc
    if isinstance(lc, str):
        if lc == "invexp":
            return InverseExp(kr, kf)
        if lc == "trap":
            return Trapezoid(kr, kf)
        if lc == "adsr":
            return adsr if isinstance(adsr, Adsr) else Adsr(*(adsr or ()))
        raise ValueError(f"unknown LC kind {lc!r}; expected one of {_LC_KINDS}")
    return External(np.asarray(lc, dtype=float))


class PIDEnvelopeGenerator(TransformerMixin, BaseEstimator):
    """Gate-driven PID envelope generator.

    Parameters
    ----------
    kp, ki, kd : float
        Controller gains. ``ki`` and ``kd`` are scaled by ``gain_rate``
        (or by ``fs`` when ``gain_rate`` is None).
    kr, kf : float
        Rise and fall rates of the parametric leader curves.
    lc : str, LC source or array-like
        Leader curve; see :func:`make_lc`.
    windup : bool
        Clamp the follower inside the loop (envelope pins at the limits).
    gain_ceiling : float or None
        Upper bound applied to all three gains.
    i_off, d_off : int or None
        Key-off sample counts after which the I / D terms are removed.
    takeover : tuple or TakeoverConfig or None
        ``(min_keyoff_samples, eo_threshold, length)``.
    fs : float
        Envelope sampling rate in Hz.
    gain_rate : float or None
        Rate used to scale ``ki`` and ``kd``; 1.0 means per-sample gains.
    """

    def __init__(self, kp=0.0, ki=0.0, kd=0.0, kr=100.0, kf=100.0, lc="invexp",
                 windup=False, gain_ceiling=None, i_off=None, d_off=None,
                 takeover=None, fs=1000.0, gain_rate=None):
        self.kp = kp
        self.ki = ki
        self.kd = kd
        self.kr = kr
        self.kf = kf
        self.lc = lc
        self.windup = windup
        self.gain_ceiling = gain_ceiling
        self.i_off = i_off
        self.d_off = d_off
        self.takeover = takeover
        self.fs = fs
        self.gain_rate = gain_rate

    def _build(self):
        if not (isinstance(self.fs, numbers.Real) and self.fs > 0):
            raise ValueError(f"fs must be a positive number, got {self.fs!r}")
        takeover = self.takeover
        if takeover is not None and not isinstance(takeover, TakeoverConfig):
            takeover = TakeoverConfig(*takeover)
        params = PidegParams(
            kp=float(self.kp), ki=float(self.ki), kd=float(self.kd),
            windup=bool(self.windup), gain_ceiling=self.gain_ceiling,
            i_disable_after_keyoff=self.i_off, d_disable_after_keyoff=self.d_off,
            takeover=takeover, gain_rate=self.gain_rate,
        )
        return params, make_lc(self.lc, self.kr, self.kf)

    def fit(self, X=None, y=None):
        self.params_, self.lc_source_ = self._build()
        self.n_features_in_ = 1
        return self

    def render(self, X) -> EnvelopeTrace:
        """Run the generator and return the full per-sample trace."""
        check_is_fitted(self, "params_")
        gate = GateSignal.from_array(check_gate(X))
        return run_envelope(gate, self.lc_source_, self.params_, float(self.fs))

    def transform(self, X):
        """Envelope output for gate ``X``, shaped like ``X``."""
        trace = self.render(X)
        if np.ndim(X) == 2:
            return trace.eo.reshape(-1, 1)
        return trace.eo
