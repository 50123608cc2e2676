"""Built-in parameter sweeps, keyed by figure id (11-17).

All presets share one ambient setup: 1 kHz sampling, an inverse-exponential
LC with kr = kf = 100, windup off, the derivative term switched off 92
samples into key-off, and a 1 s key-on followed by a 1 s key-off. Gains are
per-sample (``gain_rate=1``).

Sweeps 11 (P), 12 (I) and 17 (PID) use fixed gain grids. The D sweep (13)
and the two-term sweeps (14 PI, 15 PD, 16 ID) use gains picked to show each
mode's characteristic shape; their ``note`` says so.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List

from .engine import PidegParams
from .gate import GateSignal, gate_from_spec
from .lc import InverseExp, LcSource

__all__ = ["ExperimentPreset", "FIGURES", "figure_presets", "PRESETS"]

FS = 1000.0
GATE = "on:1,off:1"
D_OFF = 92


@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    params: PidegParams
    lc: LcSource = field(default_factory=lambda: InverseExp(100.0, 100.0))
    gate: str = GATE
    fs: float = FS
    note: str = ""

    def gate_signal(self) -> GateSignal:
        return gate_from_spec(self.gate, self.fs)


def _preset(name, kp=0.0, ki=0.0, kd=0.0, note=""):
    params = PidegParams(kp=kp, ki=ki, kd=kd, windup=False,
                         d_disable_after_keyoff=D_OFF, gain_rate=1.0)
    return ExperimentPreset(name=name, params=params, note=note)


_RECON = "illustrative gains chosen to show the mode's characteristic shape"

FIGURES: Dict[int, List[ExperimentPreset]] = {
    11: [
        _preset("fig11a", kp=1e-4),
        _preset("fig11b", kp=1e-3),
        _preset("fig11c", kp=1e-1),
        _preset("fig11d", kp=2.0),
    ],
    12: [
        _preset("fig12a", ki=1e-4),
        _preset("fig12b", ki=1e-3),
        _preset("fig12c", ki=1e-2),
        _preset("fig12d", ki=1e-1),
    ],
    13: [
        _preset("fig13a", kd=0.05, note=_RECON),
        _preset("fig13b", kd=0.1, note=_RECON),
        _preset("fig13c", kd=1.0, note=_RECON),
    ],
    14: [
        # PI: a faster skeleton, then faster oscillation about it.
        _preset("fig14a", kp=1e-1, ki=1e-3, note=_RECON),
        _preset("fig14b", kp=1e-2, ki=1e-2, note=_RECON),
    ],
    15: [
        # PD: negligible D, then D at unity.
        _preset("fig15a", kp=1e-2, kd=1e-2, note=_RECON),
        _preset("fig15b", kp=1e-2, kd=1.0, note=_RECON),
    ],
    16: [
        # ID: I-like at low kd, steeper edges as kd grows.
        _preset("fig16a", ki=1e-3, kd=1e-3, note=_RECON),
        _preset("fig16b", ki=1e-3, kd=0.5, note=_RECON),
    ],
    17: [
        _preset("fig17a", kp=1e-3, ki=1e-4, kd=1e-3),
        _preset("fig17b", kp=1e-2, ki=1e-4, kd=1e-3),
        _preset("fig17c", kp=1e-3, ki=1e-3, kd=1e-3),
        _preset("fig17d", kp=1e-3, ki=1e-4, kd=1.0),
    ],
}

PRESETS: Dict[str, ExperimentPreset] = {p.name: p for ps in FIGURES.values() for p in ps}


def figure_presets(figure: int) -> List[ExperimentPreset]:
    try:
        return FIGURES[int(figure)]
    except (KeyError, ValueError):
        raise KeyError(f"no presets for figure {figure!r}; known: {sorted(FIGURES)}") from None
