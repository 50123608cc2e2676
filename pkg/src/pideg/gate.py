"""Gate signals: per-sample key-on/key-off streams stored as run lengths."""
from __future__ import annotations

import re
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal, InvalidOperation
from enum import IntEnum
from typing import Iterator, NamedTuple, Sequence, Tuple

import numpy as np

__all__ = ["Phase", "GateSignal", "GateSample", "GateSpecError", "gate_from_spec"]


class Phase(IntEnum):
    KEY_OFF = 0
    KEY_ON = 1


class GateSpecError(ValueError):
    """Malformed gate mini-language text; ``position`` is a 0-based offset."""

    def __init__(self, message, position):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class GateSample(NamedTuple):
    state: Phase
    samples_in_phase: int
    is_transition: bool


@dataclass(frozen=True)
class GateSignal:
    """Ordered ``(state, duration_samples)`` segments.

    Adjacent segments with the same state are merged on construction, so
    consecutive segments always alternate.
    """

    segments: Tuple[Tuple[Phase, int], ...]

    def __post_init__(self):
        merged = []
        for state, length in self.segments:
            state = Phase(int(state))
            length = int(length)
            if length < 1:
                raise ValueError(f"gate segment duration must be >= 1 sample, got {length}")
            if merged and merged[-1][0] == state:
                merged[-1] = (state, merged[-1][1] + length)
            else:
                merged.append((state, length))
        if not merged:
            raise ValueError("gate signal must contain at least one segment")
        object.__setattr__(self, "segments", tuple(merged))

    @property
    def total_samples(self) -> int:
        return sum(length for _, length in self.segments)

    def __len__(self):
        return self.total_samples

    def __iter__(self) -> Iterator[GateSample]:
        return gate_iterate(self)

    def to_array(self) -> np.ndarray:
        return np.concatenate(
            [np.full(length, int(state), dtype=np.int8) for state, length in self.segments]
        )

    def segment_starts(self):
        """Yield ``(start_index, state, length)`` for each segment."""
        start = 0
        for state, length in self.segments:
            yield start, state, length
            start += length

    @classmethod
    def from_array(cls, values: Sequence[int]) -> "GateSignal":
        arr = np.asarray(values)
        if arr.ndim != 1 or arr.size == 0:
            raise ValueError("gate array must be a non-empty 1-D sequence")
        if not np.all((arr == 0) | (arr == 1)):
            raise ValueError("gate array may only contain 0 (key-off) and 1 (key-on)")
        arr = arr.astype(np.int8)
        edges = np.flatnonzero(np.diff(arr)) + 1
        bounds = np.concatenate(([0], edges, [arr.size]))
        return cls(tuple(
            (Phase(int(arr[a])), int(b - a)) for a, b in zip(bounds[:-1], bounds[1:])
        ))


def gate_iterate(g: GateSignal) -> Iterator[GateSample]:
    first = True
    for state, length in g.segments:
        for k in range(length):
            yield GateSample(state, k, k == 0 and not first)
        first = False


_TOKEN = re.compile(r"\s*(on|off)\s*:\s*([^,\s]*)\s*", re.IGNORECASE)


def gate_from_spec(spec: str, fs: float) -> GateSignal:
    """Parse ``"on:1.0,off:0.5,..."`` (durations in seconds) at rate ``fs``.

    Durations are converted with round-half-away-from-zero on the exact
    decimal value of the text, so ``on:0.0015`` at 1 kHz is 2 samples.
    """
    if not spec or not spec.strip():
        raise GateSpecError("empty gate specification", 0)
    try:
        rate = Decimal(str(fs))
    except InvalidOperation:
        raise ValueError(f"invalid sampling rate {fs!r}") from None
    if not rate.is_finite() or rate <= 0:
        raise ValueError(f"sampling rate must be positive, got {fs!r}")

    segments = []
    pos = 0
    while True:
        m = _TOKEN.match(spec, pos)
        if m is None:
            raise GateSpecError("expected 'on:<seconds>' or 'off:<seconds>'", pos)
        state = Phase.KEY_ON if m.group(1).lower() == "on" else Phase.KEY_OFF
        try:
            seconds = Decimal(m.group(2))
        except InvalidOperation:
            raise GateSpecError(f"invalid duration {m.group(2)!r}", m.start(2)) from None
        if not seconds.is_finite() or seconds <= 0:
            raise GateSpecError(f"duration must be positive, got {m.group(2)!r}", m.start(2))
        samples = int((seconds * rate).to_integral_value(rounding=ROUND_HALF_UP))
        if samples < 1:
            raise GateSpecError(f"duration {m.group(2)}s rounds to zero samples", m.start(2))
        segments.append((state, samples))
        pos = m.end()
        if pos == len(spec):
            break
        if spec[pos] != ",":
            raise GateSpecError("expected ','", pos)
        pos += 1
    return GateSignal(tuple(segments))
