"""Piecewise-linear bus-frequency schedules (flux pulses expressed in frequency)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameterError, TuningRangeError


@dataclass(frozen=True)
class FluxSchedule:
    """Bus target frequency profile.

    Starts at ``initial`` (rad/s) and ramps linearly to each ``(target, duration)``
    segment in turn. Durations are in seconds.
    """

    initial: float
    segments: tuple

    def __post_init__(self):
        segs = tuple((float(w), float(d)) for w, d in self.segments)
        if not segs:
            raise InvalidParameterError("a schedule needs at least one segment")
        for _, d in segs:
            if not d > 0:
                raise InvalidParameterError(f"segment durations must be positive, got {d}")
        object.__setattr__(self, "segments", segs)

    @property
    def duration(self):
        return sum(d for _, d in self.segments)

    @property
    def breakpoints(self):
        """(times, frequencies) at the segment boundaries, including t = 0."""
        times = np.concatenate([[0.0], np.cumsum([d for _, d in self.segments])])
        freqs = np.array([self.initial] + [w for w, _ in self.segments])
        return times, freqs

    @property
    def slopes(self):
        """Ramp rate of each segment in rad/s^2."""
        _, freqs = self.breakpoints
        return np.diff(freqs) / np.array([d for _, d in self.segments])

    def omega_at(self, t):
        """Bus frequency at time ``t``; held at the end points outside the schedule."""
        times, freqs = self.breakpoints
        return np.interp(t, times, freqs)

    def scaled(self, factor):
        """Same frequency path traversed with every duration multiplied by ``factor``."""
        return FluxSchedule(self.initial, tuple((w, d * factor) for w, d in self.segments))

    def check_range(self, omega_min, omega_max):
        _, freqs = self.breakpoints
        if freqs.min() < omega_min or freqs.max() > omega_max:
            raise TuningRangeError(
                f"schedule spans [{freqs.min():.6g}, {freqs.max():.6g}] rad/s, outside the "
                f"tuning range [{omega_min:.6g}, {omega_max:.6g}]"
            )
        return self
