"""Identification fitness and step-response characteristics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateReference, NeverSettles, NoCrossing, ZeroReference

FITNESS_FLOOR = -1000.0


def _pair(d, d_hat):
    d = np.asarray(d, dtype=float)
    d_hat = np.asarray(d_hat, dtype=float)
    if d.shape != d_hat.shape or d.ndim != 1 or len(d) < 2:
        raise ValueError("fitness needs two equal-length 1-D sequences of length >= 2")
    return d, d_hat


def fitness(d, d_hat) -> float:
    """Normalized RMS fit in percent: 100 (1 - |d - d_hat| / |d - mean(d)|)."""
    d, d_hat = _pair(d, d_hat)
    ref = np.linalg.norm(d - d.mean())
    if ref == 0.0:
        raise DegenerateReference("reference signal is constant")
    return max(100.0 * (1.0 - np.linalg.norm(d - d_hat) / ref), FITNESS_FLOOR)


def fitness_vaf(d, d_hat) -> float:
    """Variance-accounted-for in percent: 100 (1 - |d - d_hat|^2 / |d - mean(d)|^2)."""
    d, d_hat = _pair(d, d_hat)
    ref = np.sum((d - d.mean()) ** 2)
    if ref == 0.0:
        raise DegenerateReference("reference signal is constant")
    return max(100.0 * (1.0 - np.sum((d - d_hat) ** 2) / ref), FITNESS_FLOOR)


@dataclass(frozen=True)
class StepMetrics:
    overshoot: float
    settling_time: float
    rise_time: float


def overshoot(y, y_ss: float) -> float:
    if y_ss == 0:
        raise ZeroReference("overshoot is undefined for a zero final value")
    y = np.asarray(y, dtype=float)
    return 100.0 * max(0.0, (float(np.max(y)) - y_ss) / abs(y_ss))


def settling_time(y, t, y_ss: float, band: float = 0.02) -> float:
    """Time from t[0] after which y stays within band*|y_ss| of y_ss."""
    if y_ss == 0:
        raise ZeroReference("settling time is undefined for a zero final value")
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if y.shape != t.shape:
        raise ValueError("y and t must have the same length")
    outside = np.flatnonzero(np.abs(y - y_ss) > band * abs(y_ss))
    if len(outside) == 0:
        return 0.0
    last = outside[-1]
    if last == len(y) - 1:
        raise NeverSettles("response is outside the settling band at the end of the record")
    return float(t[last + 1] - t[0])


def _first_crossing(y, t, level):
    above = np.flatnonzero(y >= level)
    if len(above) == 0:
        raise NoCrossing(f"response never reaches {level!r}")
    i = above[0]
    if i == 0:
        return t[0]
    # linear interpolation between the bracketing samples
    y0, y1 = y[i - 1], y[i]
    return t[i - 1] + (level - y0) / (y1 - y0) * (t[i] - t[i - 1])


def rise_time(y, t, y_ss: float, low: float = 0.1, high: float = 0.9) -> float:
    if y_ss == 0:
        raise ZeroReference("rise time is undefined for a zero final value")
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if y_ss < 0:
        y, y_ss = -y, -y_ss
    return float(_first_crossing(y, t, high * y_ss) - _first_crossing(y, t, low * y_ss))


def step_metrics(y, t, y_ss: float, band: float = 0.02) -> StepMetrics:
    return StepMetrics(
        overshoot=overshoot(y, y_ss),
        settling_time=settling_time(y, t, y_ss, band),
        rise_time=rise_time(y, t, y_ss),
    )


def _window(y, t, window):
    y = np.asarray(y, dtype=float)
    t = np.asarray(t, dtype=float)
    if len(t) == 0:
        raise ValueError("empty trace")
    if window > t[-1] - t[0] + 1e-12:
        raise ValueError("window longer than the trace")
    return y[t >= t[-1] - window - 1e-12]


def steady_state_peak(y, t, window: float) -> float:
    """max |y| over the final ``window`` seconds."""
    return float(np.max(np.abs(_window(y, t, window))))


def steady_state_rms(y, t, window: float) -> float:
    w = _window(y, t, window)
    return float(np.sqrt(np.mean(w ** 2)))


def rms(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sqrt(np.mean(x ** 2)))
