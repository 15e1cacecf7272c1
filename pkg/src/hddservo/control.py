"""Parallel-form PID with filtered derivative, and actuator saturation."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import NonFiniteError


@dataclass(frozen=True)
class PidGains:
    """u = P e + I/s e + D N s/(s + N) e"""

    P: float
    I: float = 0.0
    D: float = 0.0
    N: float = 100.0

    def __post_init__(self):
        for name in ("P", "I", "D", "N"):
            if not math.isfinite(getattr(self, name)):
                raise ValueError(f"PID gain {name} must be finite")
        if not self.N > 0:
            raise ValueError("derivative filter coefficient N must be positive")


# Reference tunings for the two loops.
VCM_GAINS = PidGains(P=0.0328608, I=0.8955647, D=9.86285e-05, N=3316.4)
MICRO_ACTUATOR_GAINS = PidGains(P=0.0650849, I=4.7032010, D=1.99346e-04, N=1402745.0)


class PidController:
    """Discrete PID; integral and derivative-filter terms use the bilinear map
    s -> (2/Ts)(z - 1)/(z + 1) unless ``method`` says otherwise.

    ``method`` may also be ``"backward-euler"`` (s -> (z - 1)/(Ts z)) or
    ``"forward-euler"`` (s -> (z - 1)/Ts).
    """

    METHODS = ("bilinear", "backward-euler", "forward-euler")

    def __init__(self, gains: PidGains, Ts: float, method: str = "bilinear"):
        if not Ts > 0:
            raise ValueError("Ts must be positive")
        if method not in self.METHODS:
            raise ValueError(f"unknown PID discretization {method!r}")
        self.gains = gains
        self.Ts = float(Ts)
        self.method = method
        self._coefficients()
        self.reset()

    def _coefficients(self):
        g, T = self.gains, self.Ts
        # integral:   ui(k) = ui(k-1) + ci0 e(k) + ci1 e(k-1)
        # derivative: ud(k) = -pd ud(k-1) + cd (e(k) - e(k-1))
        if self.method == "bilinear":
            c = 2.0 / T
            self._ci = (g.I * T / 2.0, g.I * T / 2.0)
            self._pd = (g.N - c) / (c + g.N)
            self._cd = g.D * g.N * c / (c + g.N)
        elif self.method == "backward-euler":
            self._ci = (g.I * T, 0.0)
            self._pd = -1.0 / (1.0 + g.N * T)
            self._cd = g.D * g.N / (1.0 + g.N * T)
        else:
            self._ci = (0.0, g.I * T)
            self._pd = g.N * T - 1.0
            self._cd = g.D * g.N

    def reset(self):
        self.integral = 0.0
        self.derivative = 0.0
        self._e_prev = 0.0

    def step(self, e: float) -> float:
        if not math.isfinite(e):
            raise NonFiniteError(f"PID error input is not finite: {e!r}")
        self.integral += self._ci[0] * e + self._ci[1] * self._e_prev
        self.derivative = self._cd * (e - self._e_prev) - self._pd * self.derivative
        self._e_prev = e
        return self.gains.P * e + self.integral + self.derivative


def pid_step(c: PidController, e: float) -> float:
    return c.step(e)


@dataclass(frozen=True)
class Saturation:
    lower: float = -1.0
    upper: float = 1.0

    def __post_init__(self):
        if not self.lower <= self.upper:
            raise ValueError("saturation requires lower <= upper")

    def __call__(self, u: float) -> float:
        return min(max(u, self.lower), self.upper)

    def clips(self, u: float) -> bool:
        return u < self.lower or u > self.upper


def saturate(s: Saturation, u: float) -> float:
    return s(u)
