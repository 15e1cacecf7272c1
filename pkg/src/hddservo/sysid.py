"""
Recursive least-squares identification of an ARX disturbance model

    d(k) = -a1 d(k-1) - ... - an d(k-n) + b1 u(k-1) + ... + bm u(k-m)

with parameter vector theta = [a1..an, b1..bm] and regressor
phi(k) = [-d(k-1)..-d(k-n), u(k-1)..u(k-m)].

Each update:

    e      = d(k) - phi^T theta(k-1)
    g      = P phi / (1 + phi^T P phi)
    theta += g e
    P      = (P - P phi phi^T P / (1 + phi^T P phi)) / lambda

lambda is either held fixed or chosen to keep trace(P) at its initial value.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InsufficientData, NonFiniteError
from .lti import DiscreteLinearFilter

LAMBDA_MIN = 1e-3

# Prediction conventions: "current" pairs phi(k) with theta(k-1); "lagged"
# pairs the one-sample-older regressor phi(k-1) with it instead.
CURRENT = "current"
LAGGED = "lagged"


@dataclass(frozen=True)
class FixedLambda:
    value: float = 1.0

    def __post_init__(self):
        if not 0.0 < self.value <= 1.0:
            raise ValueError("forgetting factor must be in (0, 1]")

    def __str__(self):
        return f"fixed:{self.value!r}"


@dataclass(frozen=True)
class FixedTrace:
    def __str__(self):
        return "fixed_trace"


def parse_lambda_policy(text: str):
    text = text.strip()
    if text in ("fixed_trace", "fixed-trace"):
        return FixedTrace()
    if text.startswith("fixed:"):
        return FixedLambda(float(text[len("fixed:"):]))
    if text == "fixed":
        return FixedLambda(1.0)
    raise ValueError(f"unknown lambda policy {text!r}")


def fixed_trace_lambda(P: np.ndarray, phi: np.ndarray, trP0: float, lambda_min: float = LAMBDA_MIN) -> float:
    """Forgetting factor that keeps trace(P) constant at ``trP0``.

    lambda = 1 - |P phi|^2 / (1 + phi^T P phi) / trP0, clamped to [lambda_min, 1].
    """
    if not trP0 > 0:
        raise ValueError("trP0 must be positive")
    Pphi = P @ phi
    lam = 1.0 - float(Pphi @ Pphi) / (1.0 + float(phi @ Pphi)) / trP0
    return min(max(lam, lambda_min), 1.0)


@dataclass
class IdentifiedModel:
    a: list
    b: list
    Ts: float
    fitness: float | None = None

    def to_filter(self) -> DiscreteLinearFilter:
        return DiscreteLinearFilter(a=self.a, b=self.b, b0=0.0, Ts=self.Ts)

    @property
    def theta(self) -> np.ndarray:
        return np.array(list(self.a) + list(self.b), dtype=float)


class RlsEstimator:
    def __init__(
        self,
        n: int = 2,
        m: int = 2,
        P_init: float | np.ndarray = 1e4,
        theta_init: Sequence[float] | None = None,
        lambda_policy=FixedLambda(1.0),
        convention: str = CURRENT,
        Ts: float = 2e-4,
    ):
        if n < 0 or m < 0 or n + m < 1:
            raise ValueError("need n, m >= 0 and n + m >= 1")
        if convention not in (CURRENT, LAGGED):
            raise ValueError(f"unknown prediction convention {convention!r}")
        self.n, self.m = n, m
        self.Ts = Ts
        self.lambda_policy = lambda_policy
        self.convention = convention
        p = n + m
        if np.isscalar(P_init):
            P0 = float(P_init) * np.eye(p)
        else:
            P0 = np.array(P_init, dtype=float)
            if P0.shape != (p, p):
                raise ValueError(f"P_init must be {p}x{p}")
        if theta_init is None:
            theta_init = np.zeros(p)
        theta0 = np.array(theta_init, dtype=float)
        if theta0.shape != (p,):
            raise ValueError(f"theta_init must have length {p}")
        self._P0 = P0
        self._theta0 = theta0
        self.trP0 = float(np.trace(P0))
        self.reset()

    def reset(self):
        self.theta = self._theta0.copy()
        self.P = self._P0.copy()
        # one extra slot so the lagged regressor can be formed
        self.d_history = deque([0.0] * (self.n + 1), maxlen=self.n + 1)
        self.u_history = deque([0.0] * (self.m + 1), maxlen=self.m + 1)
        self.k = 0
        self.last_lambda = 1.0
        self.last_error = 0.0
        self.last_prediction = 0.0

    def build_regressor(self, lag: int = 0) -> np.ndarray:
        d = list(self.d_history)[lag:lag + self.n]
        u = list(self.u_history)[lag:lag + self.m]
        return np.array([-v for v in d] + u, dtype=float)

    def regressor(self) -> np.ndarray:
        return self.build_regressor(1 if self.convention == LAGGED else 0)

    def predict(self) -> float:
        return float(self.regressor() @ self.theta)

    def update(self, d: float, u: float):
        """Consume one (output, input) pair; returns (prediction error, theta)."""
        phi = self.regressor()
        d_hat = float(phi @ self.theta)
        e = d - d_hat

        Pphi = self.P @ phi
        denom = 1.0 + float(phi @ Pphi)
        if isinstance(self.lambda_policy, FixedTrace):
            # trace(P) equals trP0 in exact arithmetic; dividing by trP0 itself
            # would amplify any rounding drift by 1/lambda every step
            lam = fixed_trace_lambda(self.P, phi, float(np.trace(self.P)))
        else:
            lam = self.lambda_policy.value

        with np.errstate(invalid="ignore", over="ignore"):  # reported below
            theta = self.theta + Pphi * (e / denom)
            P = (self.P - np.outer(Pphi, Pphi) / denom) / lam
            P = 0.5 * (P + P.T)
        if not (np.all(np.isfinite(theta)) and np.all(np.isfinite(P))):
            raise NonFiniteError("RLS update produced non-finite values; reinitialize P")

        self.theta = theta
        self.P = P
        self.last_lambda = lam
        self.last_error = e
        self.last_prediction = d_hat
        self.d_history.appendleft(float(d))
        self.u_history.appendleft(float(u))
        self.k += 1
        return e, theta.copy()

    def to_model(self) -> IdentifiedModel:
        if self.k < self.n + self.m:
            raise InsufficientData(f"{self.k} samples seen, need at least {self.n + self.m}")
        return IdentifiedModel(
            a=self.theta[: self.n].tolist(),
            b=self.theta[self.n:].tolist(),
            Ts=self.Ts,
        )


def build_regressor(est: RlsEstimator) -> np.ndarray:
    return est.regressor()


def predict(est: RlsEstimator) -> float:
    return est.predict()


def update(est: RlsEstimator, d: float, u: float):
    return est.update(d, u)


def to_model(est: RlsEstimator) -> IdentifiedModel:
    return est.to_model()


def generic_gain_form(theta_prev: np.ndarray, P_new: np.ndarray, phi: np.ndarray, e: float) -> np.ndarray:
    """theta(k) = theta(k-1) + P(k) phi(k) e(k); equals the RLS step when lambda = 1."""
    return theta_prev + P_new @ phi * e


def batch_least_squares(Phi: np.ndarray, d: np.ndarray, P0: np.ndarray | None = None,
                        theta0: np.ndarray | None = None) -> np.ndarray:
    """Regularized batch solution: argmin |d - Phi theta|^2 + (theta - theta0)^T P0^-1 (theta - theta0)."""
    Phi = np.atleast_2d(np.asarray(Phi, dtype=float))
    d = np.asarray(d, dtype=float)
    p = Phi.shape[1]
    R = Phi.T @ Phi
    r = Phi.T @ d
    if P0 is not None:
        P0inv = np.linalg.inv(P0)
        if theta0 is None:
            theta0 = np.zeros(p)
        R = R + P0inv
        r = r + P0inv @ theta0
    return np.linalg.solve(R, r)
