"""
Dual-stage head-positioning loop with disturbance identification and
feedforward cancellation.

Topology (parallel dual stage):

    e     = r - y
    u_v   = C_v(e)                         -> VCM plant   -> y_vcm
    u_m   = sat(C_m(e)) + d - ff           -> MA plant    -> y_ma
    y     = y_vcm + y_ma
    d     = G(u_acc)       true disturbance path
    ff    = G_hat(u_acc)   feedforward (optional)

Controllers and disturbance filters run at Ts; the plants run zero-order-hold
at Ts / oversample with the actuator commands held across the substeps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .control import MICRO_ACTUATOR_GAINS, VCM_GAINS, PidController, PidGains, Saturation
from .errors import NonFiniteError
from .lti import (
    MICRO_ACTUATOR_PLANT,
    VCM_PLANT,
    DiscreteLinearFilter,
    RationalTransferFunction,
    discretize,
)
from .sysid import IdentifiedModel, RlsEstimator

# Disturbance model used in the simulations: (z^-1 + z^-2) / (1 + z^-1 + 0.5 z^-2)
TRUE_G_A = (1.0, 0.5)
TRUE_G_B = (1.0, 1.0)

DIRECT = "direct"
CLOSED_LOOP = "closed-loop"

STAGES = ("dual", "vcm", "ma")

TRACE_COLUMNS = ("k", "t", "r", "y", "y_vcm", "y_ma", "e", "u_acc", "d", "d_hat", "ff", "lambda", "trace_P")


def true_disturbance_filter(Ts: float = 2e-4) -> DiscreteLinearFilter:
    return DiscreteLinearFilter(a=TRUE_G_A, b=TRUE_G_B, Ts=Ts)


@dataclass(frozen=True)
class DisturbanceSource:
    kind: str = "sine"
    amplitude: float = 1e4
    frequency: float = 100.0
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("sine", "uniform_random", "none"):
            raise ValueError(f"unknown disturbance kind {self.kind!r}")
        if not self.amplitude >= 0:
            raise ValueError("disturbance amplitude must be non-negative")
        if self.kind == "sine" and not self.frequency > 0:
            raise ValueError("sine disturbance needs a positive frequency")


def make_disturbance(source: DisturbanceSource, Ts: float, n: int) -> np.ndarray:
    if n < 0:
        raise ValueError("n must be non-negative")
    if source.kind == "none" or source.amplitude == 0:
        return np.zeros(n)
    if source.kind == "sine":
        k = np.arange(n)
        return source.amplitude * np.sin(2.0 * np.pi * source.frequency * k * Ts)
    rng = np.random.default_rng(source.seed)
    return source.amplitude * rng.uniform(-1.0, 1.0, n)


@dataclass
class SimulationTrace:
    """Column-oriented per-sample record of a run."""

    columns: dict = field(default_factory=dict)
    theta: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @classmethod
    def from_records(cls, records, n_params: int):
        cols = {name: np.array([rec[name] for rec in records], dtype=float) for name in TRACE_COLUMNS}
        cols["k"] = cols["k"].astype(int)
        if records:
            theta = np.array([rec["theta"] for rec in records], dtype=float).reshape(len(records), n_params)
        else:
            theta = np.zeros((0, n_params))
        return cls(cols, theta)

    def __len__(self):
        return len(self.columns.get("k", ()))

    def __getitem__(self, name) -> np.ndarray:
        return self.columns[name]

    @property
    def n_params(self) -> int:
        return self.theta.shape[1]

    def equals(self, other: "SimulationTrace") -> bool:
        if len(self) != len(other) or self.theta.shape != other.theta.shape:
            return False
        same = all(np.array_equal(self[c], other[c], equal_nan=True) for c in TRACE_COLUMNS)
        return same and np.array_equal(self.theta, other.theta, equal_nan=True)


class DualStageLoop:
    def __init__(
        self,
        Ts: float = 2e-4,
        oversample: int = 10,
        vcm_gains: PidGains = VCM_GAINS,
        ma_gains: PidGains = MICRO_ACTUATOR_GAINS,
        saturation: Saturation = Saturation(-1.0, 1.0),
        disturbance_filter: DiscreteLinearFilter | None = None,
        estimator: RlsEstimator | None = None,
        stages: str = "dual",
        pid_method: str = "bilinear",
        ma_pid_method: str | None = "backward-euler",
        vcm_plant: RationalTransferFunction = VCM_PLANT,
        ma_plant: RationalTransferFunction = MICRO_ACTUATOR_PLANT,
        plant_method: str = "zoh",
    ):
        if int(oversample) != oversample or oversample < 1:
            raise ValueError("oversample must be an integer >= 1")
        if stages not in STAGES:
            raise ValueError(f"stages must be one of {STAGES}")
        self.Ts = float(Ts)
        self.oversample = int(oversample)
        self.stages = stages
        h = self.Ts / self.oversample
        self.vcm = discretize(vcm_plant, h, plant_method)
        self.ma = discretize(ma_plant, h, plant_method)
        for plant in (self.vcm, self.ma):
            if plant.b0 != 0.0:
                raise ValueError("plants with direct feedthrough would close an algebraic loop")
        self.pid_v = PidController(vcm_gains, self.Ts, pid_method)
        self.pid_m = PidController(ma_gains, self.Ts, ma_pid_method or pid_method)
        self.sat = saturation
        if disturbance_filter is None:
            disturbance_filter = true_disturbance_filter(self.Ts)
        self.disturbance_filter = disturbance_filter
        self.estimator = estimator
        self.feedforward: DiscreteLinearFilter | None = None
        self.feedforward_enabled = False
        self.mode = "track"
        self.clipped = False
        self.reset()

    def reset(self):
        for f in (self.vcm, self.ma, self.disturbance_filter):
            f.reset()
        if self.feedforward is not None:
            self.feedforward.reset()
        self.pid_v.reset()
        self.pid_m.reset()
        if self.estimator is not None:
            self.estimator.reset()
        self.k = 0
        self.clipped = False

    def install_feedforward(self, model: IdentifiedModel | DiscreteLinearFilter | None, enabled: bool = True):
        if model is None:
            self.feedforward = None
            self.feedforward_enabled = False
            return
        f = model.to_filter() if isinstance(model, IdentifiedModel) else model.copy()
        f.reset()
        self.feedforward = f
        self.feedforward_enabled = enabled

    @property
    def y(self) -> float:
        return self.y_vcm + self.y_ma

    @property
    def y_vcm(self) -> float:
        return self.vcm.peek() if self.stages != "ma" else 0.0

    @property
    def y_ma(self) -> float:
        return self.ma.peek() if self.stages != "vcm" else 0.0

    def step(self, r: float, u_acc: float) -> dict:
        """Advance one control period; returns the record for sample k."""
        y_vcm, y_ma = self.y_vcm, self.y_ma
        y = y_vcm + y_ma
        e = r - y

        d = self.disturbance_filter.step(u_acc)
        ff = 0.0
        if self.feedforward_enabled and self.feedforward is not None:
            ff = self.feedforward.step(u_acc)

        if self.stages != "ma":
            u_v = self.pid_v.step(e)
            for _ in range(self.oversample):
                self.vcm.step(u_v)
        if self.stages != "vcm":
            cmd = self.pid_m.step(e)
            if self.sat.clips(cmd):
                self.clipped = True
            u_m = self.sat(cmd) + d - ff
            for _ in range(self.oversample):
                self.ma.step(u_m)

        if not math.isfinite(y):
            raise NonFiniteError(f"head position became non-finite at sample {self.k}")
        rec = {
            "k": self.k,
            "t": self.k * self.Ts,
            "r": r,
            "y": y,
            "y_vcm": y_vcm,
            "y_ma": y_ma,
            "e": e,
            "u_acc": u_acc,
            "d": d,
            "ff": ff,
            "d_hat": math.nan,
            "lambda": math.nan,
            "trace_P": math.nan,
        }
        self.k += 1
        return rec

    def _n_params(self):
        if self.estimator is not None:
            return self.estimator.n + self.estimator.m
        return 0


def _samples(duration: float, Ts: float) -> int:
    return int(round(duration / Ts))


def _reference(r_profile, n: int) -> np.ndarray:
    if callable(r_profile):
        return np.array([float(r_profile(k)) for k in range(n)])
    r = np.asarray(r_profile, dtype=float)
    if r.ndim == 0:
        return np.full(n, float(r))
    if len(r) < n:
        raise ValueError("reference profile shorter than the run")
    return r[:n]


def run_identification(loop: DualStageLoop, source: DisturbanceSource, duration: float,
                       signal: str = DIRECT, noise_std: float = 0.0, noise_seed: int = 0):
    """Identify the disturbance path with r = 0 and feedforward disabled.

    ``signal`` selects what the estimator sees as the disturbance output:
    ``"direct"`` uses the true disturbance-filter output d(k), ``"closed-loop"``
    uses the position error -y(k) (r = 0).
    """
    if loop.estimator is None:
        raise ValueError("loop has no estimator")
    if signal not in (DIRECT, CLOSED_LOOP):
        raise ValueError(f"unknown identification signal {signal!r}")
    loop.mode = "identify"
    saved_ff = loop.feedforward_enabled
    loop.feedforward_enabled = False
    loop.reset()
    est = loop.estimator
    n = _samples(duration, loop.Ts)
    u_acc = make_disturbance(source, loop.Ts, n)
    noise = np.zeros(n)
    if noise_std > 0:
        noise = noise_std * np.random.default_rng(noise_seed).standard_normal(n)

    records = []
    for k in range(n):
        rec = loop.step(0.0, float(u_acc[k]))
        d_meas = rec["d"] if signal == DIRECT else -rec["y"]
        est.update(d_meas + noise[k], float(u_acc[k]))
        rec["d_hat"] = est.last_prediction
        rec["lambda"] = est.last_lambda
        rec["trace_P"] = float(np.trace(est.P))
        rec["theta"] = est.theta.copy()
        records.append(rec)
    loop.feedforward_enabled = saved_ff
    loop.mode = "track"

    trace = SimulationTrace.from_records(records, est.n + est.m)
    model = est.to_model() if est.k >= est.n + est.m else IdentifiedModel(
        a=est.theta[: est.n].tolist(), b=est.theta[est.n:].tolist(), Ts=est.Ts)
    return model, trace


def identification_fitness(model: IdentifiedModel, trace: SimulationTrace, signal: str = DIRECT) -> float:
    """Fit of the identified model simulated from zero state on the recorded input."""
    from .metrics import fitness

    target = trace["d"] if signal == DIRECT else -trace["y"]
    return fitness(target, model.to_filter().simulate(trace["u_acc"]))


def run_tracking(loop: DualStageLoop, r_profile, source: DisturbanceSource, duration: float,
                 feedforward: bool = False) -> SimulationTrace:
    if feedforward and loop.feedforward is None:
        raise ValueError("feedforward requested but no model installed")
    loop.mode = "track"
    loop.feedforward_enabled = bool(feedforward)
    loop.reset()
    n = _samples(duration, loop.Ts)
    u_acc = make_disturbance(source, loop.Ts, n)
    r = _reference(r_profile, n)

    p = loop._n_params()
    if feedforward and loop.feedforward is not None:
        frozen = np.array(list(loop.feedforward.a) + list(loop.feedforward.b))
        if len(frozen) != p:
            frozen = np.full(p, math.nan)
    else:
        frozen = np.full(p, math.nan)

    records = []
    for k in range(n):
        rec = loop.step(float(r[k]), float(u_acc[k]))
        if feedforward:
            rec["d_hat"] = rec["ff"]
        rec["theta"] = frozen
        records.append(rec)
    return SimulationTrace.from_records(records, p)
