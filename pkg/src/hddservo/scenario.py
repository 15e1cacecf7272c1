"""Execute a ScenarioConfig: identification phase, tracking run(s), summary."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from . import metrics
from .config import ScenarioConfig
from .control import PidGains, Saturation
from .errors import MetricError
from .lti import DiscreteLinearFilter
from .servo import (
    DisturbanceSource,
    DualStageLoop,
    identification_fitness,
    run_identification,
    run_tracking,
)
from .sysid import RlsEstimator, parse_lambda_policy

CONVERGENCE_TOL = 0.01


@dataclass
class RunSummary:
    name: str
    fitness: float | None = None
    fitness_vaf: float | None = None
    fitness_prediction: float | None = None
    identified_a: list | None = None
    identified_b: list | None = None
    convergence_iterations: int | None = None
    overshoot: float | str | None = None
    settling_time: float | str | None = None
    rise_time: float | str | None = None
    steady_state_peak_ff_on: float | None = None
    steady_state_peak_ff_off: float | None = None
    steady_state_rms_ff_on: float | None = None
    steady_state_rms_ff_off: float | None = None
    saturation_clipped: bool = False
    wall_clock_s: float = 0.0

    def as_dict(self):
        return asdict(self)


@dataclass
class ScenarioResult:
    config: ScenarioConfig
    summary: RunSummary
    traces: dict = field(default_factory=dict)
    model: object = None


def convergence_iterations(theta: np.ndarray, tol: float = CONVERGENCE_TOL) -> int | None:
    """First sample index after which theta stays within tol*|theta_final| of theta_final."""
    if len(theta) == 0:
        return None
    final = theta[-1]
    scale = np.linalg.norm(final)
    if scale == 0:
        scale = 1.0
    err = np.linalg.norm(theta - final, axis=1)
    outside = np.flatnonzero(err > tol * scale)
    return 0 if len(outside) == 0 else int(outside[-1] + 1)


def build_loop(cfg: ScenarioConfig, with_estimator: bool = True) -> DualStageLoop:
    est = None
    if with_estimator:
        e = cfg.estimator
        est = RlsEstimator(
            n=e.n, m=e.m, P_init=e.P_init_scale, theta_init=e.theta_init,
            lambda_policy=parse_lambda_policy(e.lambda_policy), convention=e.convention,
            Ts=cfg.sample_interval,
        )
    return DualStageLoop(
        Ts=cfg.sample_interval,
        oversample=cfg.oversample,
        vcm_gains=PidGains(cfg.pid_v.P, cfg.pid_v.I, cfg.pid_v.D, cfg.pid_v.N),
        ma_gains=PidGains(cfg.pid_m.P, cfg.pid_m.I, cfg.pid_m.D, cfg.pid_m.N),
        saturation=Saturation(cfg.saturation.lower, cfg.saturation.upper),
        disturbance_filter=DiscreteLinearFilter(cfg.true_G.a, cfg.true_G.b, Ts=cfg.sample_interval),
        estimator=est,
        stages=cfg.stages,
        pid_method=cfg.pid_v.method,
        ma_pid_method=cfg.pid_m.method,
    )


def disturbance_source(cfg: ScenarioConfig) -> DisturbanceSource:
    d = cfg.disturbance
    return DisturbanceSource(d.kind, d.amplitude, d.frequency, cfg.seed)


def _metric(fn, *args):
    try:
        return float(fn(*args))
    except MetricError as exc:
        return f"{type(exc).__name__}: {exc}"


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    t0 = time.perf_counter()
    loop = build_loop(cfg)
    source = disturbance_source(cfg)
    summary = RunSummary(name=cfg.name)
    traces = {}
    model = None

    if cfg.feedforward == "identified":
        model, id_trace = run_identification(
            loop, source, cfg.identification_duration, cfg.identification_signal,
            noise_std=cfg.noise_std, noise_seed=cfg.seed + 1,
        )
        traces["identification"] = id_trace
        summary.identified_a = list(model.a)
        summary.identified_b = list(model.b)
        if len(id_trace) >= 2:
            target = id_trace["d"] if cfg.identification_signal == "direct" else -id_trace["y"]
            summary.fitness = _metric(identification_fitness, model, id_trace, cfg.identification_signal)
            summary.fitness_vaf = _metric(metrics.fitness_vaf, target, model.to_filter().simulate(id_trace["u_acc"]))
            summary.fitness_prediction = _metric(metrics.fitness, target, id_trace["d_hat"])
            if isinstance(summary.fitness, float):
                model.fitness = summary.fitness
        summary.convergence_iterations = convergence_iterations(id_trace.theta)
        loop.install_feedforward(model)
    elif cfg.feedforward == "oracle":
        loop.install_feedforward(loop.disturbance_filter)

    r = cfg.reference_amplitude
    main = run_tracking(loop, r, source, cfg.duration, feedforward=cfg.feedforward != "off")
    traces["tracking"] = main
    summary.saturation_clipped = loop.clipped

    if cfg.reference.startswith("step") and len(main):
        y, t = main["y"], main["t"]
        summary.overshoot = _metric(metrics.overshoot, y, r)
        summary.settling_time = _metric(metrics.settling_time, y, t, r)
        summary.rise_time = _metric(metrics.rise_time, y, t, r)

    window = cfg.steady_state_window
    can_window = len(main) and main["t"][-1] - main["t"][0] >= window
    if can_window:
        y, t = main["y"], main["t"]
        key = "ff_on" if cfg.feedforward != "off" else "ff_off"
        setattr(summary, f"steady_state_peak_{key}", metrics.steady_state_peak(y, t, window))
        setattr(summary, f"steady_state_rms_{key}", metrics.steady_state_rms(y, t, window))

    if cfg.feedforward != "off" and source.kind != "none":
        base = run_tracking(loop, r, source, cfg.duration, feedforward=False)
        traces["tracking_ff_off"] = base
        if can_window:
            summary.steady_state_peak_ff_off = metrics.steady_state_peak(base["y"], base["t"], window)
            summary.steady_state_rms_ff_off = metrics.steady_state_rms(base["y"], base["t"], window)

    summary.wall_clock_s = time.perf_counter() - t0
    return ScenarioResult(cfg, summary, traces, model)
