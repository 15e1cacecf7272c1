"""
Scenario configuration.

Text format is one ``key = value`` per line with dotted section prefixes::

    # 100 Hz vibration, identify then cancel
    duration = 0.2
    reference = zero
    disturbance.kind = sine
    disturbance.frequency = 100
    feedforward = identified
    estimator.lambda_policy = fixed:1.0

Lists are comma separated.  ``#`` starts a comment.  A JSON object (nested or
with dotted keys) is accepted as well.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .control import MICRO_ACTUATOR_GAINS, VCM_GAINS
from .errors import ConfigError
from .servo import CLOSED_LOOP, DIRECT, STAGES, TRUE_G_A, TRUE_G_B
from .sysid import CURRENT, LAGGED, parse_lambda_policy

REQUIRED = ("duration", "reference", "disturbance.kind")


@dataclass
class DisturbanceConfig:
    kind: str = "sine"
    amplitude: float = 1e4
    frequency: float = 100.0


@dataclass
class TrueGConfig:
    a: list = field(default_factory=lambda: list(TRUE_G_A))
    b: list = field(default_factory=lambda: list(TRUE_G_B))


@dataclass
class EstimatorConfig:
    n: int = 2
    m: int = 2
    P_init_scale: float = 1e4
    theta_init: list = field(default_factory=lambda: [0.0, 0.0, 0.0, 0.0])
    lambda_policy: str = "fixed:1.0"
    convention: str = CURRENT


@dataclass
class PidConfig:
    P: float = 0.0
    I: float = 0.0
    D: float = 0.0
    N: float = 100.0
    method: str = "bilinear"


def _vcm_pid():
    g = VCM_GAINS
    return PidConfig(g.P, g.I, g.D, g.N, "bilinear")


def _ma_pid():
    g = MICRO_ACTUATOR_GAINS
    return PidConfig(g.P, g.I, g.D, g.N, "backward-euler")


@dataclass
class SaturationConfig:
    lower: float = -1.0
    upper: float = 1.0


@dataclass
class ScenarioConfig:
    name: str = "custom"
    sample_interval: float = 2e-4
    oversample: int = 10
    duration: float = 0.2
    identification_duration: float = 0.2
    reference: str = "zero"
    stages: str = "dual"
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    true_G: TrueGConfig = field(default_factory=TrueGConfig)
    estimator: EstimatorConfig = field(default_factory=EstimatorConfig)
    identification_signal: str = DIRECT
    noise_std: float = 0.0
    feedforward: str = "off"
    pid_v: PidConfig = field(default_factory=_vcm_pid)
    pid_m: PidConfig = field(default_factory=_ma_pid)
    saturation: SaturationConfig = field(default_factory=SaturationConfig)
    steady_state_window: float = 0.04
    output_dir: str = "out"
    seed: int = 0

    @property
    def reference_amplitude(self) -> float:
        kind, _, amp = self.reference.partition(":")
        return 0.0 if kind == "zero" else float(amp)

    def validate(self):
        errs = []
        if not self.sample_interval > 0:
            errs.append(("sample_interval", "must be positive"))
        if self.oversample < 1:
            errs.append(("oversample", "must be >= 1"))
        if self.duration < 0:
            errs.append(("duration", "must be non-negative"))
        if self.identification_duration < 0:
            errs.append(("identification_duration", "must be non-negative"))
        kind, sep, amp = self.reference.partition(":")
        if kind not in ("zero", "step") or (kind == "step" and not sep):
            errs.append(("reference", "expected 'zero' or 'step:<amplitude>'"))
        elif kind == "step":
            try:
                float(amp)
            except ValueError:
                errs.append(("reference", f"bad step amplitude {amp!r}"))
        if self.stages not in STAGES:
            errs.append(("stages", f"expected one of {', '.join(STAGES)}"))
        if self.disturbance.kind not in ("sine", "uniform_random", "none"):
            errs.append(("disturbance.kind", "expected sine, uniform_random or none"))
        if self.disturbance.amplitude < 0:
            errs.append(("disturbance.amplitude", "must be non-negative"))
        if self.disturbance.kind == "sine" and not self.disturbance.frequency > 0:
            errs.append(("disturbance.frequency", "must be positive"))
        est = self.estimator
        if est.n < 0 or est.m < 0 or est.n + est.m < 1:
            errs.append(("estimator.n", "need n, m >= 0 and n + m >= 1"))
        elif len(est.theta_init) != est.n + est.m:
            errs.append(("estimator.theta_init", f"needs {est.n + est.m} entries"))
        if not est.P_init_scale > 0:
            errs.append(("estimator.P_init_scale", "must be positive"))
        try:
            parse_lambda_policy(est.lambda_policy)
        except ValueError as exc:
            errs.append(("estimator.lambda_policy", str(exc)))
        if est.convention not in (CURRENT, LAGGED):
            errs.append(("estimator.convention", f"expected {CURRENT} or {LAGGED}"))
        if self.identification_signal not in (DIRECT, CLOSED_LOOP):
            errs.append(("identification_signal", f"expected {DIRECT} or {CLOSED_LOOP}"))
        if self.feedforward not in ("off", "identified", "oracle"):
            errs.append(("feedforward", "expected off, identified or oracle"))
        if self.noise_std < 0:
            errs.append(("noise_std", "must be non-negative"))
        for sect in ("pid_v", "pid_m"):
            pid = getattr(self, sect)
            if not pid.N > 0:
                errs.append((f"{sect}.N", "must be positive"))
            if pid.method not in ("bilinear", "backward-euler", "forward-euler"):
                errs.append((f"{sect}.method", "expected bilinear, backward-euler or forward-euler"))
        if self.saturation.lower > self.saturation.upper:
            errs.append(("saturation.lower", "must not exceed saturation.upper"))
        if not self.steady_state_window > 0:
            errs.append(("steady_state_window", "must be positive"))
        return errs


# -- flat key/value mapping -------------------------------------------------

def _leaf_fields(cls, prefix=""):
    out = {}
    for f in dataclasses.fields(cls):
        key = prefix + f.name
        default = f.default_factory() if f.default_factory is not dataclasses.MISSING else f.default
        if dataclasses.is_dataclass(default):
            out.update(_leaf_fields(type(default), key + "."))
        else:
            out[key] = type(default)
    return out


FIELDS = _leaf_fields(ScenarioConfig)


def _parse_value(typ, text: str):
    text = text.strip()
    if typ is list:
        return [float(v) for v in text.split(",") if v.strip()] if text else []
    if typ is int:
        return int(text)
    if typ is float:
        return float(text)
    return text


def _format_value(value) -> str:
    if isinstance(value, list):
        return ", ".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _get(cfg, key):
    obj = cfg
    for part in key.split("."):
        obj = getattr(obj, part)
    return obj


def _set(cfg, key, value):
    *head, last = key.split(".")
    obj = cfg
    for part in head:
        obj = getattr(obj, part)
    setattr(obj, last, value)


def to_flat(cfg: ScenarioConfig) -> dict:
    return {key: _get(cfg, key) for key in FIELDS}


def dumps(cfg: ScenarioConfig) -> str:
    return "".join(f"{key} = {_format_value(val)}\n" for key, val in to_flat(cfg).items())


def from_pairs(pairs, require=REQUIRED, base: ScenarioConfig | None = None) -> ScenarioConfig:
    """Build a config from (key, value, line) triples; ``value`` may be text or typed."""
    cfg = base if base is not None else ScenarioConfig()
    seen = {}
    for key, value, line in pairs:
        if key not in FIELDS:
            raise ConfigError(f"unknown field {key!r}", line=line, key=key)
        typ = FIELDS[key]
        try:
            if isinstance(value, str):
                value = _parse_value(typ, value)
            elif typ is list:
                value = [float(v) for v in value]
            elif typ is float:
                value = float(value)
            elif typ is int:
                if isinstance(value, float) and not value.is_integer():
                    raise ValueError(value)
                value = int(value)
            else:
                value = str(value)
        except (TypeError, ValueError):
            raise ConfigError(f"invalid value for {key!r}: {value!r}", line=line, key=key) from None
        _set(cfg, key, value)
        seen[key] = line
    est = cfg.estimator
    if "estimator.theta_init" not in seen and est.n >= 0 and est.m >= 0:
        if len(est.theta_init) != est.n + est.m:
            est.theta_init = [0.0] * (est.n + est.m)
    for key in require:
        if key not in seen:
            raise ConfigError(f"missing required field {key!r}", key=key)
    for key, msg in cfg.validate():
        raise ConfigError(f"{key}: {msg}", line=seen.get(key), key=key)
    return cfg


def loads(text: str, require=REQUIRED) -> ScenarioConfig:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        pairs.append((key.strip(), value.strip(), lineno))
    return from_pairs(pairs, require)


def _flatten_json(obj, prefix=""):
    for key, val in obj.items():
        if isinstance(val, dict):
            yield from _flatten_json(val, prefix + key + ".")
        else:
            yield prefix + key, val


def loads_json(text: str, require=REQUIRED) -> ScenarioConfig:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(obj, dict):
        raise ConfigError("JSON config must be an object")
    return from_pairs([(k, v, None) for k, v in _flatten_json(obj)], require)


def dumps_json(cfg: ScenarioConfig) -> str:
    return json.dumps(dataclasses.asdict(cfg), indent=2)


def load(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    if path.suffix == ".json":
        return loads_json(text)
    return loads(text)


# -- presets ----------------------------------------------------------------

PRESETS = {
    "fig2": {
        "reference": "step:1.0", "disturbance.kind": "none", "duration": 0.02,
    },
    "fig4": {
        "reference": "zero", "disturbance.kind": "sine", "disturbance.frequency": 100.0,
        "feedforward": "off",
    },
    "fig5": {
        "reference": "zero", "disturbance.kind": "sine", "disturbance.frequency": 100.0,
        "feedforward": "identified",
    },
    "fig6": {
        "reference": "zero", "disturbance.kind": "sine", "disturbance.frequency": 200.0,
        "feedforward": "off",
    },
    "fig7": {
        "reference": "zero", "disturbance.kind": "sine", "disturbance.frequency": 200.0,
        "feedforward": "identified",
    },
    "fig5-pes": {
        "reference": "zero", "disturbance.kind": "sine", "disturbance.frequency": 100.0,
        "feedforward": "identified", "identification_signal": CLOSED_LOOP,
    },
    "fig7-pes": {
        "reference": "zero", "disturbance.kind": "sine", "disturbance.frequency": 200.0,
        "feedforward": "identified", "identification_signal": CLOSED_LOOP,
    },
    "table1-vcm": {
        "stages": "vcm", "reference": "step:1.0", "disturbance.kind": "none", "duration": 0.03,
    },
    # isolated linear loop: with the +/-1 command limit and a plant DC gain of
    # 0.366 the head could never reach the 1 um step; the slow integral mode
    # needs a few seconds of record to settle
    "table1-ma": {
        "stages": "ma", "reference": "step:1.0", "disturbance.kind": "none", "duration": 4.0,
        "saturation.lower": -1e12, "saturation.upper": 1e12,
    },
}


def preset(name: str) -> ScenarioConfig:
    try:
        overrides = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}") from None
    pairs = [(k, v, None) for k, v in overrides.items()]
    pairs.append(("name", name, None))
    return from_pairs(pairs, require=())


def resolve(target: str) -> ScenarioConfig:
    """Preset name or path to a config file."""
    if target in PRESETS:
        return preset(target)
    path = Path(target)
    if not path.exists():
        raise ConfigError(f"{target!r} is neither a preset nor an existing config file")
    cfg = load(path)
    if cfg.name == "custom":
        cfg.name = path.stem
    return cfg
