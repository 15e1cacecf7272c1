"""Dual-stage hard-disk-drive servo simulation with RLS disturbance identification
and adaptive feedforward rejection."""

from .control import MICRO_ACTUATOR_GAINS, VCM_GAINS, PidController, PidGains, Saturation
from .lti import (
    MICRO_ACTUATOR_PLANT,
    VCM_PLANT,
    DiscreteLinearFilter,
    RationalTransferFunction,
    discretize,
)
from .servo import DisturbanceSource, DualStageLoop, SimulationTrace, run_identification, run_tracking
from .sysid import FixedLambda, FixedTrace, IdentifiedModel, RlsEstimator

__all__ = [
    "DiscreteLinearFilter", "RationalTransferFunction", "discretize", "VCM_PLANT", "MICRO_ACTUATOR_PLANT",
    "PidController", "PidGains", "Saturation", "VCM_GAINS", "MICRO_ACTUATOR_GAINS",
    "RlsEstimator", "IdentifiedModel", "FixedLambda", "FixedTrace",
    "DualStageLoop", "DisturbanceSource", "SimulationTrace", "run_identification", "run_tracking",
]

__version__ = "0.1.0"
