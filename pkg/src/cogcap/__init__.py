"""Effective capacity of a cognitive radio link with imperfect sensing and
pilot-based channel estimation."""

from .params import EstimatorKind, PowerPolicy, RatePolicy, SystemParams
from .sensing import SensingOperatingPoint, detection_prob, false_alarm_prob, operating_point_from_pd
from .effcap import effective_capacity, mean_service_rate
from .optimizer import OptimizationProblem, Optimum, optimize

__version__ = "0.1.0"

__all__ = [
    "EstimatorKind",
    "PowerPolicy",
    "RatePolicy",
    "SystemParams",
    "SensingOperatingPoint",
    "detection_prob",
    "false_alarm_prob",
    "operating_point_from_pd",
    "effective_capacity",
    "mean_service_rate",
    "OptimizationProblem",
    "Optimum",
    "optimize",
    "__version__",
]
