"""Energy-efficiency model for collaborative compressive spectrum sensing."""

from .numstats import Probability, SeededStream, q, q_inv, wilson_interval
from .sensing import Constraints, DetectionPoint, RadioParams, SignalModel
from .economics import EconomicParams, EfficiencyReport, PowerParams, TimingParams
from .optimizer import NetworkConfig, OptimizationResult, OptimizedVariable, optimize

__all__ = [
    "Constraints", "DetectionPoint", "EconomicParams", "EfficiencyReport", "NetworkConfig",
    "OptimizationResult", "OptimizedVariable", "PowerParams", "Probability", "RadioParams",
    "SeededStream", "SignalModel", "TimingParams", "optimize", "q", "q_inv", "wilson_interval",
]
