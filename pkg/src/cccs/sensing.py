"""Analytic detection layer for collaborative compressive sensing.

N nodes each observe P samples; the fusion center sees an M = cP
dimensional projection of every observation and thresholds either the
projected energy (random Gaussian PU signal) or a compressive matched
filter (deterministic PU signal). All formulas treat the compression ratio
``c`` as a continuous variable; only the simulator rounds it to an integer
subspace dimension.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, replace

import numpy as np

from .numstats import Probability, q, q_inv


class SignalModel(enum.Enum):
    RANDOM = "random"
    DETERMINISTIC = "det"

    @classmethod
    def parse(cls, text: str) -> "SignalModel":
        key = text.strip().lower()
        aliases = {"random": cls.RANDOM, "randomgaussian": cls.RANDOM,
                   "det": cls.DETERMINISTIC, "deterministic": cls.DETERMINISTIC}
        try:
            return aliases[key]
        except KeyError:
            raise ValueError(f"unknown signal model {text!r}; expected 'random' or 'det'") from None


@dataclass(frozen=True)
class RadioParams:
    """Per-slot sensing parameters.

    ``snr`` is the linear ratio signal power / noise power; the signal
    variance (random model) or signal energy per sample (deterministic
    model) is derived from it rather than stored.
    """

    snr: float
    node_count: int = 10
    compression_ratio: float = 0.5
    samples_per_slot: int = 100
    noise_variance: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.snr) and self.snr > 0):
            raise ValueError(f"snr must be positive, got {self.snr!r}")
        if self.samples_per_slot < 1 or int(self.samples_per_slot) != self.samples_per_slot:
            raise ValueError(f"samples_per_slot must be a positive integer, got {self.samples_per_slot!r}")
        if self.node_count < 1 or int(self.node_count) != self.node_count:
            raise ValueError(f"node_count must be a positive integer, got {self.node_count!r}")
        if not (0.0 < self.compression_ratio <= 1.0):
            raise ValueError(f"compression_ratio must lie in (0, 1], got {self.compression_ratio!r}")
        if not (math.isfinite(self.noise_variance) and self.noise_variance > 0):
            raise ValueError(f"noise_variance must be positive, got {self.noise_variance!r}")

    @property
    def signal_variance(self) -> float:
        return self.snr * self.noise_variance

    @property
    def cn(self) -> float:
        return self.compression_ratio * self.node_count

    @property
    def subspace_dim(self) -> int:
        """Integer projection dimension used by the simulator, floored at 1."""
        return max(1, min(self.samples_per_slot, round(self.compression_ratio * self.samples_per_slot)))

    def with_(self, **changes) -> "RadioParams":
        return replace(self, **changes)


@dataclass(frozen=True)
class Constraints:
    """Target false-alarm ceiling and detection floor."""

    max_false_alarm: float = 0.1
    min_detection: float = 0.9

    def __post_init__(self):
        Probability(self.max_false_alarm)
        Probability(self.min_detection)
        if not self.max_false_alarm < self.min_detection:
            raise ValueError(
                "constraints need max_false_alarm < min_detection, got "
                f"{self.max_false_alarm} >= {self.min_detection}"
            )


@dataclass(frozen=True)
class DetectionPoint:
    threshold: float
    p_false_alarm: Probability
    p_detect: Probability
    model: SignalModel


# Random Gaussian PU signal.  T(Y)/sigma_k^2 ~ N(cNP, 2cNP) under H_k with
# sigma_0^2 = sigma_w^2 and sigma_1^2 = (1 + snr) sigma_w^2.

def _random_arg(threshold, scale, k):
    return (np.asarray(threshold, dtype=float) / scale - k) / math.sqrt(2.0 * k)


def pf_random(threshold, rp: RadioParams):
    k = rp.cn * rp.samples_per_slot
    return q(_random_arg(threshold, rp.noise_variance, k))


def pd_random(threshold, rp: RadioParams):
    k = rp.cn * rp.samples_per_slot
    return q(_random_arg(threshold, rp.noise_variance * (1.0 + rp.snr), k))


def lambda_star_random(rp: RadioParams, cons: Constraints) -> float:
    """Smallest threshold that still meets the detection floor with equality."""
    k = rp.cn * rp.samples_per_slot
    return rp.noise_variance * (1.0 + rp.snr) * (math.sqrt(2.0 * k) * q_inv(cons.min_detection) + k)


def cn_bound_random(cons: Constraints, snr: float, samples_per_slot: int) -> float:
    """Product c*N at which the detection-tight threshold meets the false-alarm target."""
    gap = q_inv(cons.max_false_alarm) - (1.0 + snr) * q_inv(cons.min_detection)
    return 2.0 * gap * gap / (snr * snr * samples_per_slot)


# Deterministic PU signal with ||x||^2 = snr * sigma_w^2 and ||P x||^2 ~ c ||x||^2:
# T ~ N(0, s^2) under H0 and N(cN snr sigma_w^2, s^2) under H1, s = sigma_w^2 sqrt(cN snr).

def _det_scale(rp: RadioParams) -> float:
    return rp.noise_variance * math.sqrt(rp.cn * rp.snr)


def pf_det(threshold, rp: RadioParams):
    return q(np.asarray(threshold, dtype=float) / _det_scale(rp))


def pd_det(threshold, rp: RadioParams):
    mean = rp.cn * rp.snr * rp.noise_variance
    return q((np.asarray(threshold, dtype=float) - mean) / _det_scale(rp))


def lambda_star_det(rp: RadioParams, cons: Constraints) -> float:
    root = math.sqrt(rp.cn * rp.snr)
    return rp.noise_variance * root * (q_inv(cons.min_detection) + root)


def cn_bound_det(cons: Constraints, snr: float) -> float:
    gap = q_inv(cons.max_false_alarm) - q_inv(cons.min_detection)
    return gap * gap / snr


def fixed_threshold_det(rp: RadioParams) -> float:
    """Midpoint threshold (N/2) c snr sigma_w^2 between the two hypothesis means."""
    return 0.5 * rp.cn * rp.snr * rp.noise_variance


# Model dispatch.

def false_alarm(model: SignalModel, threshold, rp: RadioParams):
    return pf_random(threshold, rp) if model is SignalModel.RANDOM else pf_det(threshold, rp)


def detection(model: SignalModel, threshold, rp: RadioParams):
    return pd_random(threshold, rp) if model is SignalModel.RANDOM else pd_det(threshold, rp)


def optimal_threshold(model: SignalModel, rp: RadioParams, cons: Constraints) -> float:
    if model is SignalModel.RANDOM:
        return lambda_star_random(rp, cons)
    return lambda_star_det(rp, cons)


def false_alarm_threshold(model: SignalModel, rp: RadioParams, cons: Constraints) -> float:
    """Neyman-Pearson threshold that pins the false-alarm rate to its ceiling."""
    qf = q_inv(cons.max_false_alarm)
    if model is SignalModel.RANDOM:
        k = rp.cn * rp.samples_per_slot
        return rp.noise_variance * (math.sqrt(2.0 * k) * qf + k)
    return _det_scale(rp) * qf


def cn_bound(model: SignalModel, cons: Constraints, snr: float, samples_per_slot: int) -> float:
    if model is SignalModel.RANDOM:
        return cn_bound_random(cons, snr, samples_per_slot)
    return cn_bound_det(cons, snr)


def detection_point(model: SignalModel, rp: RadioParams, threshold: float) -> DetectionPoint:
    return DetectionPoint(
        threshold=float(threshold),
        p_false_alarm=false_alarm(model, threshold, rp),
        p_detect=detection(model, threshold, rp),
        model=model,
    )


def operating_point(model: SignalModel, rp: RadioParams, cons: Constraints) -> DetectionPoint:
    """Detection point at the detection-tight threshold."""
    return detection_point(model, rp, optimal_threshold(model, rp, cons))


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)
