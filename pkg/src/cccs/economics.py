"""Frame-level throughput, energy and energy efficiency.

Four outcomes per frame, by PU state and fusion decision:

    S1  occupied, detected       no transmission, throughput 0
    S2  vacant, false alarm      no transmission, penalty -phi*C*t
    S3  occupied, missed         transmits, partial throughput kappa*C*t
    S4  vacant, correctly idle   transmits, full throughput C*t

with t = T_total - c*(tau_s + N*tau_r) the transmission time. Every node
pays sensing and reporting energy in each outcome; transmission energy is
only spent in S3 and S4. Throughput is in bits/Hz per frame and energy in
joules per frame.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, replace

from .numstats import Probability
from .sensing import Constraints, DetectionPoint, RadioParams, SignalModel, operating_point


class InvalidTimingError(ValueError):
    """Sensing and reporting leave no time for transmission."""


class ApproximationWarning(UserWarning):
    """The regime assumption behind the approximate throughput does not hold."""


@dataclass(frozen=True)
class TimingParams:
    frame: float = 0.2
    sense_slot: float = 0.03
    report_slot: float = 1e-4

    def __post_init__(self):
        if min(self.frame, self.sense_slot, self.report_slot) <= 0:
            raise ValueError("frame, sense_slot and report_slot must be positive")
        if self.frame <= self.sense_slot + self.report_slot:
            raise ValueError("frame must exceed sense_slot + report_slot for a single node")

    def sensing_time(self, node_count: int) -> float:
        """T_s = tau_s + N * tau_r."""
        return self.sense_slot + node_count * self.report_slot

    @property
    def max_nodes(self) -> int:
        """Largest N with tau_s + N * tau_r < T_total."""
        n = int((self.frame - self.sense_slot) // self.report_slot)
        # floor division can land one off either way in floating point
        while n > 0 and self.sensing_time(n) >= self.frame:
            n -= 1
        while self.sensing_time(n + 1) < self.frame:
            n += 1
        return n

    def check_nodes(self, node_count: int) -> None:
        if self.sensing_time(node_count) >= self.frame:
            raise InvalidTimingError(
                f"N={node_count} leaves no transmission time "
                f"(tau_s + N tau_r = {self.sensing_time(node_count)} >= T_total = {self.frame})"
            )


@dataclass(frozen=True)
class PowerParams:
    """Per-node powers in watts.

    ``report_power`` defaults to ``transmit_power``; setting it to
    ``sense_power`` gives the variant where reporting is charged at the
    sensing power.
    """

    sense_power: float = 0.1
    transmit_power: float = 3.0
    report_power: float | None = None

    def __post_init__(self):
        if self.report_power is None:
            object.__setattr__(self, "report_power", self.transmit_power)
        if min(self.sense_power, self.transmit_power, self.report_power) <= 0:
            raise ValueError("all powers must be positive")


@dataclass(frozen=True)
class EconomicParams:
    prior_vacant: float = 0.5
    prior_occupied: float = 0.5
    capacity: float = math.log2(101.0)
    partial_throughput: float = 0.5
    penalty: float = 0.5

    def __post_init__(self):
        Probability(self.prior_vacant)
        Probability(self.prior_occupied)
        if abs(self.prior_vacant + self.prior_occupied - 1.0) > 1e-12:
            raise ValueError("prior_vacant + prior_occupied must equal 1")
        if self.capacity <= 0:
            raise ValueError("capacity must be positive")
        if not 0.0 <= self.partial_throughput < 1.0:
            raise ValueError("partial_throughput must lie in [0, 1)")
        if not 0.0 <= self.penalty < 1.0:
            raise ValueError("penalty must lie in [0, 1)")


class Scenario(enum.Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"


@dataclass(frozen=True)
class ScenarioRow:
    scenario: Scenario
    probability: float
    energy: float
    throughput: float


@dataclass(frozen=True)
class EfficiencyReport:
    r_exact: float
    e_exact: float
    ee_exact: float
    r_approx: float
    e_approx: float
    ee_approx: float

    @property
    def gap(self) -> float:
        """Relative deviation of the approximate efficiency from the exact one."""
        return abs(self.ee_exact - self.ee_approx) / abs(self.ee_exact)


def transmission_time(rp: RadioParams, tp: TimingParams) -> float:
    t = tp.frame - rp.compression_ratio * tp.sensing_time(rp.node_count)
    if t <= 0:
        raise InvalidTimingError(
            f"T_total - c*T_s = {t} <= 0 at c={rp.compression_ratio}, N={rp.node_count}"
        )
    return t


def overhead_energy(rp: RadioParams, tp: TimingParams, pp: PowerParams) -> float:
    """Sensing plus reporting energy of all N nodes, paid in every outcome."""
    n, c = rp.node_count, rp.compression_ratio
    return n * pp.sense_power * c * tp.sense_slot + n * pp.report_power * c * tp.report_slot


def scenario_table(dp: DetectionPoint, rp: RadioParams, tp: TimingParams,
                   pp: PowerParams, ep: EconomicParams) -> list[ScenarioRow]:
    t = transmission_time(rp, tp)
    base = overhead_energy(rp, tp, pp)
    busy = base + pp.transmit_power * t
    cap = ep.capacity * t
    pf, pd = float(dp.p_false_alarm), float(dp.p_detect)
    pi0, pi1 = ep.prior_vacant, ep.prior_occupied
    return [
        ScenarioRow(Scenario.S1, pi1 * pd, base, 0.0),
        ScenarioRow(Scenario.S2, pi0 * pf, base, -ep.penalty * cap),
        ScenarioRow(Scenario.S3, pi1 * (1.0 - pd), busy, ep.partial_throughput * cap),
        ScenarioRow(Scenario.S4, pi0 * (1.0 - pf), busy, cap),
    ]


def throughput_exact(dp: DetectionPoint, rp: RadioParams, tp: TimingParams,
                     pp: PowerParams, ep: EconomicParams) -> float:
    t = transmission_time(rp, tp)
    pf, pd = float(dp.p_false_alarm), float(dp.p_detect)
    cap = ep.capacity * t
    return (ep.prior_vacant * (1.0 - pf) * cap
            + ep.partial_throughput * cap * ep.prior_occupied * (1.0 - pd)
            - ep.penalty * cap * ep.prior_vacant * pf)


def energy_exact(dp: DetectionPoint, rp: RadioParams, tp: TimingParams,
                 pp: PowerParams, ep: EconomicParams) -> float:
    t = transmission_time(rp, tp)
    pf, pd = float(dp.p_false_alarm), float(dp.p_detect)
    idle = ep.prior_occupied * pd + ep.prior_vacant * pf
    return overhead_energy(rp, tp, pp) + pp.transmit_power * t * (1.0 - idle)


def _check_regime(dp: DetectionPoint, ep: EconomicParams) -> None:
    lhs = ep.prior_vacant * (1.0 - float(dp.p_false_alarm))
    rhs = ep.prior_occupied * (1.0 - float(dp.p_detect))
    if not lhs > rhs:
        warnings.warn(
            f"pi0*(1-Pf) = {lhs:.6g} does not exceed pi1*(1-Pd) = {rhs:.6g}; "
            "approximate throughput/energy may be inaccurate",
            ApproximationWarning,
            stacklevel=3,
        )


def throughput_approx(dp: DetectionPoint, rp: RadioParams, tp: TimingParams,
                      pp: PowerParams, ep: EconomicParams, *, warn: bool = True) -> float:
    """Throughput with the partial-throughput term dropped (kappa = 0)."""
    if warn:
        _check_regime(dp, ep)
    t = transmission_time(rp, tp)
    return ep.prior_vacant * ep.capacity * t * (1.0 - (1.0 + ep.penalty) * float(dp.p_false_alarm))


def energy_approx(dp: DetectionPoint, rp: RadioParams, tp: TimingParams,
                  pp: PowerParams, ep: EconomicParams, *, warn: bool = True) -> float:
    if warn:
        _check_regime(dp, ep)
    t = transmission_time(rp, tp)
    return overhead_energy(rp, tp, pp) + pp.transmit_power * t * ep.prior_vacant * (1.0 - float(dp.p_false_alarm))


def _ratio(r: float, e: float) -> float:
    if not e > 0:
        raise ValueError(f"energy must be positive, got {e}")
    return r / e


def ee_exact(dp: DetectionPoint, rp: RadioParams, tp: TimingParams,
             pp: PowerParams, ep: EconomicParams) -> float:
    return _ratio(throughput_exact(dp, rp, tp, pp, ep), energy_exact(dp, rp, tp, pp, ep))


def ee_approx(dp: DetectionPoint, rp: RadioParams, tp: TimingParams,
              pp: PowerParams, ep: EconomicParams, *, warn: bool = True) -> float:
    return _ratio(throughput_approx(dp, rp, tp, pp, ep, warn=warn),
                  energy_approx(dp, rp, tp, pp, ep, warn=False))


def efficiency_report(dp: DetectionPoint, rp: RadioParams, tp: TimingParams,
                      pp: PowerParams, ep: EconomicParams, *, warn: bool = True) -> EfficiencyReport:
    r, e = throughput_exact(dp, rp, tp, pp, ep), energy_exact(dp, rp, tp, pp, ep)
    ra = throughput_approx(dp, rp, tp, pp, ep, warn=warn)
    ea = energy_approx(dp, rp, tp, pp, ep, warn=False)
    return EfficiencyReport(r, e, _ratio(r, e), ra, ea, _ratio(ra, ea))


def ccs_baseline(model: SignalModel, rp: RadioParams, cons: Constraints, tp: TimingParams,
                 pp: PowerParams, ep: EconomicParams, *, warn: bool = True) -> EfficiencyReport:
    """Uncompressed (c = 1) scheme at its own detection-tight threshold."""
    full = replace(rp, compression_ratio=1.0)
    return efficiency_report(operating_point(model, full, cons), full, tp, pp, ep, warn=warn)
