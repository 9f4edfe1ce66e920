"""Compression-ratio and node-count optimization.

Both constraints meet at the boundary c*N = bound: the threshold is set so
the detection floor is met with equality, and the false-alarm target is
then met with equality exactly when c*N equals the bound. The closed-form
optimum puts the free variable on that boundary; an exhaustive grid over
the same region is kept alongside as an independent check.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, NamedTuple

import numpy as np

from .economics import (
    EconomicParams,
    EfficiencyReport,
    PowerParams,
    TimingParams,
    efficiency_report,
    energy_approx,
    throughput_approx,
    transmission_time,
)
from .numstats import normal_pdf, q_inv
from .sensing import (
    Constraints,
    RadioParams,
    SignalModel,
    cn_bound,
    detection_point,
    operating_point,
)

FEASIBILITY_TOL = 1e-9


class InfeasibleError(ValueError):
    """No operating point satisfies the constraints."""


class OptimizedVariable(enum.Enum):
    COMPRESSION_RATIO = "c"
    NODE_COUNT = "N"

    @classmethod
    def parse(cls, text: str) -> "OptimizedVariable":
        key = text.strip()
        for member in cls:
            if key == member.value or key.lower() == member.name.lower():
                return member
        raise ValueError(f"unknown optimization variable {text!r}; expected 'c' or 'N'")


@dataclass(frozen=True)
class NetworkConfig:
    """Every physical and economic parameter of one sensing network."""

    model: SignalModel = SignalModel.RANDOM
    radio: RadioParams = field(default_factory=lambda: RadioParams(snr=10 ** -0.9))
    constraints: Constraints = field(default_factory=Constraints)
    timing: TimingParams = field(default_factory=TimingParams)
    power: PowerParams = field(default_factory=PowerParams)
    economics: EconomicParams = field(default_factory=EconomicParams)

    def with_radio(self, **changes) -> "NetworkConfig":
        return replace(self, radio=replace(self.radio, **changes))

    def with_model(self, model: SignalModel) -> "NetworkConfig":
        return replace(self, model=model)

    @property
    def bound(self) -> float:
        """Largest c*N compatible with both constraints (see module docstring)."""
        return cn_bound(self.model, self.constraints, self.radio.snr, self.radio.samples_per_slot)


class CompressionBound(NamedTuple):
    value: float
    raw: float
    clamped: bool


def c_max(node_count: int, cons: Constraints, snr: float, samples_per_slot: int,
          model: SignalModel) -> CompressionBound:
    """Compression ratio on the constraint boundary for ``node_count`` nodes, clamped to 1."""
    raw = cn_bound(model, cons, snr, samples_per_slot) / node_count
    if raw > 1.0:
        return CompressionBound(1.0, raw, True)
    return CompressionBound(raw, raw, False)


def n_max(compression_ratio: float, cons: Constraints, snr: float, samples_per_slot: int,
          model: SignalModel) -> int:
    if not 0.0 < compression_ratio <= 1.0:
        raise ValueError(f"compression_ratio must lie in (0, 1], got {compression_ratio}")
    raw = cn_bound(model, cons, snr, samples_per_slot) / compression_ratio
    if raw < 1.0:
        raise InfeasibleError(
            f"node bound {raw:.6g} < 1 at c={compression_ratio}: no integer N fits"
        )
    # guards exact integers that come out as k - 1e-15
    return math.floor(raw * (1.0 + 1e-12))


def ee_at_optimal_threshold(net: NetworkConfig) -> float:
    """Approximate efficiency with the threshold at its detection-tight value."""
    dp = operating_point(net.model, net.radio, net.constraints)
    rp, tp, pp, ep = net.radio, net.timing, net.power, net.economics
    return throughput_approx(dp, rp, tp, pp, ep, warn=False) / energy_approx(dp, rp, tp, pp, ep, warn=False)


@dataclass(frozen=True)
class GridResult:
    variable: OptimizedVariable
    points: np.ndarray
    ee: np.ndarray
    argmax: float
    max_ee: float

    @property
    def non_decreasing(self) -> bool:
        return bool(np.all(np.diff(self.ee) >= 0.0))

    @property
    def concave(self) -> bool:
        """Sign of the discrete second difference; reported, never enforced."""
        if len(self.ee) < 3:
            return True
        scale = max(1.0, float(np.max(np.abs(self.ee))))
        return bool(np.all(np.diff(self.ee, 2) <= 1e-12 * scale))


def _c_grid(net: NetworkConfig, resolution: float) -> np.ndarray:
    if not resolution > 0:
        raise ValueError("grid resolution must be positive")
    rp = net.radio
    cap = c_max(rp.node_count, net.constraints, rp.snr, rp.samples_per_slot, net.model).value
    top = math.floor(cap / resolution + 1e-9)
    if top < 1:
        raise InfeasibleError(f"no grid point in (0, {cap:.6g}] at resolution {resolution}")
    return np.arange(1, top + 1) * resolution


def grid_search(net: NetworkConfig, vary: OptimizedVariable, resolution: float = 1e-3) -> GridResult:
    """Exhaustive evaluation of the approximate efficiency over the feasible grid.

    ``vary = COMPRESSION_RATIO`` scans c in {r, 2r, ..., <= min(1, c_max)} at
    the configured N; ``vary = NODE_COUNT`` scans N in {1, ..., N_max} at the
    configured c (``resolution`` is ignored).
    """
    rp = net.radio
    if vary is OptimizedVariable.COMPRESSION_RATIO:
        net.timing.check_nodes(rp.node_count)
        points = _c_grid(net, resolution)
        ee = np.array([ee_at_optimal_threshold(net.with_radio(compression_ratio=float(c))) for c in points])
    else:
        top = n_max(rp.compression_ratio, net.constraints, rp.snr, rp.samples_per_slot, net.model)
        points = np.arange(1, top + 1)
        ee = np.array([ee_at_optimal_threshold(net.with_radio(node_count=int(n))) for n in points])
    best = int(np.argmax(ee))
    return GridResult(vary, points, ee, float(points[best]), float(ee[best]))


@dataclass(frozen=True)
class OptimizationResult:
    optimized_variable: OptimizedVariable
    value: float
    threshold: float
    ee_at_optimum: float
    ee_exact: float
    feasible: bool
    clamped: bool
    closed_form: float
    grid_argmax: float
    discrepancy: bool
    compression_ratio: float
    node_count: int
    p_false_alarm: float
    p_detect: float
    report: EfficiencyReport


def is_feasible(p_false_alarm: float, p_detect: float, cons: Constraints) -> bool:
    return (p_false_alarm <= cons.max_false_alarm + FEASIBILITY_TOL
            and p_detect >= cons.min_detection - FEASIBILITY_TOL)


def optimize(net: NetworkConfig, vary: OptimizedVariable = OptimizedVariable.COMPRESSION_RATIO,
             grid_step: float = 1e-3) -> OptimizationResult:
    """Put the free variable on its bound and cross-check against :func:`grid_search`.

    If the grid maximizer sits more than one step away from the closed form,
    the grid value is returned and ``discrepancy`` is set.
    """
    rp, cons = net.radio, net.constraints
    if vary is OptimizedVariable.COMPRESSION_RATIO:
        bound = c_max(rp.node_count, cons, rp.snr, rp.samples_per_slot, net.model)
        closed, clamped = bound.value, bound.clamped
        grid = grid_search(net, vary, grid_step)
        discrepancy = abs(grid.argmax - closed) > grid_step * (1.0 + 1e-9)
        value = grid.argmax if discrepancy else closed
        opt = net.with_radio(compression_ratio=value)
    else:
        closed, clamped = float(n_max(rp.compression_ratio, cons, rp.snr, rp.samples_per_slot, net.model)), False
        net.timing.check_nodes(int(closed))
        grid = grid_search(net, vary)
        discrepancy = abs(grid.argmax - closed) > 1
        value = grid.argmax if discrepancy else closed
        opt = net.with_radio(node_count=int(value))

    dp = operating_point(opt.model, opt.radio, cons)
    report = efficiency_report(dp, opt.radio, opt.timing, opt.power, opt.economics, warn=False)
    pf, pd = float(dp.p_false_alarm), float(dp.p_detect)
    return OptimizationResult(
        optimized_variable=vary,
        value=value,
        threshold=dp.threshold,
        ee_at_optimum=report.ee_approx,
        ee_exact=report.ee_exact,
        feasible=is_feasible(pf, pd, cons),
        clamped=clamped,
        closed_form=closed,
        grid_argmax=grid.argmax,
        discrepancy=discrepancy,
        compression_ratio=opt.radio.compression_ratio,
        node_count=opt.radio.node_count,
        p_false_alarm=pf,
        p_detect=pd,
        report=report,
    )


@dataclass(frozen=True)
class MonotonicityDiagnostics:
    """Derivatives and proof constants behind the monotonicity argument.

    ``dpf_dc`` is the derivative of the false-alarm rate along the
    detection-tight threshold (the threshold moves with c), which is the
    quantity the efficiency argument needs and is never positive.
    ``dpf_dc_fixed_threshold`` holds the threshold fixed; it is positive
    whenever the threshold is above minus the mean statistic.

    ``x4`` is the signed term as it enters the lower bound (-A*C*dPf/dc).
    ``c_ub`` is ``None`` when ``w_const <= 0``: the sufficient condition
    cannot hold for any c there.
    """

    dpf_dlambda: float
    dpf_dc: float
    dpf_dc_fixed_threshold: float
    v1: float
    v2: float
    x1: float
    x2: float
    x3: float
    x4: float
    w_const: float
    y_const: float
    c_ub: float | None
    pf_bound_expression: float


def _pf_argument(net: NetworkConfig, threshold: float) -> float:
    rp = net.radio
    if net.model is SignalModel.RANDOM:
        k = rp.cn * rp.samples_per_slot
        return (threshold / rp.noise_variance - k) / math.sqrt(2.0 * k)
    return threshold / (rp.noise_variance * math.sqrt(rp.cn * rp.snr))


def dpf_dlambda(net: NetworkConfig, threshold: float) -> float:
    rp = net.radio
    s2 = rp.noise_variance
    if net.model is SignalModel.RANDOM:
        k = rp.cn * rp.samples_per_slot
        return -math.exp(-(threshold / s2 - k) ** 2 / (4.0 * k)) / (2.0 * s2 * math.sqrt(k * math.pi))
    s = rp.cn * rp.snr
    return -math.exp(-threshold ** 2 / (2.0 * s * s2 * s2)) / (s2 * math.sqrt(2.0 * math.pi * s))


def dpf_dc_fixed_threshold(net: NetworkConfig, threshold: float) -> float:
    rp = net.radio
    n, g, s2 = rp.node_count, rp.snr, rp.noise_variance
    u = _pf_argument(net, threshold)
    if net.model is SignalModel.RANDOM:
        p = rp.samples_per_slot
        k = rp.cn * p
        a = threshold / s2
        return float(normal_pdf(u)) * n * p * (1.0 / math.sqrt(2.0 * k) + (a - k) / (2.0 * k) ** 1.5)
    s = rp.cn * g
    return float(normal_pdf(u)) * threshold * n * g / (2.0 * s2 * s ** 1.5)


def dpf_dc_along_threshold(net: NetworkConfig) -> float:
    rp, cons = net.radio, net.constraints
    n, g = rp.node_count, rp.snr
    qd = q_inv(cons.min_detection)
    if net.model is SignalModel.RANDOM:
        p = rp.samples_per_slot
        k = rp.cn * p
        u = (1.0 + g) * qd + g * math.sqrt(k / 2.0)
        return -float(normal_pdf(u)) * g * n * p / (2.0 * math.sqrt(2.0 * k))
    s = rp.cn * g
    u = qd + math.sqrt(s)
    return -float(normal_pdf(u)) * n * g / (2.0 * math.sqrt(s))


def diagnostics(net: NetworkConfig, threshold: float) -> MonotonicityDiagnostics:
    rp, tp, pp, ep = net.radio, net.timing, net.power, net.economics
    n, c = rp.node_count, rp.compression_ratio
    pi0, cap = ep.prior_vacant, ep.capacity
    pt = pp.transmit_power

    dp = detection_point(net.model, rp, threshold)
    r_apx = throughput_approx(dp, rp, tp, pp, ep, warn=False)
    e_apx = energy_approx(dp, rp, tp, pp, ep, warn=False)
    t = transmission_time(rp, tp)
    ts = tp.sensing_time(n)
    v1 = ((1.0 + ep.penalty) * pi0 * cap * t * e_apx - pi0 * pt * t * r_apx) / e_apx ** 2

    # per-unit-c overhead energy; the proof writes it E
    e_unit = n * pp.sense_power * tp.sense_slot + n * pp.report_power * tp.report_slot
    v2 = e_unit * pi0 * cap / pt ** 2

    slope = dpf_dc_along_threshold(net)
    a = pi0 * cap * t
    b = pi0 * pt * ts
    cc = c * e_unit
    d = pt * t * pi0
    u = np.float64(_pf_argument(net, threshold))
    with np.errstate(divide="ignore", invalid="ignore"):
        beta = 1.0 - 1.0 / (u * u)
        tail = np.exp(-u * u / 2.0)
        x2 = float((b * cc + a * e_unit - 2.0 * b * a + 2.0 * b * d) * beta * tail)
        x3 = float((b * a - b * d) * beta * beta * tail)
        pf_bound = float(beta * tail)
    x1 = b * a - b * d - b * cc - a * e_unit
    x4 = -a * cc * slope

    w = pi0 * (pt * ts * cap - pt * pt * ts - cap * e_unit)
    y = pi0 * pt * ts * e_unit
    c_ub = tp.frame * w / (ts * w + y) if w > 0 else None

    return MonotonicityDiagnostics(
        dpf_dlambda=dpf_dlambda(net, threshold),
        dpf_dc=slope,
        dpf_dc_fixed_threshold=dpf_dc_fixed_threshold(net, threshold),
        v1=v1,
        v2=v2,
        x1=x1,
        x2=x2,
        x3=x3,
        x4=x4,
        w_const=w,
        y_const=y,
        c_ub=c_ub,
        pf_bound_expression=pf_bound,
    )


class CubCheck(NamedTuple):
    node_count: int
    snr: float
    c_max: float
    c_ub: float | None
    passed: bool

    @property
    def status(self) -> str:
        if self.c_ub is None:
            return "undefined"
        return "pass" if self.passed else "fail"


def verify_cmax_le_cub(net: NetworkConfig, nodes: Iterable[int], snrs: Iterable[float]) -> list[CubCheck]:
    """Check c* <= c_UB over a (N, snr) grid; an undefined c_UB counts as not passed."""
    nodes = list(nodes)
    snrs = list(snrs)
    if not nodes or not snrs:
        raise ValueError("c_UB check needs a non-empty grid of node counts and SNRs")
    out = []
    for g in snrs:
        for n in nodes:
            point = net.with_radio(node_count=int(n), snr=float(g))
            rp = point.radio
            cm = c_max(rp.node_count, point.constraints, rp.snr, rp.samples_per_slot, point.model).value
            diag = diagnostics(point.with_radio(compression_ratio=cm),
                               threshold=_tight_threshold(point.with_radio(compression_ratio=cm)))
            ok = diag.c_ub is not None and cm <= diag.c_ub
            out.append(CubCheck(int(n), float(g), cm, diag.c_ub, ok))
    return out


def _tight_threshold(net: NetworkConfig) -> float:
    return operating_point(net.model, net.radio, net.constraints).threshold
