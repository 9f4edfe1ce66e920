"""Command-line front end: ``cccs {sweep,optimize,simulate,verify}``.

Configuration is a flat ``key = value`` text file (``#`` starts a comment).
Missing keys take the defaults below; command-line flags override the file.
The config stores SNR as a linear ratio, while the CLI takes it in dB.

Exit codes: 0 success, 1 usage or configuration error, 2 infeasible
problem, 3 verification failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
import warnings
from dataclasses import dataclass, field, replace
from typing import Callable, Iterable, Sequence

import numpy as np

from . import optimizer as opt
from .economics import (
    EconomicParams,
    InvalidTimingError,
    PowerParams,
    TimingParams,
    ccs_baseline,
    efficiency_report,
    energy_exact,
    scenario_table,
    throughput_exact,
)
from .montecarlo import CLT_MIN_NM, CltRegimeWarning, moments_from_simulation, rates_from_simulation, simulate
from .sensing import (
    Constraints,
    RadioParams,
    SignalModel,
    db_to_linear,
    detection,
    detection_point,
    false_alarm,
    false_alarm_threshold,
    fixed_threshold_det,
    optimal_threshold,
)

EXIT_OK, EXIT_USAGE, EXIT_INFEASIBLE, EXIT_VERIFY = 0, 1, 2, 3


class ConfigError(ValueError):
    """Bad configuration file or flag value."""


class UsageError(ValueError):
    """Inconsistent command-line request."""


def _int(text: str) -> int:
    val = float(text)
    if not val.is_integer():
        raise ValueError(f"expected an integer, got {text!r}")
    return int(val)


def _opt_float(text: str) -> float | None:
    return None if text.strip().lower() in ("", "none") else float(text)


# key -> parser; defaults live on RunConfig
_KEYS: dict[str, Callable[[str], object]] = {
    "noise_variance": float,
    "snr": float,
    "samples_per_slot": _int,
    "node_count": _int,
    "compression_ratio": float,
    "max_false_alarm": float,
    "min_detection": float,
    "prior_vacant": float,
    "prior_occupied": float,
    "secondary_snr_db": float,
    "capacity": _opt_float,
    "partial_throughput": float,
    "penalty": float,
    "frame_duration": float,
    "sense_slot": float,
    "report_slot": float,
    "sense_power": float,
    "transmit_power": float,
    "report_power": _opt_float,
    "signal_model": SignalModel.parse,
    "trials": _int,
    "seed": _int,
    "grid_step": float,
    "output": str,
    "sampling_frequency": float,
    "threshold": _opt_float,
}


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration.

    ``sampling_frequency`` is accepted and echoed for completeness; no
    formula consumes it. ``capacity`` defaults to log2(1 + SNR_s) with SNR_s
    taken from ``secondary_snr_db``.
    """

    noise_variance: float = 1.0
    snr: float = 10 ** -0.9
    samples_per_slot: int = 100
    node_count: int = 10
    compression_ratio: float = 0.5
    max_false_alarm: float = 0.1
    min_detection: float = 0.9
    prior_vacant: float = 0.5
    prior_occupied: float = 0.5
    secondary_snr_db: float = 20.0
    capacity: float | None = None
    partial_throughput: float = 0.5
    penalty: float = 0.5
    frame_duration: float = 0.2
    sense_slot: float = 0.03
    report_slot: float = 1e-4
    sense_power: float = 0.1
    transmit_power: float = 3.0
    report_power: float | None = None
    signal_model: SignalModel = SignalModel.RANDOM
    trials: int = 100_000
    seed: int = 0
    grid_step: float = 1e-3
    output: str = "-"
    sampling_frequency: float = 1e6
    threshold: float | None = None
    network: opt.NetworkConfig = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.trials < 1:
            raise ConfigError("trials: must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed: must be a 64-bit unsigned integer")
        if not self.grid_step > 0:
            raise ConfigError("grid_step: must be positive")
        if not self.sampling_frequency > 0:
            raise ConfigError("sampling_frequency: must be positive")
        try:
            net = opt.NetworkConfig(
                model=self.signal_model,
                radio=RadioParams(self.snr, self.node_count, self.compression_ratio,
                                  self.samples_per_slot, self.noise_variance),
                constraints=Constraints(self.max_false_alarm, self.min_detection),
                timing=TimingParams(self.frame_duration, self.sense_slot, self.report_slot),
                power=PowerParams(self.sense_power, self.transmit_power, self.report_power),
                economics=EconomicParams(self.prior_vacant, self.prior_occupied, self.capacity_value,
                                         self.partial_throughput, self.penalty),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        object.__setattr__(self, "network", net)

    @property
    def capacity_value(self) -> float:
        if self.capacity is not None:
            return self.capacity
        return math.log2(1.0 + db_to_linear(self.secondary_snr_db))

    def with_(self, **changes) -> "RunConfig":
        return replace(self, **changes)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        try:
            values[key] = _KEYS[key](value)
        except ValueError as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {exc}") from None
    return RunConfig(**values)


def load_config(path: str | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    return parse_config(text, path)


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, SignalModel):
        return value.value
    return str(value)


def write_csv(rows: Sequence[dict], columns: Sequence[str], out) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_fmt(row.get(col)) for col in columns])


# sweep

SWEEP_VARS = ("c", "N", "snr_db", "lambda")
SWEEP_COLUMNS = ("sweep_var", "value", "c", "N", "pf", "pd", "r_exact", "e_exact", "ee_exact",
                 "r_approx", "e_approx", "ee_approx", "c_star", "n_star", "lambda_star", "model", "feasible")


@dataclass(frozen=True)
class SweepSpec:
    variable: str
    start: float
    stop: float
    step: float

    def __post_init__(self):
        if self.variable not in SWEEP_VARS:
            raise UsageError(f"sweep variable must be one of {SWEEP_VARS}, got {self.variable!r}")
        if not self.step > 0:
            raise UsageError("--step must be positive")
        if self.start > self.stop:
            raise UsageError(f"--start {self.start} exceeds --stop {self.stop}")

    def values(self) -> list[float]:
        count = math.floor((self.stop - self.start) / self.step + 1e-9) + 1
        vals = [round(self.start + k * self.step, 12) for k in range(count)]
        if self.variable == "N":
            if any(not float(v).is_integer() for v in vals):
                raise UsageError("N sweep needs integer start and step")
            vals = [int(v) for v in vals]
        return vals


def _check_row(row: dict) -> None:
    """Every emitted row must satisfy its own accounting identities."""
    for key in ("pf", "pd"):
        if not 0.0 <= row[key] <= 1.0:
            raise AssertionError(f"{key} = {row[key]} outside [0, 1]")
    for kind in ("exact", "approx"):
        r, e, ee = row[f"r_{kind}"], row[f"e_{kind}"], row[f"ee_{kind}"]
        if not e > 0:
            raise AssertionError(f"e_{kind} = {e} is not positive")
        if not math.isclose(ee, r / e, rel_tol=1e-12, abs_tol=1e-300):
            raise AssertionError(f"ee_{kind} != r_{kind} / e_{kind}")


def sweep_row(cfg: RunConfig, variable: str, value, threshold_rule: str = "detection") -> dict:
    net = cfg.network
    if variable == "c":
        net = net.with_radio(compression_ratio=float(value))
    elif variable == "N":
        net = net.with_radio(node_count=int(value))
    elif variable == "snr_db":
        net = net.with_radio(snr=db_to_linear(float(value)))
    rp, cons = net.radio, net.constraints
    lam_star = optimal_threshold(net.model, rp, cons)
    if variable == "lambda":
        lam = float(value)
    elif cfg.threshold is not None:
        lam = cfg.threshold
    else:
        lam = _rule_threshold(threshold_rule, net)
    dp = detection_point(net.model, rp, lam)
    try:
        n_star = opt.n_max(rp.compression_ratio, cons, rp.snr, rp.samples_per_slot, net.model)
    except opt.InfeasibleError:
        n_star = None
    row = {
        "sweep_var": variable, "value": value, "c": rp.compression_ratio, "N": rp.node_count,
        "pf": float(dp.p_false_alarm), "pd": float(dp.p_detect),
        "c_star": opt.c_max(rp.node_count, cons, rp.snr, rp.samples_per_slot, net.model).value,
        "n_star": n_star, "lambda_star": lam_star, "model": net.model,
    }
    try:
        rep = efficiency_report(dp, rp, net.timing, net.power, net.economics, warn=False)
    except InvalidTimingError:
        row.update({k: math.nan for k in ("r_exact", "e_exact", "ee_exact", "r_approx", "e_approx", "ee_approx")})
        row["feasible"] = False
        return row
    row.update(r_exact=rep.r_exact, e_exact=rep.e_exact, ee_exact=rep.ee_exact,
               r_approx=rep.r_approx, e_approx=rep.e_approx, ee_approx=rep.ee_approx)
    row["feasible"] = opt.is_feasible(row["pf"], row["pd"], cons)
    _check_row(row)
    return row


def _rule_threshold(rule: str, net: opt.NetworkConfig) -> float:
    if rule == "detection":
        return optimal_threshold(net.model, net.radio, net.constraints)
    if rule == "false-alarm":
        return false_alarm_threshold(net.model, net.radio, net.constraints)
    if rule == "midpoint":
        if net.model is not SignalModel.DETERMINISTIC:
            raise UsageError("the midpoint threshold rule applies to the deterministic model only")
        return fixed_threshold_det(net.radio)
    raise UsageError(f"unknown threshold rule {rule!r}")


def cmd_sweep(cfg: RunConfig, spec: SweepSpec, out, threshold_rule: str = "detection") -> int:
    rows = [sweep_row(cfg, spec.variable, v, threshold_rule) for v in spec.values()]
    write_csv(rows, SWEEP_COLUMNS, out)
    return EXIT_OK


# optimize

OPTIMIZE_COLUMNS = ("model", "optimized_variable", "value", "c", "N", "lambda_star", "pf", "pd",
                    "ee_approx", "ee_exact", "approx_gap", "ccs_ee_approx", "ccs_ee_exact",
                    "clamped", "feasible", "closed_form", "grid_argmax", "discrepancy")


def cmd_optimize(cfg: RunConfig, vary: opt.OptimizedVariable, out, report) -> int:
    """Print the optimum to ``report`` and its CSV row to ``out`` (skipped when ``None``)."""
    net = cfg.network
    try:
        res = opt.optimize(net, vary, cfg.grid_step)
    except (opt.InfeasibleError, InvalidTimingError) as exc:
        print(f"infeasible: {exc}", file=report)
        return EXIT_INFEASIBLE
    rp = net.radio.with_(compression_ratio=res.compression_ratio, node_count=res.node_count)
    ccs = ccs_baseline(net.model, rp, net.constraints, net.timing, net.power, net.economics, warn=False)
    name = "c" if vary is opt.OptimizedVariable.COMPRESSION_RATIO else "N"
    cons = net.constraints
    lines = [
        f"model              {net.model.value}",
        f"optimized          {name}* = {res.value:.6g}" + ("  (clamped to CCS, c = 1)" if res.clamped else ""),
        f"operating point    c = {res.compression_ratio:.6g}, N = {res.node_count}",
        f"threshold          lambda* = {res.threshold:.10g}",
        f"P_f / P_d          {res.p_false_alarm:.6g} / {res.p_detect:.6g}"
        f"  (targets <= {cons.max_false_alarm}, >= {cons.min_detection})",
        f"EE approx / exact  {res.ee_at_optimum:.6g} / {res.ee_exact:.6g} bits/Hz/J"
        f"  (gap {res.report.gap:.3%})",
        f"CCS baseline       EE approx {ccs.ee_approx:.6g}, exact {ccs.ee_exact:.6g}",
        f"grid check         argmax {res.grid_argmax:.6g}"
        + ("  DISAGREES with closed form " + f"{res.closed_form:.6g}" if res.discrepancy else "  agrees"),
        f"feasible           {'yes' if res.feasible else 'no'}",
    ]
    if not res.feasible:
        if res.p_false_alarm > cons.max_false_alarm:
            lines.append(f"violated bound     P_f = {res.p_false_alarm:.6g} > {cons.max_false_alarm}")
        if res.p_detect < cons.min_detection:
            lines.append(f"violated bound     P_d = {res.p_detect:.6g} < {cons.min_detection}")
    print("\n".join(lines), file=report)
    if out is not None:
        row = {
            "model": net.model, "optimized_variable": name, "value": float(res.value),
            "c": res.compression_ratio, "N": res.node_count, "lambda_star": res.threshold,
            "pf": res.p_false_alarm, "pd": res.p_detect, "ee_approx": res.ee_at_optimum,
            "ee_exact": res.ee_exact, "approx_gap": res.report.gap, "ccs_ee_approx": ccs.ee_approx,
            "ccs_ee_exact": ccs.ee_exact, "clamped": res.clamped, "feasible": res.feasible,
            "closed_form": float(res.closed_form), "grid_argmax": float(res.grid_argmax),
            "discrepancy": res.discrepancy,
        }
        write_csv([row], OPTIMIZE_COLUMNS, out)
    return EXIT_OK if res.feasible else EXIT_INFEASIBLE


# simulate

SIMULATE_COLUMNS = ("model", "c", "N", "M", "lambda", "trials", "pf_emp", "pf_analytic", "pf_ci_low",
                    "pf_ci_high", "pd_emp", "pd_analytic", "pd_ci_low", "pd_ci_high", "pf_within_ci",
                    "pd_within_ci", "seed", "c_effective", "pf_approx", "pd_approx", "pf_nominal",
                    "pd_nominal", "projected_energy", "resampled", "h0_mean_rel_err", "h0_var_rel_err",
                    "h1_mean_rel_err", "h1_var_rel_err")


def cmd_simulate(cfg: RunConfig, out, threshold_rule: str = "detection", resample: bool = False,
                 workers: int = 1, warn_out=None) -> int:
    net = cfg.network
    rp = net.radio
    lam = cfg.threshold if cfg.threshold is not None else _rule_threshold(threshold_rule, net)
    nm = rp.node_count * rp.subspace_dim
    if nm < CLT_MIN_NM:
        msg = f"N*M = {nm} < {CLT_MIN_NM}: Gaussian approximation is unreliable"
        if warn_out is not None:
            print(f"warning: {msg}", file=warn_out)
        else:
            warnings.warn(msg, CltRegimeWarning, stacklevel=2)
    sim = simulate(net.model, rp, cfg.trials, cfg.seed, resample_projection=resample, workers=workers)
    est = rates_from_simulation(sim, lam)
    mom = moments_from_simulation(sim)
    row = {
        "model": net.model, "c": rp.compression_ratio, "N": rp.node_count, "M": est.subspace_dim,
        "lambda": float(lam), "trials": cfg.trials,
        "pf_emp": float(est.pf.empirical_rate), "pf_analytic": float(est.pf.analytic),
        "pf_ci_low": float(est.pf.ci_low), "pf_ci_high": float(est.pf.ci_high),
        "pd_emp": float(est.pd.empirical_rate), "pd_analytic": float(est.pd.analytic),
        "pd_ci_low": float(est.pd.ci_low), "pd_ci_high": float(est.pd.ci_high),
        "pf_within_ci": est.pf.within_ci, "pd_within_ci": est.pd.within_ci, "seed": cfg.seed,
        "c_effective": est.effective_ratio, "pf_approx": est.pf_approx, "pd_approx": est.pd_approx,
        "pf_nominal": est.pf_nominal, "pd_nominal": est.pd_nominal,
        "projected_energy": est.projected_energy, "resampled": resample,
        "h0_mean_rel_err": mom.h0.mean_rel_error, "h0_var_rel_err": mom.h0.var_rel_error,
        "h1_mean_rel_err": mom.h1.mean_rel_error, "h1_var_rel_err": mom.h1.var_rel_error,
    }
    write_csv([row], SIMULATE_COLUMNS, out)
    return EXIT_OK


# verify

@dataclass(frozen=True)
class CheckResult:
    name: str
    failures: tuple[str, ...]

    @property
    def passed(self) -> bool:
        return not self.failures


def default_hooks() -> dict[str, Callable]:
    """Functions under test in the verify battery; override entries to self-test the harness."""
    return {
        "dpf_dlambda": opt.dpf_dlambda,
        "dpf_dc": opt.dpf_dc_along_threshold,
        "dpf_dc_fixed_threshold": opt.dpf_dc_fixed_threshold,
        "optimal_threshold": optimal_threshold,
        "throughput_exact": throughput_exact,
        "energy_exact": energy_exact,
    }


def _rel_err(a: float, b: float) -> float:
    return abs(a - b) / max(abs(b), 1e-300)


def _central(f: Callable[[float], float], x: float, h: float) -> float:
    return (f(x + h) - f(x - h)) / (2.0 * h)


def _point(net: opt.NetworkConfig) -> str:
    rp = net.radio
    return f"model={net.model.value} N={rp.node_count} c={rp.compression_ratio:.6g} snr={rp.snr:.6g}"


def _check_derivatives(net, hooks, tol=1e-5) -> list[str]:
    bad = []
    model, cons = net.model, net.constraints
    for c in (0.05, 0.25, 0.5, 0.75, 1.0):
        point = net.with_radio(compression_ratio=c)
        rp = point.radio
        lam = optimal_threshold(model, rp, cons)
        h = 1e-6 * max(abs(lam), 1.0)
        fd = _central(lambda x: float(false_alarm(model, x, rp)), lam, h)
        got = hooks["dpf_dlambda"](point, lam)
        if _rel_err(got, fd) > tol:
            bad.append(f"dPf/dlambda at {_point(point)}: {got!r} vs finite difference {fd!r}")

        hc = 1e-6 * min(c, 1.0 - c) if c < 1.0 else 1e-6
        along = (lambda cc: float(false_alarm(model, optimal_threshold(model, rp.with_(compression_ratio=cc), cons),
                                              rp.with_(compression_ratio=cc))))
        fixed = (lambda cc: float(false_alarm(model, lam, rp.with_(compression_ratio=cc))))
        if c < 1.0:
            fd_along, fd_fixed = _central(along, c, hc), _central(fixed, c, hc)
        else:  # one-sided second-order stencil at the upper edge
            fd_along = (3 * along(c) - 4 * along(c - hc) + along(c - 2 * hc)) / (2 * hc)
            fd_fixed = (3 * fixed(c) - 4 * fixed(c - hc) + fixed(c - 2 * hc)) / (2 * hc)
        got = hooks["dpf_dc"](point)
        if _rel_err(got, fd_along) > tol:
            bad.append(f"dPf/dc along lambda* at {_point(point)}: {got!r} vs finite difference {fd_along!r}")
        got = hooks["dpf_dc_fixed_threshold"](point, lam)
        if _rel_err(got, fd_fixed) > tol:
            bad.append(f"dPf/dc at fixed lambda, {_point(point)}: {got!r} vs finite difference {fd_fixed!r}")
    return bad


def _check_cub(net, nodes) -> list[str]:
    return [
        f"c_max <= c_UB at N={chk.node_count} snr={chk.snr:.6g}: c_max={chk.c_max:.6g}, c_UB="
        + ("undefined (W <= 0)" if chk.c_ub is None else f"{chk.c_ub:.6g}")
        for chk in opt.verify_cmax_le_cub(net, nodes, [net.radio.snr]) if not chk.passed
    ]


def _check_monotone(net, grid_step) -> list[str]:
    bad = []
    for vary in opt.OptimizedVariable:
        try:
            grid = opt.grid_search(net, vary, grid_step)
        except opt.InfeasibleError as exc:
            bad.append(f"{vary.value}-grid empty at {_point(net)}: {exc}")
            continue
        if not grid.non_decreasing:
            drops = np.flatnonzero(np.diff(grid.ee) < 0)
            bad.append(f"EE~ decreases along the {vary.value}-grid at {_point(net)}; first drop after "
                       f"{vary.value}={grid.points[drops[0]]:.6g}, {len(drops)} drops in total")
    return bad


def _check_optimizer(net, grid_step) -> list[str]:
    bad = []
    for vary in opt.OptimizedVariable:
        try:
            res = opt.optimize(net, vary, grid_step)
        except opt.InfeasibleError as exc:
            bad.append(f"optimize({vary.value}) infeasible at {_point(net)}: {exc}")
            continue
        if res.discrepancy:
            bad.append(f"optimize({vary.value}) closed form {res.closed_form:.6g} vs grid argmax "
                       f"{res.grid_argmax:.6g} at {_point(net)}")
    return bad


def _check_scenarios(net, hooks, tol=1e-12) -> list[str]:
    rp, tp, pp, ep = net.radio, net.timing, net.power, net.economics
    dp = detection_point(net.model, rp, optimal_threshold(net.model, rp, net.constraints))
    rows = scenario_table(dp, rp, tp, pp, ep)
    bad = []
    total = sum(r.probability for r in rows)
    if abs(total - 1.0) > tol:
        bad.append(f"scenario probabilities sum to {total!r} at {_point(net)}")
    r_agg = sum(r.probability * r.throughput for r in rows)
    e_agg = sum(r.probability * r.energy for r in rows)
    r = hooks["throughput_exact"](dp, rp, tp, pp, ep)
    e = hooks["energy_exact"](dp, rp, tp, pp, ep)
    if abs(r - r_agg) > tol * max(1.0, abs(r_agg)):
        bad.append(f"throughput_exact {r!r} != scenario aggregate {r_agg!r} at {_point(net)}")
    if abs(e - e_agg) > tol * max(1.0, abs(e_agg)):
        bad.append(f"energy_exact {e!r} != scenario aggregate {e_agg!r} at {_point(net)}")
    return bad


def _check_thresholds(net, hooks) -> list[str]:
    bad = []
    model, cons, rp = net.model, net.constraints, net.radio
    lam = hooks["optimal_threshold"](model, rp, cons)
    pd = float(detection(model, lam, rp))
    if abs(pd - cons.min_detection) > 1e-12:
        bad.append(f"P_d(lambda*) = {pd!r} != {cons.min_detection} at {_point(net)}")
    edge = net.with_radio(compression_ratio=net.bound / rp.node_count)
    if edge.radio.compression_ratio <= 1.0:
        lam = hooks["optimal_threshold"](model, edge.radio, cons)
        pf = float(false_alarm(model, lam, edge.radio))
        if abs(pf - cons.max_false_alarm) > 1e-10:
            bad.append(f"P_f(lambda*) = {pf!r} != {cons.max_false_alarm} on the bound at {_point(edge)}")
    return bad


def run_verify(cfg: RunConfig, nodes: Iterable[int], hooks: dict[str, Callable] | None = None) -> list[CheckResult]:
    nodes = list(nodes)
    if not nodes:
        raise UsageError("empty node range for the c_UB check")
    active = default_hooks()
    if hooks:
        unknown = set(hooks) - set(active)
        if unknown:
            raise UsageError(f"unknown verify hooks: {sorted(unknown)}")
        active.update(hooks)
    net = cfg.network
    return [
        CheckResult("derivatives", tuple(_check_derivatives(net, active))),
        CheckResult("c_max<=c_UB", tuple(_check_cub(net, nodes))),
        CheckResult("monotone_ee", tuple(_check_monotone(net, cfg.grid_step))),
        CheckResult("optimize_vs_grid", tuple(_check_optimizer(net, cfg.grid_step))),
        CheckResult("scenario_identities", tuple(_check_scenarios(net, active))),
        CheckResult("threshold_exactness", tuple(_check_thresholds(net, active))),
    ]


def cmd_verify(cfg: RunConfig, nodes: Iterable[int], out, hooks=None) -> int:
    results = run_verify(cfg, nodes, hooks)
    for res in results:
        if res.passed:
            print(f"PASS {res.name}", file=out)
        else:
            print(f"FAIL {res.name}", file=out)
            for msg in res.failures:
                print(f"     {msg}", file=out)
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} checks passed", file=out)
    return EXIT_OK if failed == 0 else EXIT_VERIFY


# argument handling

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value configuration file")
    common.add_argument("--model", choices=("random", "det"), help="PU signal model")
    common.add_argument("--snr-db", type=float, help="sensing SNR in dB (overrides config 'snr')")
    common.add_argument("--trials", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--out", help="output path (default: standard output)")
    common.add_argument("--grid-step", type=float)
    common.add_argument("--report-power", choices=("pt", "ps"),
                        help="charge reporting at the transmit (pt) or sensing (ps) power")
    common.add_argument("--threshold-rule", choices=("detection", "false-alarm", "midpoint"), default="detection",
                        help="threshold when the config gives none: detection-tight, false-alarm-tight, "
                             "or the deterministic midpoint")

    parser = _Parser(prog="cccs", description="Energy-efficient collaborative compressive sensing.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("sweep", parents=[common], help="evaluate detection and efficiency along one variable")
    p.add_argument("--var", required=True, choices=SWEEP_VARS)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--step", type=float, required=True)

    p = sub.add_parser("optimize", parents=[common], help="optimize c (fixed N) or N (fixed c)")
    p.add_argument("--vary", choices=("c", "N"), default="c")

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo check of P_f and P_d")
    p.add_argument("--resample", action="store_true", help="draw a new projection for every slot")
    p.add_argument("--workers", type=int, default=1)

    p = sub.add_parser("verify", parents=[common], help="run the invariant battery")
    p.add_argument("--n-range", type=int, nargs=2, metavar=("LO", "HI"),
                   help="node counts for the c_UB check (default: 2 .. node_count)")
    return parser


def config_from_args(args) -> RunConfig:
    cfg = load_config(args.config)
    changes: dict[str, object] = {}
    if args.model:
        changes["signal_model"] = SignalModel.parse(args.model)
    if args.snr_db is not None:
        changes["snr"] = db_to_linear(args.snr_db)
    for name in ("trials", "seed", "grid_step"):
        if getattr(args, name) is not None:
            changes[name] = getattr(args, name)
    if args.out:
        changes["output"] = args.out
    if args.report_power:
        power = cfg.transmit_power if args.report_power == "pt" else cfg.sense_power
        changes["report_power"] = power
    return cfg.with_(**changes) if changes else cfg


def _open_out(path: str):
    if path in (None, "-"):
        return sys.stdout, False
    return open(path, "w", encoding="utf-8", newline=""), True


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(args)
        if args.command == "sweep":
            spec = SweepSpec(args.var, args.start, args.stop, args.step)
            spec.values()
        elif args.command == "verify":
            lo, hi = args.n_range if args.n_range else (2, cfg.node_count)
            if lo > hi or lo < 1:
                raise UsageError(f"--n-range {lo} {hi} is empty or invalid")
        elif args.command == "simulate" and args.workers < 1:
            raise UsageError("--workers must be at least 1")
    except (ConfigError, UsageError) as exc:
        print(f"cccs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE

    out, close = _open_out(cfg.output)
    try:
        if args.command == "sweep":
            return cmd_sweep(cfg, spec, out, args.threshold_rule)
        if args.command == "optimize":
            # keep stdout clean CSV when no file is given
            return cmd_optimize(cfg, opt.OptimizedVariable.parse(args.vary), out,
                                sys.stdout if close else sys.stderr)
        if args.command == "simulate":
            return cmd_simulate(cfg, out, args.threshold_rule, args.resample, args.workers, warn_out=sys.stderr)
        return cmd_verify(cfg, range(lo, hi + 1), out)
    except UsageError as exc:
        print(f"cccs: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    finally:
        if close:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
