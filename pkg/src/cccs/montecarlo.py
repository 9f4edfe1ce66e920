"""Monte Carlo check of the Gaussian detection formulas.

Trials are simulated in fixed-size blocks; block ``b`` under hypothesis
``h`` draws from stream ``1 + 2*b + h`` of the run seed and stream 0 holds
the projection basis. Because every block owns its stream, results are
bitwise identical for any number of workers.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .numstats import Probability, SeededStream, q, wilson_interval
from .sensing import RadioParams, SignalModel, false_alarm, detection

BLOCK_TRIALS = 2000
CLT_MIN_NM = 100


class CltRegimeWarning(UserWarning):
    """N*M too small for the Gaussian approximation to be trusted."""


@dataclass(frozen=True)
class ProjectionSpec:
    ambient_dim: int
    subspace_dim: int
    seed: SeededStream

    def __post_init__(self):
        if not 1 <= self.subspace_dim <= self.ambient_dim:
            raise ValueError(
                f"need 1 <= M <= P, got M={self.subspace_dim}, P={self.ambient_dim}"
            )


def _orthonormal_rows(rng: np.random.Generator, m: int, p: int, batch: int | None = None) -> np.ndarray:
    shape = (p, m) if batch is None else (batch, p, m)
    qmat, _ = np.linalg.qr(rng.standard_normal(shape))
    return np.swapaxes(qmat, -1, -2)


def sample_projection(spec: ProjectionSpec) -> np.ndarray:
    """Orthonormal basis (M x P) of a uniformly random M-dimensional subspace.

    The projector onto its row space is ``B.T @ B``.
    """
    return _orthonormal_rows(spec.seed.generator(), spec.subspace_dim, spec.ambient_dim)


def _check_obs(observations: np.ndarray, basis: np.ndarray) -> np.ndarray:
    obs = np.asarray(observations, dtype=float)
    if obs.ndim != 2 or obs.shape[1] != basis.shape[-1]:
        raise ValueError(
            f"observations must be N x {basis.shape[-1]}, got shape {obs.shape}"
        )
    return obs


def test_statistic_random(observations: np.ndarray, basis: np.ndarray) -> float:
    """Projected energy sum_n y(n)^T P y(n) = sum_n ||B y(n)||^2."""
    obs = _check_obs(observations, basis)
    return float(np.sum(np.square(obs @ basis.T)))


def test_statistic_det(observations: np.ndarray, basis: np.ndarray, signal: np.ndarray) -> float:
    """Compressive matched filter sum_n x^T P y(n)."""
    obs = _check_obs(observations, basis)
    x = np.asarray(signal, dtype=float)
    if x.shape != (basis.shape[-1],):
        raise ValueError(f"signal must have length {basis.shape[-1]}, got shape {x.shape}")
    if not np.dot(x, x) > 0:
        raise ValueError("signal must have positive energy")
    return float(np.dot(basis @ x, basis @ obs.sum(axis=0)))


# keep pytest from collecting these when a test module imports them
test_statistic_random.__test__ = False
test_statistic_det.__test__ = False


def default_signal(rp: RadioParams) -> np.ndarray:
    """Flat deterministic signal with ||x||^2 = snr * sigma_w^2."""
    p = rp.samples_per_slot
    return np.full(p, math.sqrt(rp.signal_variance / p))


@dataclass(frozen=True)
class Simulation:
    """Raw test statistics for one run, ``trials`` per hypothesis."""

    model: SignalModel
    radio: RadioParams
    seed: int
    h0: np.ndarray
    h1: np.ndarray
    subspace_dim: int
    resampled: bool
    signal_energy: float | None
    projected_energy: float | None  # ||P x||^2 of the fixed basis (det model)

    @property
    def trials(self) -> int:
        return len(self.h0)

    @property
    def effective_radio(self) -> RadioParams:
        """Radio parameters with c replaced by the realized M/P."""
        rp = self.radio
        return rp.with_(compression_ratio=self.subspace_dim / rp.samples_per_slot)


def _simulate_block(model, rp, m, stream, hyp, count, basis, signal, resample):
    rng = stream.generator()
    n, p, s2 = rp.node_count, rp.samples_per_slot, rp.noise_variance
    if resample:
        # per-slot subspace spanned by the rows of a Gaussian G; the projector
        # G^T (G G^T)^-1 G is the same as B^T B for an orthonormalized G but
        # skips a batched QR
        g = rng.standard_normal((count, m, p))
        gram = g @ np.swapaxes(g, 1, 2)
    y = math.sqrt(s2) * rng.standard_normal((count, n, p))
    if model is SignalModel.RANDOM:
        if hyp:
            y += math.sqrt(rp.signal_variance) * rng.standard_normal((count, n, p))
        if resample:
            z = g @ np.swapaxes(y, 1, 2)
            return np.einsum("tmn,tmn->t", z, np.linalg.solve(gram, z))
        return np.sum(np.square(y @ basis.T), axis=(1, 2))
    total = y.sum(axis=1)
    if hyp:
        total += n * signal
    if resample:
        gs = np.einsum("tmp,tp->tm", g, total)
        return np.einsum("tm,tm->t", g @ signal, np.linalg.solve(gram, gs[..., None])[..., 0])
    return (total @ basis.T) @ (basis @ signal)


def simulate(model: SignalModel, rp: RadioParams, trials: int, seed: int, *,
             resample_projection: bool = False, signal: np.ndarray | None = None,
             workers: int = 1) -> Simulation:
    """Simulate the fusion-center statistic under both hypotheses.

    The random model draws fresh signal and noise per slot; the
    deterministic model uses ``signal`` (default :func:`default_signal`).
    The basis is drawn once per run unless ``resample_projection`` is set,
    in which case every slot gets its own subspace.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    m = rp.subspace_dim
    p = rp.samples_per_slot
    root = SeededStream(seed)
    x = None
    if model is SignalModel.DETERMINISTIC:
        x = default_signal(rp) if signal is None else np.asarray(signal, dtype=float)
        if x.shape != (p,) or not np.dot(x, x) > 0:
            raise ValueError(f"signal must be a non-zero vector of length {p}")
    basis = None if resample_projection else sample_projection(ProjectionSpec(p, m, root.child(0)))

    blocks = [(b, min(BLOCK_TRIALS, trials - b * BLOCK_TRIALS)) for b in range(math.ceil(trials / BLOCK_TRIALS))]
    jobs = [(hyp, b, count) for hyp in (0, 1) for b, count in blocks]

    def run(job):
        hyp, b, count = job
        return _simulate_block(model, rp, m, root.child(1 + 2 * b + hyp), hyp, count, basis, x, resample_projection)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, jobs))
    else:
        parts = [run(job) for job in jobs]
    half = len(blocks)
    h0 = np.concatenate(parts[:half])
    h1 = np.concatenate(parts[half:])

    projected = None
    if x is not None and basis is not None:
        bx = basis @ x
        projected = float(np.dot(bx, bx))
    return Simulation(
        model=model, radio=rp, seed=seed, h0=h0, h1=h1, subspace_dim=m,
        resampled=resample_projection,
        signal_energy=None if x is None else float(np.dot(x, x)),
        projected_energy=projected,
    )


@dataclass(frozen=True)
class TrialStats:
    trials: int
    exceedances: int
    empirical_rate: Probability
    ci_low: Probability
    ci_high: Probability
    analytic: Probability
    within_ci: bool


def trial_stats(exceedances: int, trials: int, analytic: float, confidence: float = 0.99) -> TrialStats:
    lo, hi = wilson_interval(exceedances, trials, confidence)
    analytic = Probability(float(analytic))
    return TrialStats(
        trials=trials,
        exceedances=exceedances,
        empirical_rate=Probability(exceedances / trials),
        ci_low=lo,
        ci_high=hi,
        analytic=analytic,
        within_ci=bool(lo <= analytic <= hi),
    )


@dataclass(frozen=True)
class RateEstimate:
    """Empirical false-alarm and detection rates with their analytic targets.

    ``pf.analytic``/``pd.analytic`` use the realized M/P. For the
    deterministic model with a fixed basis they use the realized ||P x||^2;
    ``pf_approx``/``pd_approx`` always hold the closed forms that assume
    ||P x||^2 = (M/P) ||x||^2. ``pf_nominal``/``pd_nominal`` are the closed
    forms at the continuous compression ratio.
    """

    model: SignalModel
    threshold: float
    pf: TrialStats
    pd: TrialStats
    subspace_dim: int
    effective_ratio: float
    pf_approx: float
    pd_approx: float
    pf_nominal: float
    pd_nominal: float
    projected_energy: float | None


def rates_from_simulation(sim: Simulation, threshold: float, confidence: float = 0.99) -> RateEstimate:
    rp = sim.radio
    eff = sim.effective_radio
    pf_apx = float(false_alarm(sim.model, threshold, eff))
    pd_apx = float(detection(sim.model, threshold, eff))
    pf_ref, pd_ref = pf_apx, pd_apx
    if sim.model is SignalModel.DETERMINISTIC and sim.projected_energy is not None:
        n = rp.node_count
        sd = math.sqrt(rp.noise_variance * n * sim.projected_energy)
        pf_ref = float(q(threshold / sd))
        pd_ref = float(q((threshold - n * sim.projected_energy) / sd))
    return RateEstimate(
        model=sim.model,
        threshold=float(threshold),
        pf=trial_stats(int(np.count_nonzero(sim.h0 > threshold)), sim.trials, pf_ref, confidence),
        pd=trial_stats(int(np.count_nonzero(sim.h1 > threshold)), sim.trials, pd_ref, confidence),
        subspace_dim=sim.subspace_dim,
        effective_ratio=eff.compression_ratio,
        pf_approx=pf_apx,
        pd_approx=pd_apx,
        pf_nominal=float(false_alarm(sim.model, threshold, rp)),
        pd_nominal=float(detection(sim.model, threshold, rp)),
        projected_energy=sim.projected_energy,
    )


def estimate_rates(model: SignalModel, rp: RadioParams, threshold: float, trials: int, seed: int,
                   *, confidence: float = 0.99, **kwargs) -> RateEstimate:
    """Empirical P_f and P_d at ``threshold`` with 99% Wilson intervals by default.

    Extra keyword arguments go to :func:`simulate`.
    """
    return rates_from_simulation(simulate(model, rp, trials, seed, **kwargs), threshold, confidence)


@dataclass(frozen=True)
class MomentRow:
    hypothesis: int
    predicted_mean: float
    predicted_var: float
    sample_mean: float
    sample_var: float

    @property
    def mean_rel_error(self) -> float:
        if self.predicted_mean == 0:
            return abs(self.sample_mean)
        return abs(self.sample_mean - self.predicted_mean) / abs(self.predicted_mean)

    @property
    def var_rel_error(self) -> float:
        return abs(self.sample_var - self.predicted_var) / self.predicted_var


@dataclass(frozen=True)
class MomentReport:
    model: SignalModel
    trials: int
    nm: int
    h0: MomentRow
    h1: MomentRow


def moments_from_simulation(sim: Simulation) -> MomentReport:
    rp = sim.radio
    n, m, s2 = rp.node_count, sim.subspace_dim, rp.noise_variance
    if sim.model is SignalModel.RANDOM:
        s1 = s2 * (1.0 + rp.snr)
        pred = [(n * m * s2, 2.0 * n * m * s2 * s2), (n * m * s1, 2.0 * n * m * s1 * s1)]
    else:
        if sim.projected_energy is not None:
            px = sim.projected_energy
        else:
            px = sim.signal_energy * m / rp.samples_per_slot
        pred = [(0.0, s2 * n * px), (n * px, s2 * n * px)]
    rows = [
        MomentRow(h, mu, var, float(np.mean(vals)), float(np.var(vals, ddof=1)) if len(vals) > 1 else 0.0)
        for h, ((mu, var), vals) in enumerate(zip(pred, (sim.h0, sim.h1)))
    ]
    return MomentReport(sim.model, sim.trials, n * m, rows[0], rows[1])


def gaussian_fit_report(model: SignalModel, rp: RadioParams, trials: int, seed: int, **kwargs) -> MomentReport:
    """Sample moments of the statistic against their asymptotic predictions."""
    nm = rp.node_count * rp.subspace_dim
    if nm < CLT_MIN_NM:
        warnings.warn(f"N*M = {nm} < {CLT_MIN_NM}: Gaussian approximation is unreliable",
                      CltRegimeWarning, stacklevel=2)
    return moments_from_simulation(simulate(model, rp, trials, seed, **kwargs))
