"""Scalar statistical primitives shared by the detection, optimization and
simulation layers."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

_SQRT2 = math.sqrt(2.0)
_INV_SQRT2PI = 1.0 / math.sqrt(2.0 * math.pi)


class Probability(float):
    """A float constrained to the closed unit interval."""

    def __new__(cls, value: float) -> "Probability":
        v = float.__new__(cls, value)
        if not (0.0 <= v <= 1.0):
            raise ValueError(f"probability must lie in [0, 1], got {value!r}")
        return v


def _check_finite(x):
    if not np.all(np.isfinite(x)):
        raise ValueError(f"argument must be finite, got {x!r}")


def q(x):
    """Upper-tail probability of the standard normal, ``Q(x) = P(Z > x)``.

    Scalars return a :class:`Probability`; arrays are evaluated elementwise.
    """
    _check_finite(x)
    val = 0.5 * special.erfc(np.asarray(x, dtype=float) / _SQRT2)
    if np.ndim(val) == 0:
        return Probability(float(val))
    return val


def normal_pdf(x):
    return _INV_SQRT2PI * np.exp(-0.5 * np.square(x))


def q_inv(p):
    """Inverse of :func:`q`.

    Starts from ``-ndtri(p)`` and applies one Newton step on ``q`` so the
    residual ``|q(q_inv(p)) - p|`` sits at the rounding floor.
    """
    arr = np.asarray(p, dtype=float)
    if np.any(~np.isfinite(arr)) or np.any((arr <= 0.0) | (arr >= 1.0)):
        raise ValueError(f"q_inv is defined on the open interval (0, 1), got {p!r}")
    x = -special.ndtri(arr)
    x = x + (0.5 * special.erfc(x / _SQRT2) - arr) / normal_pdf(x)
    if np.ndim(x) == 0:
        return float(x)
    return x


def wilson_interval(successes: int, trials: int, confidence: float = 0.95) -> tuple[Probability, Probability]:
    """Wilson score interval for a binomial proportion.

    Args:
        successes: Number of events observed.
        trials: Number of Bernoulli trials, at least one.
        confidence: Two-sided coverage level in (0, 1).

    Returns:
        ``(lower, upper)``, both in [0, 1] and bracketing ``successes / trials``.
    """
    if trials < 1:
        raise ValueError("Wilson interval needs at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError(f"successes must lie in [0, {trials}], got {successes}")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must lie in (0, 1)")

    z = q_inv((1.0 - confidence) / 2.0)
    n = float(trials)
    p_hat = successes / n
    denom = 1.0 + z * z / n
    center = (p_hat + z * z / (2.0 * n)) / denom
    spread = z * math.sqrt(p_hat * (1.0 - p_hat) / n + z * z / (4.0 * n * n)) / denom

    lower = 0.0 if successes == 0 else min(max(center - spread, 0.0), p_hat)
    upper = 1.0 if successes == trials else max(min(center + spread, 1.0), p_hat)
    return Probability(lower), Probability(upper)


@dataclass(frozen=True)
class SeededStream:
    """Immutable key for a reproducible random stream.

    The generator is a counter-based Philox keyed through ``SeedSequence``
    with ``stream_index`` as spawn key, so any stream can be materialized
    independently of the others (and of thread scheduling).
    """

    base_seed: int
    stream_index: int = 0

    def __post_init__(self):
        if not 0 <= self.base_seed < 2**64:
            raise ValueError("base_seed must be a 64-bit unsigned integer")
        if self.stream_index < 0:
            raise ValueError("stream_index must be non-negative")

    def generator(self) -> np.random.Generator:
        seq = np.random.SeedSequence(self.base_seed, spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.Philox(seq))

    def child(self, stream_index: int) -> "SeededStream":
        return SeededStream(self.base_seed, stream_index)


def standard_normal_sample(stream: SeededStream, size) -> np.ndarray:
    """I.i.d. N(0, 1) draws from ``stream``; identical for identical keys."""
    return stream.generator().standard_normal(size)
