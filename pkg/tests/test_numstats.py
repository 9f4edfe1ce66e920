import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cccs.numstats import (
    Probability,
    SeededStream,
    q,
    q_inv,
    standard_normal_sample,
    wilson_interval,
)

mpmath.mp.dps = 40


def q_oracle(x) -> float:
    return float(mpmath.erfc(mpmath.mpf(x) / mpmath.sqrt(2)) / 2)


def q_inv_oracle(p) -> float:
    return float(mpmath.sqrt(2) * mpmath.erfinv(1 - 2 * mpmath.mpf(p)))


class TestProbability:
    @pytest.mark.parametrize("v", [0.0, 0.3, 1.0])
    def test_accepts_unit_interval(self, v):
        assert Probability(v) == v

    @pytest.mark.parametrize("v", [-1e-12, 1.0 + 1e-12, math.nan, math.inf])
    def test_rejects_outside(self, v):
        with pytest.raises(ValueError):
            Probability(v)


class TestQ:
    @pytest.mark.parametrize(
        "x, expected, tol",
        [
            (0.0, 0.5, 0.0),
            (1.2815515655, 0.1, 1e-10),
            (-1.0, 0.8413447, 1e-6),
        ],
    )
    def test_examples(self, x, expected, tol):
        assert abs(q(x) - expected) <= tol

    @pytest.mark.parametrize("x", [-7.5, -3.0, -0.4, 0.1, 1.0, 2.5, 5.0, 8.0, 12.0])
    def test_matches_high_precision_erfc(self, x):
        assert q(x) == pytest.approx(q_oracle(x), rel=1e-13, abs=1e-300)

    def test_scalar_returns_probability(self):
        assert isinstance(q(0.3), Probability)

    def test_array_input(self):
        xs = np.array([-1.0, 0.0, 1.0])
        np.testing.assert_allclose(q(xs), [q_oracle(x) for x in xs], rtol=1e-14)

    @pytest.mark.parametrize("x", [math.nan, math.inf, -math.inf])
    def test_rejects_non_finite(self, x):
        with pytest.raises(ValueError):
            q(x)

    def test_symmetry_on_grid(self):
        xs = np.linspace(-8, 8, 2001)
        assert np.max(np.abs(q(xs) + q(-xs) - 1.0)) <= 1e-12

    def test_strictly_decreasing(self):
        xs = np.linspace(-6, 6, 10_000)
        assert np.all(np.diff(q(xs)) < 0)


class TestQInv:
    @pytest.mark.parametrize(
        "p, expected, tol",
        [(0.5, 0.0, 1e-15), (0.1, 1.2815515655, 1e-9), (0.9, -1.2815515655, 1e-9)],
    )
    def test_examples(self, p, expected, tol):
        assert abs(q_inv(p) - expected) <= tol

    @pytest.mark.parametrize("p", [1e-12, 1e-6, 0.01, 0.1, 0.37, 0.9, 0.999999])
    def test_matches_erfinv_oracle(self, p):
        assert q_inv(p) == pytest.approx(q_inv_oracle(p), rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.5, math.nan])
    def test_domain(self, p):
        with pytest.raises(ValueError):
            q_inv(p)

    @settings(max_examples=300)
    @given(st.floats(min_value=1e-6, max_value=1 - 1e-6))
    def test_round_trip(self, p):
        assert abs(q(q_inv(p)) - p) <= 1e-12


class TestWilson:
    def test_zero_successes_pins_lower(self):
        lo, hi = wilson_interval(0, 100, 0.99)
        assert lo == 0.0 and 0 < hi < 0.1

    def test_half(self):
        lo, hi = wilson_interval(50, 100, 0.95)
        assert lo < 0.5 < hi
        assert hi - lo == pytest.approx(0.19, abs=0.02)

    def test_textbook_value(self):
        # z = 1.959963984540054; centre and half-width by hand for 50/100
        z = 1.959963984540054
        centre = (0.5 + z * z / 200) / (1 + z * z / 100)
        half = z * math.sqrt(0.25 / 100 + z * z / 40000) / (1 + z * z / 100)
        lo, hi = wilson_interval(50, 100, 0.95)
        assert lo == pytest.approx(centre - half, abs=1e-12)
        assert hi == pytest.approx(centre + half, abs=1e-12)

    def test_high_rate(self):
        lo, hi = wilson_interval(900, 1000, 0.99)
        assert lo < 0.9 < hi

    def test_all_successes(self):
        lo, hi = wilson_interval(20, 20, 0.95)
        assert hi == 1.0 and lo < 1.0

    @pytest.mark.parametrize("args", [(0, 0, 0.9), (5, 4, 0.9), (-1, 4, 0.9), (1, 4, 1.0)])
    def test_errors(self, args):
        with pytest.raises(ValueError):
            wilson_interval(*args)

    @given(st.integers(1, 10_000).flatmap(lambda n: st.tuples(st.integers(0, n), st.just(n))),
           st.sampled_from([0.8, 0.95, 0.99]))
    def test_brackets_estimate(self, counts, conf):
        k, n = counts
        lo, hi = wilson_interval(k, n, conf)
        assert 0.0 <= lo <= k / n <= hi <= 1.0

    def test_wider_at_higher_confidence(self):
        a = wilson_interval(30, 200, 0.9)
        b = wilson_interval(30, 200, 0.99)
        assert b[0] < a[0] and b[1] > a[1]


class TestStreams:
    def test_same_key_same_draws(self):
        a = standard_normal_sample(SeededStream(7, 3), 100)
        b = standard_normal_sample(SeededStream(7, 3), 100)
        np.testing.assert_array_equal(a, b)

    @pytest.mark.parametrize("other", [SeededStream(7, 4), SeededStream(8, 3)])
    def test_different_key_different_draws(self, other):
        a = standard_normal_sample(SeededStream(7, 3), 100)
        assert not np.array_equal(a, standard_normal_sample(other, 100))

    def test_moments(self):
        z = standard_normal_sample(SeededStream(2024), 1_000_000)
        assert abs(z.mean()) < 0.005
        assert abs(z.var() - 1.0) < 0.01

    def test_child_keeps_seed(self):
        assert SeededStream(5, 0).child(9) == SeededStream(5, 9)

    @pytest.mark.parametrize("seed, idx", [(-1, 0), (2**64, 0), (0, -1)])
    def test_rejects_bad_keys(self, seed, idx):
        with pytest.raises(ValueError):
            SeededStream(seed, idx)
