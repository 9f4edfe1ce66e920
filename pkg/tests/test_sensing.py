import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cccs.numstats import q
from cccs.sensing import (
    Constraints,
    RadioParams,
    SignalModel,
    cn_bound,
    cn_bound_det,
    cn_bound_random,
    db_to_linear,
    detection,
    detection_point,
    false_alarm,
    false_alarm_threshold,
    fixed_threshold_det,
    lambda_star_det,
    lambda_star_random,
    operating_point,
    optimal_threshold,
    pd_det,
    pd_random,
    pf_det,
    pf_random,
)

SNR_M9 = db_to_linear(-9.0)
SNR_M3 = db_to_linear(-3.0)
CONS = Constraints()
MODELS = list(SignalModel)

radios = st.builds(
    RadioParams,
    snr=st.floats(0.01, 3.0),
    node_count=st.integers(1, 60),
    compression_ratio=st.floats(0.01, 1.0),
    samples_per_slot=st.integers(10, 400),
    noise_variance=st.floats(0.1, 5.0),
)
constraints = st.tuples(st.floats(0.01, 0.4), st.floats(0.6, 0.99)).map(lambda t: Constraints(*t))


def gaussian_tail(threshold, mean, sd):
    # independent of cccs.numstats: scipy's normal survival function
    return float(stats.norm.sf(threshold, loc=mean, scale=sd))


class TestParams:
    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(snr=0.0),
            dict(snr=-1.0),
            dict(snr=1.0, compression_ratio=0.0),
            dict(snr=1.0, compression_ratio=1.5),
            dict(snr=1.0, node_count=0),
            dict(snr=1.0, samples_per_slot=0),
            dict(snr=1.0, noise_variance=0.0),
        ],
    )
    def test_invalid_radio(self, kwargs):
        with pytest.raises(ValueError):
            RadioParams(**kwargs)

    @pytest.mark.parametrize("pf, pd", [(0.5, 0.5), (0.9, 0.1), (-0.1, 0.9), (0.1, 1.1)])
    def test_invalid_constraints(self, pf, pd):
        with pytest.raises(ValueError):
            Constraints(pf, pd)

    @pytest.mark.parametrize("c, expected", [(0.5, 50), (0.001, 1), (1.0, 100), (0.125, 12)])
    def test_subspace_dim(self, c, expected):
        assert RadioParams(snr=1.0, compression_ratio=c).subspace_dim == expected

    def test_model_parse(self):
        assert SignalModel.parse("Deterministic") is SignalModel.DETERMINISTIC
        assert SignalModel.parse("random") is SignalModel.RANDOM
        with pytest.raises(ValueError, match="unknown signal model"):
            SignalModel.parse("rayleigh")


class TestRandomModel:
    def test_half_at_mean(self):
        rp = RadioParams(snr=SNR_M9)
        assert pf_random(rp.cn * rp.samples_per_slot, rp) == pytest.approx(0.5, abs=1e-15)
        assert pd_random(rp.cn * rp.samples_per_slot * (1 + rp.snr), rp) == pytest.approx(0.5, abs=1e-15)

    def test_q_of_one(self):
        rp = RadioParams(snr=SNR_M9)
        assert pf_random(500 + math.sqrt(1000), rp) == pytest.approx(0.158655, abs=1e-6)

    def test_limits(self):
        rp = RadioParams(snr=SNR_M9)
        assert pf_random(1e9, rp) == 0.0 and pd_random(1e9, rp) == 0.0
        assert pf_random(-1e9, rp) == 1.0 and pd_random(-1e9, rp) == 1.0

    @settings(max_examples=200)
    @given(radios, st.floats(-3, 3))
    def test_matches_gaussian_law(self, rp, z):
        k = rp.cn * rp.samples_per_slot
        s2 = rp.noise_variance
        lam = s2 * (k + z * math.sqrt(2 * k))
        assert pf_random(lam, rp) == pytest.approx(gaussian_tail(lam, k * s2, s2 * math.sqrt(2 * k)), abs=1e-12)
        s1 = s2 * (1 + rp.snr)
        assert pd_random(lam, rp) == pytest.approx(gaussian_tail(lam, k * s1, s1 * math.sqrt(2 * k)), abs=1e-12)

    def test_lambda_star_value(self):
        rp = RadioParams(snr=SNR_M9)
        assert lambda_star_random(rp, CONS) == pytest.approx(517.33, abs=0.02)
        assert lambda_star_random(rp, CONS) == pytest.approx(517.3181030521797, rel=1e-12)

    def test_lambda_star_at_half(self):
        rp = RadioParams(snr=SNR_M9)
        lam = lambda_star_random(rp, Constraints(0.1, 0.5))
        assert lam == pytest.approx((1 + rp.snr) * rp.cn * rp.samples_per_slot, rel=1e-15)

    def test_bound_value(self):
        assert cn_bound_random(CONS, SNR_M9, 100) == pytest.approx(9.367, abs=1e-3)
        assert cn_bound_random(CONS, SNR_M9, 100) / 10 == pytest.approx(0.9367, abs=1e-4)

    def test_strictly_decreasing_in_threshold(self):
        rp = RadioParams(snr=SNR_M9)
        lam = np.linspace(400, 650, 1000)
        assert np.all(np.diff(pf_random(lam, rp)) < 0)
        assert np.all(np.diff(pd_random(lam, rp)) < 0)

    @given(radios, st.floats(1e-3, 1e4))
    def test_detection_dominates_false_alarm(self, rp, lam):
        pf, pd = pf_random(lam, rp), pd_random(lam, rp)
        assert pd >= pf
        if 1e-300 < pf < 1.0 - 1e-12:  # away from double saturation
            assert pd > pf

    def test_zero_snr_limit(self):
        # snr must be positive; approach zero instead
        rp = RadioParams(snr=1e-14)
        lam = np.linspace(400, 600, 11)
        np.testing.assert_allclose(pd_random(lam, rp), pf_random(lam, rp), atol=1e-12)


class TestDeterministicModel:
    def test_half_at_zero(self):
        assert pf_det(0.0, RadioParams(snr=1.0)) == 0.5

    def test_q_of_one(self):
        rp = RadioParams(snr=1.0, node_count=10, compression_ratio=0.4)
        assert pf_det(2.0, rp) == pytest.approx(0.158655, abs=1e-6)

    def test_half_at_mean(self):
        rp = RadioParams(snr=0.7, node_count=12, compression_ratio=0.3)
        assert pd_det(rp.cn * rp.snr * rp.noise_variance, rp) == pytest.approx(0.5, abs=1e-15)

    @settings(max_examples=200)
    @given(radios, st.floats(-3, 3))
    def test_matches_gaussian_law(self, rp, z):
        sd = rp.noise_variance * math.sqrt(rp.cn * rp.snr)
        mean1 = rp.cn * rp.snr * rp.noise_variance
        lam = z * sd
        assert pf_det(lam, rp) == pytest.approx(gaussian_tail(lam, 0.0, sd), abs=1e-12)
        assert pd_det(lam, rp) == pytest.approx(gaussian_tail(lam, mean1, sd), abs=1e-12)

    @given(radios)
    def test_midpoint_threshold(self, rp):
        lam = fixed_threshold_det(rp)
        half = math.sqrt(rp.cn * rp.snr) / 2
        assert pf_det(lam, rp) == pytest.approx(float(q(half)), abs=1e-14)
        assert pd_det(lam, rp) == pytest.approx(float(q(-half)), abs=1e-14)
        assert abs(pf_det(lam, rp) + pd_det(lam, rp) - 1.0) <= 1e-12

    def test_lambda_star_value(self):
        rp = RadioParams(snr=1.0, node_count=10, compression_ratio=0.4)
        assert lambda_star_det(rp, CONS) == pytest.approx(2 * (2 - 1.2815515655446004), rel=1e-12)
        assert lambda_star_det(rp, CONS) == pytest.approx(1.43690, abs=1e-5)

    def test_lambda_star_at_half(self):
        rp = RadioParams(snr=0.3, node_count=7, compression_ratio=0.9, noise_variance=2.0)
        lam = lambda_star_det(rp, Constraints(0.1, 0.5))
        assert lam == pytest.approx(rp.noise_variance * rp.cn * rp.snr, rel=1e-14)

    def test_bound_value(self):
        assert cn_bound_det(CONS, SNR_M3) == pytest.approx(13.108, abs=1e-3)


class TestModelIndependent:
    @pytest.mark.parametrize("model", MODELS)
    @settings(max_examples=150)
    @given(rp=radios, cons=constraints)
    def test_threshold_meets_detection_floor(self, model, rp, cons):
        lam = optimal_threshold(model, rp, cons)
        assert abs(detection(model, lam, rp) - cons.min_detection) <= 1e-12

    @pytest.mark.parametrize("model", MODELS)
    @settings(max_examples=150)
    @given(rp=radios, cons=constraints)
    def test_false_alarm_threshold(self, model, rp, cons):
        lam = false_alarm_threshold(model, rp, cons)
        assert abs(false_alarm(model, lam, rp) - cons.max_false_alarm) <= 1e-12

    @pytest.mark.parametrize("model", MODELS)
    @given(snr=st.floats(0.02, 3.0), p=st.integers(10, 400), cons=constraints)
    def test_bound_pins_false_alarm(self, model, snr, p, cons):
        product = cn_bound(model, cons, snr, p)
        # spread the product over enough nodes to keep c <= 1
        n = max(1, math.ceil(product))
        rp = RadioParams(snr=snr, node_count=n, compression_ratio=product / n, samples_per_slot=p)
        lam = optimal_threshold(model, rp, cons)
        assert abs(false_alarm(model, lam, rp) - cons.max_false_alarm) <= 1e-10
        assert abs(detection(model, lam, rp) - cons.min_detection) <= 1e-12

    @pytest.mark.parametrize("model", MODELS)
    @pytest.mark.parametrize("k", [2, 5])
    def test_depends_on_product_only(self, model, k):
        a = RadioParams(snr=SNR_M9, node_count=4, compression_ratio=0.8)
        b = a.with_(node_count=4 * k, compression_ratio=0.8 / k)
        for lam in (0.5, 300.0, 350.0):
            assert false_alarm(model, lam, a) == pytest.approx(false_alarm(model, lam, b), abs=1e-12)
            assert detection(model, lam, a) == pytest.approx(detection(model, lam, b), abs=1e-12)

    @pytest.mark.parametrize("model", MODELS)
    def test_false_alarm_above_target_below_bound(self, model):
        # at the detection-tight threshold P_f falls as c*N grows
        cns = np.linspace(0.5, 40, 200)
        pf = []
        for cn in cns:
            rp = RadioParams(snr=SNR_M9, node_count=40, compression_ratio=cn / 40)
            pf.append(float(operating_point(model, rp, CONS).p_false_alarm))
        assert np.all(np.diff(pf) < 0)

    def test_detection_point_fields(self):
        rp = RadioParams(snr=SNR_M9)
        dp = detection_point(SignalModel.RANDOM, rp, 520.0)
        assert dp.threshold == 520.0
        assert dp.p_false_alarm == pf_random(520.0, rp)
        assert dp.p_detect == pd_random(520.0, rp)
