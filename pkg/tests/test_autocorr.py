"""Averaged autocorrelation terms against brute-force loop oracles."""

import random

import pytest

from panelpower import CorrStructure, DesignSpec, EstimatorSpec, Family, validate_design
from panelpower.autocorr import (
    basic_averages,
    point_in_time_centered_pre_cross,
    point_in_time_pre_post,
    trend_weighted_terms,
)
from panelpower.errors import PanelPowerError

import oracles

AR1 = CorrStructure.AR1
CONST = CorrStructure.CONSTANT


def _design(P=8, S=(4,), times=None, family=Family.DID):
    mt = tuple(5.0 for _ in S)
    return validate_design(DesignSpec(P=P, S=S, M_T_k=mt, M_C_k=mt, N=10, times=times), EstimatorSpec(family))


class TestFrozenValues:
    def test_pre_average_even_times(self):
        # pre window {1,2,3}: pairs at gaps 1,2,1 -> (2*rho + rho^2)/3
        d = _design()
        rho = 0.5
        pre, post, cross = basic_averages(d, 0, rho, AR1)
        assert pre == pytest.approx((2 * rho + rho**2) / 3, abs=1e-15)
        assert pre == pytest.approx(0.4166666666666667, abs=1e-12)

    def test_point_in_time_first_and_last(self):
        d = _design()
        rho = 0.5
        # l=1 -> period 4: gaps 3,2,1
        assert point_in_time_pre_post(d, 0, rho, AR1, 4) == pytest.approx((rho**3 + rho**2 + rho) / 3, abs=1e-15)
        assert point_in_time_pre_post(d, 0, rho, AR1, 4) == pytest.approx(0.2916666666666667, abs=1e-12)
        # l=5 -> period 8: gaps 7,6,5 (decays with forecast distance)
        assert point_in_time_pre_post(d, 0, rho, AR1, 8) == pytest.approx((rho**7 + rho**6 + rho**5) / 3, abs=1e-15)
        assert point_in_time_pre_post(d, 0, rho, AR1, 8) == pytest.approx(0.018229166666666668, abs=1e-12)
        assert point_in_time_pre_post(d, 0, rho, AR1, 8) < point_in_time_pre_post(d, 0, rho, AR1, 4)

    def test_pre1_centered_pairs(self):
        # pre times (1,2,3) centered to (-1,0,1): only the (-1)(1)rho^2 pair survives
        d = _design()
        rho = 0.5
        t = trend_weighted_terms(d, 0, rho, AR1)
        assert t.rho_pre1 == pytest.approx(-(rho**2) / 3, abs=1e-15)
        assert t.rho_pre1 == pytest.approx(-0.08333333333333333, abs=1e-12)


class TestTrivialCases:
    def test_zero_rho_kills_everything(self):
        d = _design(P=10, S=(5, 7), times=(1, 2, 4, 4.5, 6, 7, 9, 10, 11.5, 13))
        for k in range(2):
            assert basic_averages(d, k, 0.0, AR1) == (0.0, 0.0, 0.0)
            t = trend_weighted_terms(d, k, 0.0, AR1)
            for name, value in t.to_dict().items():
                assert value == pytest.approx(0.0, abs=1e-15), name

    def test_constant_structure_averages_to_rho(self):
        d = _design(P=8, S=(4, 6))
        for k in range(2):
            pre, post, cross = basic_averages(d, k, 0.4, CONST)
            assert pre == pytest.approx(0.4, abs=1e-15)
            assert post == pytest.approx(0.4, abs=1e-15)
            assert cross == pytest.approx(0.4, abs=1e-15)

    def test_trend_cross_terms_vanish_when_even_or_constant(self):
        # the intercept-slope covariance weights sum to zero against constant
        # correlations or evenly spaced windows
        even = _design(P=10, S=(5,), family=Family.CITS_FULL)
        t = trend_weighted_terms(even, 0, 0.6, AR1)
        assert t.rho_pre2 == pytest.approx(0.0, abs=1e-14)
        assert t.rho_post2 == pytest.approx(0.0, abs=1e-14)
        uneven = _design(P=10, S=(5,), times=(1, 2, 4, 7, 8, 9, 13, 14, 18, 19), family=Family.CITS_FULL)
        t = trend_weighted_terms(uneven, 0, 0.6, CONST)
        assert t.rho_pre2 == pytest.approx(0.0, abs=1e-14)
        assert t.rho_post2 == pytest.approx(0.0, abs=1e-14)
        t = trend_weighted_terms(uneven, 0, 0.6, AR1)
        assert abs(t.rho_pre2) > 1e-6  # uneven AR(1) genuinely nonzero

    def test_single_period_windows_define_zero(self):
        d = _design(P=3, S=(2,))
        pre, post, cross = basic_averages(d, 0, 0.7, AR1)
        assert pre == 0.0
        d2 = _design(P=3, S=(3,))
        pre, post, cross = basic_averages(d2, 0, 0.7, AR1)
        assert post == 0.0

    def test_not_post_period(self):
        d = _design()
        with pytest.raises(PanelPowerError) as exc:
            point_in_time_pre_post(d, 0, 0.5, AR1, 2)
        assert exc.value.code == "NOT_POST_PERIOD"

    def test_degenerate_trend_window(self):
        d = _design(P=3, S=(2,))
        with pytest.raises(PanelPowerError) as exc:
            trend_weighted_terms(d, 0, 0.5, AR1)
        assert exc.value.code == "DEGENERATE_PERIOD"


class TestBruteForceAgreement:
    def test_random_designs(self):
        rng = random.Random(20240817)
        for trial in range(40):
            P = rng.randint(6, 14)
            s = rng.randint(4, P - 2)
            uneven = rng.random() < 0.5
            times = None
            if uneven:
                gaps = [rng.choice([0.5, 1.0, 1.5, 2.0, 3.0]) for _ in range(P - 1)]
                acc = [1.0]
                for g in gaps:
                    acc.append(acc[-1] + g)
                times = tuple(acc)
            structure = AR1 if rng.random() < 0.7 else CONST
            rho = rng.uniform(-0.2, 0.99) if (structure is AR1 and not uneven) else rng.uniform(0.0, 0.99)
            d = _design(P=P, S=(s,), times=times, family=Family.CITS_FULL)
            pre = list(d.pre_times(0))
            post = list(d.post_times(0))
            st = structure.value
            got_pre, got_post, got_cross = basic_averages(d, 0, rho, structure)
            assert got_pre == pytest.approx(oracles.bf_rho_pre(pre, rho, st), abs=1e-12)
            assert got_post == pytest.approx(oracles.bf_rho_post(post, rho, st), abs=1e-12)
            assert got_cross == pytest.approx(oracles.bf_rho_pre_post(pre, post, rho, st), abs=1e-12)
            t = trend_weighted_terms(d, 0, rho, structure)
            assert t.rho_pre1 == pytest.approx(oracles.bf_rho_pre1(pre, rho, st), abs=1e-11)
            assert t.rho_post1 == pytest.approx(oracles.bf_rho_pre1(post, rho, st), abs=1e-11)
            assert t.rho_pre2 == pytest.approx(oracles.bf_rho_pre2(pre, rho, st), abs=1e-11)
            assert t.rho_post2 == pytest.approx(oracles.bf_rho_pre2(post, rho, st), abs=1e-11)
            assert t.rho_pre_post1 == pytest.approx(oracles.bf_rho_pre_post1(pre, post, rho, st), abs=1e-11)
            assert t.rho_pre_post2 == pytest.approx(oracles.bf_rho_pre_post2(pre, post, rho, st), abs=1e-11)
            assert t.rho_pre_post3 == pytest.approx(oracles.bf_rho_pre_post1(pre, post, rho, st), abs=1e-11)
            assert t.rho_pre_post4 == pytest.approx(oracles.bf_rho_pre_post4(pre, post, rho, st), abs=1e-11)
            A = d.A[0]
            tms = list(d.times)
            assert t.rho_full1 == pytest.approx(oracles.bf_rho_full1(tms, A, rho, st), abs=1e-11)
            assert t.rho_full2 == pytest.approx(oracles.bf_rho_full2(tms, A, rho, st), abs=1e-11)
            assert t.rho_full3 == pytest.approx(oracles.bf_rho_full3(tms, rho, st), abs=1e-11)
            q = rng.randint(s, P)
            tq = d.times[q - 1]
            assert point_in_time_pre_post(d, 0, rho, structure, q) == pytest.approx(
                oracles.bf_rho_at(pre, tq, rho, st), abs=1e-12)

    def test_bounded_at_high_rho(self):
        for S in [(4, 6), (4, 8), (6, 10), (8, 10)]:
            P = max(S) + 4
            d = _design(P=P, S=S, family=Family.CITS_FULL)
            for k in range(len(S)):
                t = trend_weighted_terms(d, k, 0.99, AR1)
                for name, value in t.to_dict().items():
                    assert abs(value) < 1e3, (name, S)
                pre, post, cross = basic_averages(d, k, 0.99, AR1)
                assert -1 < pre < 1 and -1 < post < 1 and -1 < cross < 1

    def test_centered_cross_matches_loops(self):
        d = _design(P=9, S=(5,), times=(1, 2, 2.5, 4, 6, 7.5, 8, 10, 12), family=Family.CITS_FULL)
        pre = list(d.pre_times(0))
        rho = 0.6
        for q in (5, 7, 9):
            tq = d.times[q - 1]
            m = sum(pre) / len(pre)
            want = sum((b - m) * rho ** (tq - b) for b in pre) / len(pre)
            assert point_in_time_centered_pre_cross(d, 0, rho, AR1, q) == pytest.approx(want, abs=1e-12)
