"""Simulation oracle: determinism, distributional checks, estimator identities."""

import numpy as np
import pytest

from panelpower import (
    CorrStructure,
    DesignKind,
    DesignSpec,
    ErrorModel,
    Estimand,
    EstimatorSpec,
    Family,
    OracleReport,
    SimConfig,
    estimate_cits,
    estimate_did,
    oracle_compare,
    simulate_panel,
    validate_design,
)


def _design(family=Family.DID, P=8, S=(4, 6), mt=(10, 10), mc=(10, 10), N=100):
    if family.is_its:
        mc = tuple(0 for _ in mt)
    spec = DesignSpec(P=P, S=tuple(S), M_T_k=tuple(mt), M_C_k=tuple(mc), N=N)
    return validate_design(spec, EstimatorSpec(family))


def _err(rho=0.4, psi=0.0, kind=DesignKind.CROSS_SECTIONAL, structure=CorrStructure.AR1, icc=0.05):
    return ErrorModel(ICC_theta=icc, rho=rho, corr_structure=structure, design_kind=kind, psi=psi)


def _zero_panel(design, reps=4):
    return [
        {
            "treatment": np.zeros((reps, int(design.M_T_k[k]), design.P)),
            "comparison": np.zeros((reps, int(design.M_C_k[k]), design.P)) if design.M_C_k[k] else None,
        }
        for k in range(design.K)
    ]


class TestSimulation:
    def test_seed_determinism(self):
        cfg = SimConfig(_design(), _err(), replications=50, seed=123)
        p1 = simulate_panel(cfg)
        p2 = simulate_panel(cfg)
        for g1, g2 in zip(p1, p2):
            assert np.array_equal(g1["treatment"], g2["treatment"])
            assert np.array_equal(g1["comparison"], g2["comparison"])
        r1 = oracle_compare(cfg, EstimatorSpec(Family.DID))
        r2 = oracle_compare(cfg, EstimatorSpec(Family.DID))
        assert r1 == r2

    def test_different_seeds_differ(self):
        a = simulate_panel(SimConfig(_design(), _err(), replications=10, seed=1))
        b = simulate_panel(SimConfig(_design(), _err(), replications=10, seed=2))
        assert not np.array_equal(a[0]["treatment"], b[0]["treatment"])

    def test_psi_zero_longitudinal_bit_identical_to_cross_sectional(self):
        cross = SimConfig(_design(), _err(kind=DesignKind.CROSS_SECTIONAL), replications=20, seed=9)
        long0 = SimConfig(_design(), _err(kind=DesignKind.LONGITUDINAL, psi=0.0), replications=20, seed=9)
        pc, pl = simulate_panel(cross), simulate_panel(long0)
        for gc, gl in zip(pc, pl):
            assert np.array_equal(gc["treatment"], gl["treatment"])
            assert np.array_equal(gc["comparison"], gl["comparison"])

    def test_stationary_variance_and_lag_correlations(self):
        # huge N makes the cells essentially the cluster-level process
        design = _design(mt=(1, 1), mc=(1, 1), N=1e12)
        rho = 0.5
        cfg = SimConfig(design, _err(rho=rho, icc=0.5), replications=40_000, seed=11)
        cells = simulate_panel(cfg)[0]["treatment"][:, 0, :]
        per_period_var = cells.var(axis=0, ddof=1)
        assert np.allclose(per_period_var, 0.5, atol=0.02)
        lag1 = np.corrcoef(cells[:, 3], cells[:, 4])[0, 1]
        lag3 = np.corrcoef(cells[:, 2], cells[:, 5])[0, 1]
        assert lag1 == pytest.approx(rho, abs=0.02)
        assert lag3 == pytest.approx(rho**3, abs=0.02)

    def test_zero_rho_uncorrelated(self):
        design = _design(mt=(1, 1), mc=(1, 1), N=1e12)
        cfg = SimConfig(design, _err(rho=0.0, icc=0.5), replications=20_000, seed=13)
        cells = simulate_panel(cfg)[0]["treatment"][:, 0, :]
        lag1 = np.corrcoef(cells[:, 3], cells[:, 4])[0, 1]
        assert abs(lag1) < 3 / np.sqrt(cfg.replications)

    def test_constant_structure_equicorrelated(self):
        design = _design(mt=(1, 1), mc=(1, 1), N=1e12)
        cfg = SimConfig(design, _err(rho=0.4, icc=0.5, structure=CorrStructure.CONSTANT),
                        replications=40_000, seed=17)
        cells = simulate_panel(cfg)[0]["treatment"][:, 0, :]
        lag1 = np.corrcoef(cells[:, 3], cells[:, 4])[0, 1]
        lag5 = np.corrcoef(cells[:, 1], cells[:, 6])[0, 1]
        assert lag1 == pytest.approx(0.4, abs=0.02)
        assert lag5 == pytest.approx(0.4, abs=0.02)

    def test_fractional_cluster_counts_rejected(self):
        spec = DesignSpec(P=8, S=(4, 6), M_T_k=(9.25, 9.25), M_C_k=(9.25, 9.25), N=100)
        design = validate_design(spec, EstimatorSpec(Family.DID))
        with pytest.raises(Exception):
            SimConfig(design, _err(), replications=10, seed=1)


class TestEstimators:
    def test_zero_noise_gives_exact_zero(self):
        design = _design()
        panel = _zero_panel(design)
        assert np.all(estimate_did(panel, design).pooled() == 0.0)
        for variant in ("FULL", "COMMON_SLOPES", "DISCRETE"):
            assert np.all(estimate_cits(panel, design, variant).pooled() == 0.0)

    def test_injected_effect_recovered_exactly(self):
        design = _design()
        delta = 0.37
        panel = _zero_panel(design)
        for k in range(design.K):
            panel[k]["treatment"][:, :, design.B[k]:] += delta
        es = estimate_did(panel, design)
        assert np.allclose(es.pooled(), delta, atol=1e-12)
        assert np.allclose(es.exposure(1), delta, atol=1e-12)
        assert np.allclose(es.calendar(8), delta, atol=1e-12)
        for variant in ("FULL", "COMMON_SLOPES", "DISCRETE"):
            assert np.allclose(estimate_cits(panel, design, variant).pooled(), delta, atol=1e-12)

    def test_shared_linear_trend_is_differenced_out(self):
        design = _design()
        panel = _zero_panel(design)
        trend = 0.8 * np.arange(1, 9)
        for k in range(design.K):
            panel[k]["treatment"] += trend
            panel[k]["comparison"] += trend
        for variant in ("FULL", "COMMON_SLOPES"):
            assert np.allclose(estimate_cits(panel, design, variant).pooled(), 0.0, atol=1e-10)
        assert np.allclose(estimate_did(panel, design).pooled(), 0.0, atol=1e-10)

    def test_its_own_trend_forecast(self):
        # ITS with a perfectly linear treatment path forecasts exactly
        design = _design(Family.ITS_FULL)
        panel = [
            {"treatment": np.tile(0.8 * np.arange(1, 9), (4, int(design.M_T_k[k]), 1)), "comparison": None}
            for k in range(design.K)
        ]
        assert np.allclose(estimate_cits(panel, design, "FULL", its=True).pooled(), 0.0, atol=1e-10)

    def test_pooled_full_equals_pooled_discrete_every_panel(self):
        design = _design()
        cfg = SimConfig(design, _err(), replications=200, seed=21)
        panel = simulate_panel(cfg)
        full = estimate_cits(panel, design, "FULL").pooled()
        disc = estimate_cits(panel, design, "DISCRETE").pooled()
        assert np.allclose(full, disc, atol=1e-12)

    def test_aggregation_orders_agree(self):
        # pooled = calendar-then-pool = exposure-then-pool with group-count weights
        design = _design()
        cfg = SimConfig(design, _err(), replications=100, seed=23)
        panel = simulate_panel(cfg)
        es = estimate_did(panel, design)
        pooled = es.pooled()
        by_calendar = np.zeros_like(pooled)
        wsum = 0
        for q in range(min(design.S), design.P + 1):
            n_q = sum(1 for s in design.S if q >= s)
            by_calendar += n_q * es.calendar(q)
            wsum += n_q
        assert np.allclose(pooled, by_calendar / wsum, atol=1e-12)
        by_exposure = np.zeros_like(pooled)
        wsum = 0
        for l in range(1, max(design.A) + 1):
            n_l = sum(1 for a in design.A if l <= a)
            by_exposure += n_l * es.exposure(l)
            wsum += n_l
        assert np.allclose(pooled, by_exposure / wsum, atol=1e-12)

    def test_unbiasedness(self):
        design = _design()
        cfg = SimConfig(design, _err(), replications=4000, seed=29)
        for fam in (Family.DID, Family.CITS_FULL, Family.CITS_COMMON_SLOPES):
            rep = oracle_compare(cfg, EstimatorSpec(fam))
            assert abs(rep.mean_estimate) < 4 * rep.mean_se, fam


class TestOracleCompare:
    def test_close_to_closed_form_smoke(self):
        cfg = SimConfig(_design(), _err(), replications=4000, seed=31)
        rep = oracle_compare(cfg, EstimatorSpec(Family.DID))
        assert rep.relative_error < 0.10
        assert abs(rep.empirical_variance - rep.closed_form) < 4 * rep.monte_carlo_se

    def test_report_shape(self):
        cfg = SimConfig(_design(), _err(), replications=500, seed=37)
        rep = oracle_compare(cfg, EstimatorSpec(Family.CITS_FULL, Estimand.exposure(1)))
        assert isinstance(rep, OracleReport)
        d = rep.to_dict()
        assert {"empirical_variance", "closed_form", "relative_error", "monte_carlo_se"} <= set(d)
        assert rep.monte_carlo_se > 0

    def test_pure_individual_noise(self):
        # clustering off: empirical variance matches the pure eps closed form
        cfg = SimConfig(_design(N=10), _err(rho=0.9, icc=0.0), replications=6000, seed=41)
        rep = oracle_compare(cfg, EstimatorSpec(Family.DID))
        assert rep.relative_error < 0.08

    def test_individual_level_path_matches_aggregate(self):
        design = _design(mt=(6, 6), mc=(6, 6), N=20)
        err = _err(kind=DesignKind.LONGITUDINAL, psi=0.4)
        agg = oracle_compare(SimConfig(design, err, replications=3000, seed=43), EstimatorSpec(Family.DID))
        ind = oracle_compare(SimConfig(design, err, replications=3000, seed=43, aggregate_to_cluster=False),
                             EstimatorSpec(Family.DID))
        assert agg.relative_error < 0.12
        assert ind.relative_error < 0.12
