"""Monte Carlo oracle: simulate the generating model, apply the estimators,
and compare empirical estimator variances to the closed forms.

Simulation draws cluster-time cell means directly by default: the mean of N
iid individual AR(1) processes is exactly a Gaussian AR(1) with variance
sigma_eps^2/N and the same autocorrelation, so the aggregated path is exact
for both cross-sectional and longitudinal designs (individual-level
simulation is kept behind ``aggregate_to_cluster=False`` for verification).
The true treatment effect is zero and fixed effects are omitted — every
implemented estimator differences them out — so the sampling variance is
the only signal.

RNG layout: one ``numpy.random.default_rng([seed, group, arm])`` stream per
(timing group, arm), with theta drawn before eps, so groups can be
simulated in parallel without changing results.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .design import (
    CorrStructure,
    ErrorModel,
    Estimand,
    EstimandKind,
    EstimatorSpec,
    Family,
    ValidatedDesign,
)
from .errors import PanelPowerError
from .variance import compute_variance

__all__ = ["SimConfig", "OracleReport", "simulate_panel", "estimate_did", "estimate_cits", "oracle_compare"]


@dataclass(frozen=True)
class SimConfig:
    design: ValidatedDesign
    err: ErrorModel
    replications: int
    seed: int
    aggregate_to_cluster: bool = True

    def __post_init__(self):
        if self.replications < 2:
            raise PanelPowerError("P_OUT_OF_RANGE", "need at least 2 replications", "replications")
        for name, counts in (("M_T_k", self.design.M_T_k), ("M_C_k", self.design.M_C_k)):
            for m in counts:
                if abs(m - round(m)) > 1e-9:
                    raise PanelPowerError("EMPTY_GROUP", f"simulation needs integer cluster counts, got {name}={m}", name)


@dataclass(frozen=True)
class OracleReport:
    """Empirical-vs-closed-form comparison for one estimator/estimand."""

    family: str
    estimand: dict
    replications: int
    seed: int
    empirical_variance: float
    closed_form: float
    relative_error: float
    monte_carlo_se: float
    mean_estimate: float
    mean_se: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def _ar1_path(rng: np.random.Generator, shape: tuple[int, ...], times: np.ndarray,
              corr: float, marginal_var: float) -> np.ndarray:
    """Stationary AR(1) over possibly uneven times; last axis is time."""
    P = len(times)
    out = np.empty(shape + (P,))
    sd = math.sqrt(marginal_var)
    out[..., 0] = rng.standard_normal(shape) * sd
    for t in range(1, P):
        gap = float(times[t] - times[t - 1])
        r = _corr_pow(corr, gap)
        innov_sd = math.sqrt(marginal_var * (1.0 - r * r))
        out[..., t] = r * out[..., t - 1] + rng.standard_normal(shape) * innov_sd
    return out


def _corr_pow(corr: float, gap: float) -> float:
    if corr == 0.0:
        return 0.0
    if corr > 0.0:
        return corr**gap
    if abs(gap - round(gap)) > 1e-12:
        raise PanelPowerError("NUMERIC_GUARD", "negative autocorrelation requires integer time gaps", "rho")
    return corr ** int(round(gap))


def _equicorrelated(rng: np.random.Generator, shape: tuple[int, ...], P: int,
                    corr: float, marginal_var: float) -> np.ndarray:
    cov = np.full((P, P), corr * marginal_var)
    np.fill_diagonal(cov, marginal_var)
    try:
        chol = np.linalg.cholesky(cov)
    except np.linalg.LinAlgError:
        raise PanelPowerError("NUMERIC_GUARD", f"constant correlation {corr} is not positive definite for P={P}")
    z = rng.standard_normal(shape + (P,))
    return z @ chol.T


def _simulate_arm(rng: np.random.Generator, reps: int, m: int, cfg: SimConfig) -> np.ndarray:
    """Cluster-time cell means, shape (reps, m, P)."""
    design, err = cfg.design, cfg.err
    times = np.asarray(design.times)
    P = design.P
    s_th = err.sigma_theta2
    s_ep = err.sigma_eps2
    psi = err.effective_psi
    # The equicorrelated draw only matters for nonzero constant correlation;
    # at 0 the AR(1) recursion produces the identical iid stream, which keeps
    # psi=0 longitudinal panels bit-identical to cross-sectional ones.
    const_theta = err.corr_structure is CorrStructure.CONSTANT and err.rho != 0.0
    const_eps = err.corr_structure is CorrStructure.CONSTANT and psi != 0.0
    if s_th > 0:
        theta = (_equicorrelated(rng, (reps, m), P, err.rho, s_th) if const_theta
                 else _ar1_path(rng, (reps, m), times, err.rho, s_th))
    else:
        theta = np.zeros((reps, m, P))
    if cfg.aggregate_to_cluster:
        cell_var = s_ep / design.N
        eps = (_equicorrelated(rng, (reps, m), P, psi, cell_var) if const_eps
               else _ar1_path(rng, (reps, m), times, psi, cell_var))
        return theta + eps
    n = int(round(design.N))
    cells = np.empty((reps, m, P))
    block = max(1, int(2_000_000 // max(1, m * n * P)))
    for start in range(0, reps, block):
        stop = min(reps, start + block)
        ind = (_equicorrelated(rng, (stop - start, m, n), P, psi, s_ep) if const_eps
               else _ar1_path(rng, (stop - start, m, n), times, psi, s_ep))
        cells[start:stop] = ind.mean(axis=2)
    return theta + cells


def simulate_panel(cfg: SimConfig) -> list[dict]:
    """Simulated cluster-time means per timing group.

    Returns one entry per group: {"treatment": (reps, M_Tk, P), "comparison":
    (reps, M_Ck, P) or None}.
    """
    design = cfg.design
    panel = []
    for k in range(design.K):
        group = {}
        for arm_idx, (name, count) in enumerate((("treatment", design.M_T_k[k]), ("comparison", design.M_C_k[k]))):
            m = int(round(count))
            if m == 0:
                group[name] = None
                continue
            rng = np.random.default_rng([cfg.seed, k, arm_idx])
            group[name] = _simulate_arm(rng, cfg.replications, m, cfg)
        panel.append(group)
    return panel


class EstimateSet:
    """Per-(group, post-period) estimates with the standard aggregations."""

    def __init__(self, design: ValidatedDesign, per_kq: list[np.ndarray]):
        self._design = design
        self.per_kq = per_kq  # one (reps, A_k) array per group

    def pooled(self) -> np.ndarray:
        A = self._design.A
        total = sum(arr.sum(axis=1) for arr in self.per_kq)
        return total / sum(A)

    def exposure(self, l: int) -> np.ndarray:
        arrs = [arr[:, l - 1] for arr, a in zip(self.per_kq, self._design.A) if l <= a]
        if not arrs:
            raise PanelPowerError("NO_GROUP_INCLUDED", f"no timing group observed at exposure {l}", "estimand")
        return sum(arrs) / len(arrs)

    def calendar(self, q: int) -> np.ndarray:
        arrs = []
        for arr, s in zip(self.per_kq, self._design.S):
            if q >= s:
                arrs.append(arr[:, q - s])
        if not arrs:
            raise PanelPowerError("NO_GROUP_INCLUDED", f"period {q} is not a post-period for any group", "estimand")
        return sum(arrs) / len(arrs)

    def for_estimand(self, estimand: Estimand) -> np.ndarray:
        if estimand.kind is EstimandKind.POOLED:
            return self.pooled()
        if estimand.kind is EstimandKind.EXPOSURE:
            return self.exposure(estimand.l)
        return self.calendar(estimand.q)


def _arm_did(ym: np.ndarray, B: int) -> np.ndarray:
    """Post-period deviations from the pre-period mean, (reps, A)."""
    return ym[:, B:] - ym[:, :B].mean(axis=1, keepdims=True)


def _fit_line(y: np.ndarray, t: np.ndarray, predict_at: np.ndarray) -> np.ndarray:
    """Per-replication OLS line through (t, y) evaluated at predict_at."""
    tc = t - t.mean()
    denom = float((tc**2).sum())
    if denom <= 0:
        raise PanelPowerError("SINGULAR_FIT", "coincident measurement times; cannot fit a trendline")
    slope = (y * tc).sum(axis=1) / denom
    intercept = y.mean(axis=1)
    return intercept[:, None] + slope[:, None] * (predict_at - t.mean())[None, :]


def _arm_cits(ym: np.ndarray, pre_t: np.ndarray, post_t: np.ndarray, variant: str) -> np.ndarray:
    """Forecast errors of the post outcomes vs the pre-trendline, (reps, A)."""
    B = len(pre_t)
    pre, post = ym[:, :B], ym[:, B:]
    pred_pre_line = _fit_line(pre, pre_t, post_t)
    if variant == "FULL":
        pred_post_line = _fit_line(post, post_t, post_t)
        return pred_post_line - pred_pre_line
    if variant == "DISCRETE":
        return post - pred_pre_line
    # COMMON_SLOPES: shared slope, separate intercepts; the contrast is the
    # intercept jump, constant over the post-period.
    t_all = np.concatenate([pre_t, post_t])
    seg_mean = np.concatenate([np.full(B, pre_t.mean()), np.full(len(post_t), post_t.mean())])
    z = t_all - seg_mean
    denom = float((z**2).sum())
    slope = (ym * z).sum(axis=1) / denom
    jump = post.mean(axis=1) - pre.mean(axis=1) - slope * (post_t.mean() - pre_t.mean())
    return jump[:, None] * np.ones((1, len(post_t)))


def estimate_did(panel: list[dict], design: ValidatedDesign) -> EstimateSet:
    """DID estimates per (group, post-period): treated change minus comparison change."""
    per_kq = []
    for k in range(design.K):
        B = design.B[k]
        t_arm = _arm_did(panel[k]["treatment"].mean(axis=1), B)
        c = panel[k]["comparison"]
        c_arm = _arm_did(c.mean(axis=1), B) if c is not None else 0.0
        per_kq.append(t_arm - c_arm)
    return EstimateSet(design, per_kq)


def estimate_cits(panel: list[dict], design: ValidatedDesign, variant: str = "FULL",
                  its: bool = False) -> EstimateSet:
    """CITS/ITS estimates per (group, post-period) from per-arm trendline fits."""
    if variant not in ("FULL", "COMMON_SLOPES", "DISCRETE"):
        raise PanelPowerError("PERIOD_RANGE", f"unknown CITS variant {variant!r}", "family")
    per_kq = []
    for k in range(design.K):
        pre_t = np.asarray(design.pre_times(k))
        post_t = np.asarray(design.post_times(k))
        t_arm = _arm_cits(panel[k]["treatment"].mean(axis=1), pre_t, post_t, variant)
        c = panel[k]["comparison"]
        if its or c is None:
            c_arm = 0.0
        else:
            c_arm = _arm_cits(c.mean(axis=1), pre_t, post_t, variant)
        per_kq.append(t_arm - c_arm)
    return EstimateSet(design, per_kq)


_VARIANT_BY_FAMILY = {
    Family.DID: None,
    Family.CITS_FULL: "FULL",
    Family.ITS_FULL: "FULL",
    Family.CITS_DISCRETE: "DISCRETE",
    Family.ITS_DISCRETE: "DISCRETE",
    Family.CITS_COMMON_SLOPES: "COMMON_SLOPES",
    Family.ITS_COMMON_SLOPES: "COMMON_SLOPES",
}


def estimates_for(cfg: SimConfig, est: EstimatorSpec) -> np.ndarray:
    """Per-replication estimates of the requested estimator/estimand."""
    panel = simulate_panel(cfg)
    if est.family is Family.DID:
        es = estimate_did(panel, cfg.design)
    else:
        es = estimate_cits(panel, cfg.design, _VARIANT_BY_FAMILY[est.family], its=est.family.is_its)
    return es.for_estimand(est.estimand)


def oracle_compare(cfg: SimConfig, est: EstimatorSpec) -> OracleReport:
    """Empirical estimator variance across replications vs the closed form.

    The Monte Carlo standard error of the variance estimate comes from the
    fourth-moment formula, so tolerances can be stated in SE units.
    Covariate adjustment is not simulated; the comparison strips it.
    """
    core = EstimatorSpec(family=est.family, estimand=est.estimand)
    series = estimates_for(cfg, core)
    n = len(series)
    emp = float(series.var(ddof=1))
    centered = series - series.mean()
    m4 = float((centered**4).mean())
    var_of_var = (m4 - (n - 3) / (n - 1) * emp * emp) / n
    closed = compute_variance(cfg.design, cfg.err, core).total
    return OracleReport(
        family=est.family.value,
        estimand=est.estimand.to_dict(),
        replications=n,
        seed=cfg.seed,
        empirical_variance=emp,
        closed_form=closed,
        relative_error=abs(emp - closed) / closed if closed > 0 else math.inf,
        monte_carlo_se=math.sqrt(max(var_of_var, 0.0)),
        mean_estimate=float(series.mean()),
        mean_se=math.sqrt(emp / n),
    )
