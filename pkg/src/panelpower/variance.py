"""Closed-form estimator variances with itemized breakdowns.

All variances are in squared effect-size units (total error variance
normalized to 1). Each timing group contributes a design bracket f_k(c)
evaluated at the cluster-level autocorrelation (theta block) and at the
individual-level autocorrelation (eps block; 0 for cross-sectional
designs), so every family shares one assembly path:

    per_group_k = (1/M_Tk + 1/M_Ck) * [sigma_theta2 * f_k(rho)
                                       + sigma_eps2/N * f_k(psi_eff)]

Pooled estimands aggregate per-group contributions with weights A_k;
point-in-time estimands use 0/1 inclusion indicators.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .autocorr import (
    basic_averages,
    point_in_time_centered_pre_cross,
    point_in_time_pre_post,
    trend_weighted_terms,
)
from .design import (
    Covariates,
    CorrStructure,
    ErrorModel,
    Estimand,
    EstimandKind,
    EstimatorSpec,
    Family,
    TimeGeometry,
    ValidatedDesign,
    time_geometry,
)
from .errors import PanelPowerError

__all__ = [
    "VarianceBreakdown",
    "var_did",
    "var_cits_full",
    "var_cits_common_slopes",
    "apply_covariates",
    "compute_variance",
]

_NEG_TOL = 1e-9


@dataclass(frozen=True)
class VarianceBreakdown:
    """Total variance plus the named intermediates used to build it."""

    total: float
    per_group: tuple[float, ...]
    weights: tuple[float, ...]
    terms: tuple[dict, ...]

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "per_group": list(self.per_group),
            "weights": list(self.weights),
            "terms": [dict(t) for t in self.terms],
        }


def _assemble(
    design: ValidatedDesign,
    err: ErrorModel,
    weights: list[float],
    brackets: list[tuple[float, float, dict] | None],
    its: bool,
) -> VarianceBreakdown:
    """Combine per-group brackets into the weighted total."""
    s_th = err.sigma_theta2
    s_ep = err.sigma_eps2 / design.N
    per_group, terms = [], []
    for k, entry in enumerate(brackets):
        if entry is None:
            per_group.append(0.0)
            terms.append({"included": False})
            continue
        f_rho, f_psi, detail = entry
        inv = 1.0 / design.M_T_k[k] + (0.0 if its else 1.0 / design.M_C_k[k])
        theta_block = s_th * f_rho
        eps_block = s_ep * f_psi
        per_group.append(inv * (theta_block + eps_block))
        detail = dict(detail)
        detail.update({
            "included": True,
            "theta_block": theta_block,
            "eps_block": eps_block,
            "cluster_inverse": inv,
        })
        terms.append(detail)
    wsum = sum(weights)
    if wsum <= 0:
        raise PanelPowerError("NO_GROUP_INCLUDED", "no timing group satisfies the inclusion indicator", "estimand")
    total = sum(w * w * v for w, v in zip(weights, per_group)) / wsum**2
    if total < -_NEG_TOL:
        raise PanelPowerError("NUMERIC_GUARD", f"variance came out negative ({total}); formula bug")
    total = max(total, 0.0)
    return VarianceBreakdown(
        total=float(total),
        per_group=tuple(float(v) for v in per_group),
        weights=tuple(float(w) for w in weights),
        terms=tuple(terms),
    )


def _did_pooled_bracket(design: ValidatedDesign, k: int, c: float, structure: CorrStructure) -> float:
    A, B = design.A[k], design.B[k]
    r_pre, r_post, r_cross = basic_averages(design, k, c, structure)
    return (1 / A + 1 / B + (A - 1) / A * r_post + (B - 1) / B * r_pre - 2 * r_cross)


def _did_point_bracket(design: ValidatedDesign, k: int, c: float, structure: CorrStructure, period: int) -> float:
    B = design.B[k]
    r_pre, _, _ = basic_averages(design, k, c, structure)
    r_at = point_in_time_pre_post(design, k, c, structure, period)
    return 1 + 1 / B + (B - 1) / B * r_pre - 2 * r_at


def _cits_pooled_extra(
    design: ValidatedDesign, geom: TimeGeometry, k: int, c: float, structure: CorrStructure
) -> tuple[float, dict]:
    """Term1 + Term2 - Term3 of the pooled trendline correction."""
    B = design.B[k]
    d = geom.mean_time_post_k - geom.mean_time_pre_k
    sp = geom.SSQT_pre_k
    t = trend_weighted_terms(design, k, c, structure)
    term1 = d * d * (1 / sp + (B - 1) * B * t.rho_pre1 / sp**2)
    term2 = 2 * d * B * t.rho_pre2 / sp
    term3 = 2 * d * B * t.rho_pre_post1 / sp
    return term1 + term2 - term3, {"Term1": term1, "Term2": term2, "Term3": term3}


def _cits_point_extra(
    design: ValidatedDesign, geom: TimeGeometry, k: int, c: float, structure: CorrStructure, period: int
) -> tuple[float, dict]:
    """The nine point-in-time trendline terms (post- and pre-forecast errors)."""
    A, B = design.A[k], design.B[k]
    tq = design.times[period - 1]
    u = tq - geom.mean_time_post_k
    e = tq - geom.mean_time_pre_k
    sa, sp = geom.SSQT_post_k, geom.SSQT_pre_k
    t = trend_weighted_terms(design, k, c, structure)
    t1 = u * u * (1 / sa + (A - 1) * A * t.rho_post1 / sa**2)
    t2 = e * e * (1 / sp + (B - 1) * B * t.rho_pre1 / sp**2)
    t3 = 2 * u * A * t.rho_post2 / sa
    t4 = 2 * e * B * t.rho_pre2 / sp
    t5 = 2 * u * A * t.rho_pre_post2 / sa
    t6 = 2 * e * B * t.rho_pre_post3 / sp
    t7 = 2 * e * u * A * B * t.rho_pre_post4 / (sa * sp)
    extra = t1 + t2 + t3 + t4 - t5 - t6 - t7
    detail = {"Term1e": t1, "Term2e": t2, "Term3e": t3, "Term4e": t4,
              "Term5e": t5, "Term6e": t6, "Term7e": t7}
    return extra, detail


def _discrete_point_extra(
    design: ValidatedDesign, geom: TimeGeometry, k: int, c: float, structure: CorrStructure, period: int
) -> tuple[float, dict]:
    """Pooled trendline correction evaluated with the post-window collapsed to one period."""
    B = design.B[k]
    tq = design.times[period - 1]
    d = tq - geom.mean_time_pre_k
    sp = geom.SSQT_pre_k
    t = trend_weighted_terms(design, k, c, structure)
    cross = point_in_time_centered_pre_cross(design, k, c, structure, period)
    term1 = d * d * (1 / sp + (B - 1) * B * t.rho_pre1 / sp**2)
    term2 = 2 * d * B * t.rho_pre2 / sp
    term3 = 2 * d * B * cross / sp
    return term1 + term2 - term3, {"Term1": term1, "Term2": term2, "Term3": term3}


def _cs_bracket(
    design: ValidatedDesign, geom: TimeGeometry, k: int, c: float, structure: CorrStructure
) -> tuple[float, dict]:
    A, B = design.A[k], design.B[k]
    P = design.P
    d = geom.mean_time_post_k - geom.mean_time_pre_k
    W = geom.SSQT_pre_k + geom.SSQT_post_k
    ratio = geom.SSQT_full / W
    c1 = 1 / A + 1 / B
    t = trend_weighted_terms(design, k, c, structure)
    term1 = ratio
    term2 = c1 * P * (P - 1) * ratio**2 * t.rho_full1
    term3 = 2 * P * (P - 1) * ratio * (d / W) * t.rho_full2
    term4 = A * B * (P - 1) * (d / W) ** 2 * t.rho_full3
    detail = {"Term1CS": term1, "Term2CS": term2, "Term3CS": term3, "Term4CS": term4}
    return c1 * (term1 + term2 - term3 + term4), detail


def _point_periods(design: ValidatedDesign, estimand: Estimand) -> list[int | None]:
    """Post-period label per group for a point-in-time estimand (None = excluded)."""
    out: list[int | None] = []
    for k in range(design.K):
        if estimand.kind is EstimandKind.EXPOSURE:
            if estimand.l <= design.A[k]:
                out.append(estimand.l + design.S[k] - 1)
            else:
                out.append(None)
        else:
            out.append(estimand.q if estimand.q >= design.S[k] else None)
    return out


def var_did(design: ValidatedDesign, err: ErrorModel, estimand: Estimand) -> VarianceBreakdown:
    """Variance of the DID estimator (pooled, exposure-time, or calendar-time)."""
    st = err.corr_structure
    psi = err.effective_psi
    if estimand.kind is EstimandKind.POOLED:
        weights = [float(a) for a in design.A]
        brackets = []
        for k in range(design.K):
            f_rho = _did_pooled_bracket(design, k, err.rho, st)
            f_psi = _did_pooled_bracket(design, k, psi, st)
            brackets.append((f_rho, f_psi, {}))
        return _assemble(design, err, weights, brackets, its=False)
    periods = _point_periods(design, estimand)
    weights = [0.0 if p is None else 1.0 for p in periods]
    brackets = []
    for k, p in enumerate(periods):
        if p is None:
            brackets.append(None)
            continue
        f_rho = _did_point_bracket(design, k, err.rho, st, p)
        f_psi = _did_point_bracket(design, k, psi, st, p)
        brackets.append((f_rho, f_psi, {"period": p}))
    return _assemble(design, err, weights, brackets, its=False)


def var_cits_full(
    design: ValidatedDesign, err: ErrorModel, estimand: Estimand,
    its: bool = False, discrete: bool = False,
) -> VarianceBreakdown:
    """Variance of the fully-interacted (or discrete-indicator) CITS/ITS estimator.

    The pooled variance is shared by the fully-interacted and discrete
    variants; point-in-time variances differ (the discrete variant has no
    post-period trendline to forecast from).
    """
    its = its or design.family.is_its
    st = err.corr_structure
    psi = err.effective_psi
    geos = time_geometry(design)
    if estimand.kind is EstimandKind.POOLED:
        weights = [float(a) for a in design.A]
        brackets = []
        for k in range(design.K):
            ex_r, detail = _cits_pooled_extra(design, geos[k], k, err.rho, st)
            ex_p, _ = _cits_pooled_extra(design, geos[k], k, psi, st)
            f_rho = _did_pooled_bracket(design, k, err.rho, st) + ex_r
            f_psi = _did_pooled_bracket(design, k, psi, st) + ex_p
            brackets.append((f_rho, f_psi, detail))
        return _assemble(design, err, weights, brackets, its=its)
    periods = _point_periods(design, estimand)
    weights = [0.0 if p is None else 1.0 for p in periods]
    brackets = []
    for k, p in enumerate(periods):
        if p is None:
            brackets.append(None)
            continue
        if discrete:
            ex_r, detail = _discrete_point_extra(design, geos[k], k, err.rho, st, p)
            ex_p, _ = _discrete_point_extra(design, geos[k], k, psi, st, p)
            f_rho = _did_point_bracket(design, k, err.rho, st, p) + ex_r
            f_psi = _did_point_bracket(design, k, psi, st, p) + ex_p
        else:
            ex_r, detail = _cits_point_extra(design, geos[k], k, err.rho, st, p)
            ex_p, _ = _cits_point_extra(design, geos[k], k, psi, st, p)
            f_rho = _did_pooled_bracket(design, k, err.rho, st) + ex_r
            f_psi = _did_pooled_bracket(design, k, psi, st) + ex_p
        detail = dict(detail)
        detail["period"] = p
        brackets.append((f_rho, f_psi, detail))
    return _assemble(design, err, weights, brackets, its=its)


def var_cits_common_slopes(
    design: ValidatedDesign, err: ErrorModel, estimand: Estimand, its: bool = False
) -> VarianceBreakdown:
    """Variance of the common-slopes CITS/ITS estimator.

    The per-group estimator is constant over the post-period, so pooled and
    point-in-time versions share the bracket; only the aggregation weights
    change (A_k for pooled, inclusion indicators for point-in-time).
    """
    its = its or design.family.is_its
    st = err.corr_structure
    psi = err.effective_psi
    geos = time_geometry(design)
    if estimand.kind is EstimandKind.POOLED:
        weights = [float(a) for a in design.A]
    else:
        periods = _point_periods(design, estimand)
        weights = [0.0 if p is None else 1.0 for p in periods]
    brackets = []
    for k in range(design.K):
        f_rho, detail = _cs_bracket(design, geos[k], k, err.rho, st)
        f_psi, _ = _cs_bracket(design, geos[k], k, psi, st)
        brackets.append((f_rho, f_psi, detail))
    return _assemble(design, err, weights, brackets, its=its)


def apply_covariates(vb: VarianceBreakdown, cov: Covariates) -> VarianceBreakdown:
    """Scale a breakdown by the covariate ratio (1 - R2_YX) / (1 - R2_TX)."""
    if not (0.0 <= cov.R2_YX < 1.0) or not (0.0 <= cov.R2_TX < 1.0):
        raise PanelPowerError("R2_OUT_OF_RANGE", "R2_YX and R2_TX must lie in [0, 1)", "covariates")
    factor = (1.0 - cov.R2_YX) / (1.0 - cov.R2_TX)
    if factor == 1.0:
        return vb
    terms = []
    for t in vb.terms:
        t2 = dict(t)
        for key in ("theta_block", "eps_block"):
            if key in t2:
                t2[key] = t2[key] * factor
        t2["covariate_factor"] = factor
        terms.append(t2)
    return replace(
        vb,
        total=vb.total * factor,
        per_group=tuple(v * factor for v in vb.per_group),
        terms=tuple(terms),
    )


def compute_variance(design: ValidatedDesign, err: ErrorModel, est: EstimatorSpec) -> VarianceBreakdown:
    """Dispatch to the family-specific formula and apply covariate scaling."""
    fam = est.family
    if fam is Family.DID:
        vb = var_did(design, err, est.estimand)
    elif fam in (Family.CITS_FULL, Family.ITS_FULL):
        vb = var_cits_full(design, err, est.estimand, its=fam.is_its)
    elif fam in (Family.CITS_DISCRETE, Family.ITS_DISCRETE):
        vb = var_cits_full(design, err, est.estimand, its=fam.is_its, discrete=True)
    else:
        vb = var_cits_common_slopes(design, err, est.estimand, its=fam.is_its)
    if est.covariates is not None:
        vb = apply_covariates(vb, est.covariates)
    return vb
