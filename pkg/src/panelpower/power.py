"""MDE computation, degrees-of-freedom rules, and the required-cluster solver.

The minimum detectable effect for a two-tailed test at level alpha and
power lambda is

    MDE = factor(alpha, lambda, df) * sqrt(Var)

in effect-size units, where factor is the sum of the upper-alpha/2 critical
value and the power quantile of Student's t. Required cluster counts solve
the same relation for the total M, treating the supplied design's cluster
counts as allocation shares; because df depends on M the solve is a short
fixed-point iteration started from the normal-limit factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .design import (
    ErrorModel,
    EstimandKind,
    EstimatorSpec,
    Family,
    ValidatedDesign,
)
from .errors import PanelPowerError
from .tdist import inverse_student_t, normal_quantile
from .variance import VarianceBreakdown, compute_variance

__all__ = [
    "PowerQuery",
    "PowerResult",
    "factor",
    "degrees_of_freedom",
    "mde",
    "required_clusters",
    "design_effect",
    "ITS_DF_NOTE",
]

ITS_DF_NOTE = (
    "ITS degrees of freedom use parameter counting on the treatment-only model: "
    "full M_T*P - 4K, discrete M_T*P - 2K - sum(A_k), common-slopes M_T*P - 3K."
)

_MAX_ITER = 100


@dataclass(frozen=True)
class PowerQuery:
    """Significance level, power, and (for cluster solves) the MDE target."""

    alpha: float = 0.05
    power: float = 0.80
    mde_target: float | None = None

    def __post_init__(self):
        if not (0.0 < self.alpha < 1.0):
            raise PanelPowerError("P_OUT_OF_RANGE", f"alpha must lie in (0, 1), got {self.alpha}", "alpha")
        if not (0.0 < self.power < 1.0):
            raise PanelPowerError("P_OUT_OF_RANGE", f"power must lie in (0, 1), got {self.power}", "lambda")
        if self.mde_target is not None and not (self.mde_target > 0):
            raise PanelPowerError("P_OUT_OF_RANGE", f"mde target must be > 0, got {self.mde_target}", "mde")

    def to_dict(self) -> dict:
        d = {"alpha": self.alpha, "lambda": self.power}
        if self.mde_target is not None:
            d["mde"] = self.mde_target
        return d


@dataclass(frozen=True)
class PowerResult:
    """Outcome of an MDE or required-clusters computation."""

    df: int
    factor: float
    variance: VarianceBreakdown
    mde: float | None = None
    M: int | None = None
    m_continuous: float | None = None
    achieved_mde: float | None = None
    allocation: dict | None = None
    solver_trace: tuple[dict, ...] = ()
    warnings: tuple[str, ...] = ()

    def to_dict(self) -> dict:
        d = {
            "df": self.df,
            "factor": self.factor,
            "variance": self.variance.to_dict(),
            "warnings": list(self.warnings),
        }
        if self.mde is not None:
            d["mde"] = self.mde
        if self.M is not None:
            d["M"] = self.M
        if self.m_continuous is not None:
            d["m_continuous"] = self.m_continuous
        if self.achieved_mde is not None:
            d["achieved_mde"] = self.achieved_mde
        if self.allocation is not None:
            d["allocation"] = self.allocation
        if self.solver_trace:
            d["solver_trace"] = [dict(t) for t in self.solver_trace]
        return d


def factor(alpha: float, power: float, df: float) -> float:
    """Sum of the two-tailed critical value and the power quantile.

    The critical value is the positive upper-alpha/2 quantile, the reading
    that reproduces standard MDE arithmetic (2.8016 at alpha=.05, power=.8,
    large df). Strictly decreasing in df.
    """
    return inverse_student_t(1.0 - alpha / 2.0, df) + inverse_student_t(power, df)


def _included(design: ValidatedDesign, est: EstimatorSpec) -> list[int]:
    e = est.estimand
    if e.kind is EstimandKind.POOLED:
        return list(range(design.K))
    if e.kind is EstimandKind.EXPOSURE:
        return [k for k in range(design.K) if e.l <= design.A[k]]
    return [k for k in range(design.K) if e.q >= design.S[k]]


def degrees_of_freedom(design: ValidatedDesign, est: EstimatorSpec) -> float:
    """Cluster-time observations minus model parameters, per estimator.

    Returns a float because cluster counts may be fractional mid-solve;
    integral inputs give integral output. Raises NONPOSITIVE_DF when the
    design is too small for the model.
    """
    fam = est.family
    P = design.P
    K = design.K
    A = design.A
    its = fam.is_its
    pooled = est.estimand.kind is EstimandKind.POOLED or fam.is_common_slopes
    if pooled:
        M = design.M_T + design.M_C
        if fam is Family.DID:
            df = M * P - M - K * P - sum(A)
        elif fam in (Family.CITS_FULL, Family.ITS_FULL):
            df = M * P - (4 if its else 8) * K
        elif fam in (Family.CITS_DISCRETE, Family.ITS_DISCRETE):
            df = M * P - (2 if its else 4) * K - sum(A)
        else:
            df = M * P - (3 if its else 6) * K
    else:
        inc = _included(design, est)
        if not inc:
            raise PanelPowerError("NO_GROUP_INCLUDED", "no timing group satisfies the inclusion indicator", "estimand")
        Kl = len(inc)
        Ml = sum(design.M_T_k[k] + design.M_C_k[k] for k in inc)
        Al = sum(A[k] for k in inc)
        if fam is Family.DID:
            df = Ml * P - Ml - Kl * P - Kl
        elif fam in (Family.CITS_FULL, Family.ITS_FULL):
            df = Ml * P - (4 if its else 8) * Kl
        else:
            df = Ml * P - (2 if its else 4) * Kl - Al
    if est.covariates is not None:
        df -= est.covariates.v
    if df <= 0:
        raise PanelPowerError("NONPOSITIVE_DF", f"degrees of freedom {df} <= 0; design too small for the model", "M_T_k")
    return float(df)


def _warnings_for(est: EstimatorSpec) -> tuple[str, ...]:
    return (ITS_DF_NOTE,) if est.family.is_its else ()


def mde(design: ValidatedDesign, err: ErrorModel, est: EstimatorSpec, query: PowerQuery) -> PowerResult:
    """Minimum detectable effect for a fully specified design."""
    vb = compute_variance(design, err, est)
    df = degrees_of_freedom(design, est)
    f = factor(query.alpha, query.power, df)
    return PowerResult(
        df=int(math.floor(df + 1e-9)),
        factor=f,
        variance=vb,
        mde=f * math.sqrt(vb.total),
        warnings=_warnings_for(est),
    )


def _suggest_allocation(design: ValidatedDesign, m_total: int) -> dict:
    """Integer per-group allocation summing to m_total (largest remainder)."""
    scaled = design.with_total_clusters(float(m_total))
    cells = list(scaled.M_T_k) + ([] if design.is_its else list(scaled.M_C_k))
    floors = [math.floor(c) for c in cells]
    short = m_total - sum(floors)
    order = sorted(range(len(cells)), key=lambda i: cells[i] - floors[i], reverse=True)
    for i in order[:short]:
        floors[i] += 1
    k = design.K
    out = {"M_T_k": floors[:k]}
    if not design.is_its:
        out["M_C_k"] = floors[k:]
    return out


def required_clusters(
    design: ValidatedDesign, err: ErrorModel, est: EstimatorSpec, query: PowerQuery
) -> PowerResult:
    """Smallest integer cluster total whose achieved MDE meets the target.

    The supplied design's cluster counts act as allocation shares. The
    continuous fixed point (variance scales as 1/M; the factor follows df)
    is iterated from the normal-limit factor, then the integer answer is
    verified directly so the round trip M -> MDE -> M is exact.
    """
    if query.mde_target is None:
        raise PanelPowerError("P_OUT_OF_RANGE", "required_clusters needs an mde target", "mde")
    target = query.mde_target
    v_unit = compute_variance(design.with_total_clusters(1.0), err, est).total
    if v_unit <= 0:
        raise PanelPowerError("NUMERIC_GUARD", "unit variance is zero; nothing to solve")

    f = normal_quantile(1.0 - query.alpha / 2.0) + normal_quantile(query.power)
    m = f * f * v_unit / target**2
    trace = []
    converged = False
    delta = math.inf
    for _ in range(_MAX_ITER):
        df = degrees_of_freedom(design.with_total_clusters(m), est)
        f = factor(query.alpha, query.power, df)
        m_new = f * f * v_unit / target**2
        trace.append({"M": m_new, "df": df, "factor": f})
        delta = abs(m_new - m)
        m = m_new
        if delta < 1e-9:
            converged = True
            break
    if not converged and delta >= 0.5:
        raise PanelPowerError("NO_CONVERGENCE", f"cluster solve oscillating after {_MAX_ITER} steps (last delta {delta:.3g})")

    def achieved(m_int: int) -> float:
        df_i = degrees_of_freedom(design.with_total_clusters(float(m_int)), est)
        return factor(query.alpha, query.power, df_i) * math.sqrt(v_unit / m_int)

    m_int = max(1, math.ceil(m - 1e-9))
    guard = 0
    while achieved(m_int) > target:
        m_int += 1
        guard += 1
        if guard > 1000:
            raise PanelPowerError("NO_CONVERGENCE", "integer verification did not settle")
    while m_int > 1:
        try:
            if achieved(m_int - 1) <= target:
                m_int -= 1
            else:
                break
        except PanelPowerError:
            break
    final = design.with_total_clusters(float(m_int))
    df_final = degrees_of_freedom(final, est)
    f_final = factor(query.alpha, query.power, df_final)
    return PowerResult(
        df=int(math.floor(df_final + 1e-9)),
        factor=f_final,
        variance=compute_variance(final, err, est),
        M=m_int,
        m_continuous=m,
        achieved_mde=achieved(m_int),
        allocation=_suggest_allocation(design, m_int),
        solver_trace=tuple(trace),
        warnings=_warnings_for(est),
    )


def design_effect(
    design_a: ValidatedDesign, err_a: ErrorModel,
    design_b: ValidatedDesign, err_b: ErrorModel,
    est: EstimatorSpec, query: PowerQuery | None = None,
) -> float:
    """Cluster-inflation ratio of design A over reference design B.

    Computed on the continuous (pre-rounding) required totals at a common
    MDE so the target value cancels.
    """
    q = query or PowerQuery(mde_target=0.20)
    if q.mde_target is None:
        q = PowerQuery(alpha=q.alpha, power=q.power, mde_target=0.20)
    ra = required_clusters(design_a, err_a, est, q)
    rb = required_clusters(design_b, err_b, est, q)
    return ra.m_continuous / rb.m_continuous
