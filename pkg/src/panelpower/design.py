"""Panel design and error-model types, validation, and time geometry.

A design is described by the panel length ``P``, the measurement times,
``K`` treatment timing groups with start periods ``S`` (period labels,
1-based), per-group treatment/comparison cluster counts, and the number of
individuals per cluster-period cell ``N``. Cluster counts are real-valued
so the sample-size solver can move through fractional allocations; the
reporting layer rounds.

All types are immutable after validation and safe to share across threads.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum

from .errors import PanelPowerError

__all__ = [
    "CorrStructure",
    "DesignKind",
    "Family",
    "EstimandKind",
    "Estimand",
    "Covariates",
    "DesignSpec",
    "ErrorModel",
    "EstimatorSpec",
    "TimeGeometry",
    "ValidatedDesign",
    "validate_design",
    "time_geometry",
]


class CorrStructure(str, Enum):
    AR1 = "AR1"
    CONSTANT = "CONSTANT"


class DesignKind(str, Enum):
    CROSS_SECTIONAL = "CROSS_SECTIONAL"
    LONGITUDINAL = "LONGITUDINAL"


class Family(str, Enum):
    DID = "DID"
    CITS_FULL = "CITS_FULL"
    CITS_DISCRETE = "CITS_DISCRETE"
    CITS_COMMON_SLOPES = "CITS_COMMON_SLOPES"
    ITS_FULL = "ITS_FULL"
    ITS_DISCRETE = "ITS_DISCRETE"
    ITS_COMMON_SLOPES = "ITS_COMMON_SLOPES"

    @property
    def is_its(self) -> bool:
        return self.value.startswith("ITS")

    @property
    def is_did(self) -> bool:
        return self is Family.DID

    @property
    def is_common_slopes(self) -> bool:
        return self in (Family.CITS_COMMON_SLOPES, Family.ITS_COMMON_SLOPES)

    @property
    def is_discrete(self) -> bool:
        return self in (Family.CITS_DISCRETE, Family.ITS_DISCRETE)


class EstimandKind(str, Enum):
    POOLED = "POOLED"
    EXPOSURE = "EXPOSURE"
    CALENDAR = "CALENDAR"


@dataclass(frozen=True)
class Estimand:
    """Which treatment-effect aggregate to target.

    POOLED averages over the whole observed post-period; EXPOSURE targets the
    effect ``l`` periods after treatment onset; CALENDAR targets the effect at
    post-period label ``q``.
    """

    kind: EstimandKind = EstimandKind.POOLED
    l: int | None = None
    q: int | None = None

    @staticmethod
    def pooled() -> "Estimand":
        return Estimand(EstimandKind.POOLED)

    @staticmethod
    def exposure(l: int) -> "Estimand":
        return Estimand(EstimandKind.EXPOSURE, l=int(l))

    @staticmethod
    def calendar(q: int) -> "Estimand":
        return Estimand(EstimandKind.CALENDAR, q=int(q))

    def to_dict(self) -> dict:
        d = {"kind": self.kind.value}
        if self.l is not None:
            d["l"] = self.l
        if self.q is not None:
            d["q"] = self.q
        return d

    @staticmethod
    def from_dict(d: dict) -> "Estimand":
        kind = EstimandKind(d.get("kind", "POOLED"))
        return Estimand(kind, l=d.get("l"), q=d.get("q"))


@dataclass(frozen=True)
class Covariates:
    """Covariate adjustment inputs: outcome R², treatment-collinearity R², count."""

    R2_YX: float = 0.0
    R2_TX: float = 0.0
    v: int = 0

    def to_dict(self) -> dict:
        return {"R2_YX": self.R2_YX, "R2_TX": self.R2_TX, "v": self.v}

    @staticmethod
    def from_dict(d: dict) -> "Covariates":
        return Covariates(float(d.get("R2_YX", 0.0)), float(d.get("R2_TX", 0.0)), int(d.get("v", 0)))


@dataclass(frozen=True)
class DesignSpec:
    """Raw panel design as supplied by the user.

    ``times`` defaults to (1, 2, ..., P). ``S`` holds period *labels*, never
    elapsed time. Cluster counts may be fractional while solving.
    """

    P: int
    S: tuple[int, ...]
    M_T_k: tuple[float, ...]
    M_C_k: tuple[float, ...]
    N: float
    times: tuple[float, ...] | None = None
    K: int | None = None

    def resolved_times(self) -> tuple[float, ...]:
        if self.times is None:
            return tuple(float(t) for t in range(1, self.P + 1))
        return tuple(float(t) for t in self.times)

    def to_dict(self) -> dict:
        return {
            "P": self.P,
            "times": list(self.resolved_times()),
            "K": self.K if self.K is not None else len(self.S),
            "S": list(self.S),
            "M_T_k": list(self.M_T_k),
            "M_C_k": list(self.M_C_k),
            "N": self.N,
        }

    @staticmethod
    def from_dict(d: dict) -> "DesignSpec":
        return DesignSpec(
            P=int(d["P"]),
            S=tuple(int(s) for s in d["S"]),
            M_T_k=tuple(float(m) for m in d["M_T_k"]),
            M_C_k=tuple(float(m) for m in d.get("M_C_k", [0.0] * len(d["S"]))),
            N=float(d["N"]),
            times=tuple(float(t) for t in d["times"]) if d.get("times") else None,
            K=int(d["K"]) if d.get("K") is not None else None,
        )


@dataclass(frozen=True)
class ErrorModel:
    """Variance decomposition and autocorrelation structure.

    Total error variance is normalized to 1 (effect-size units), so
    σ_θ² = ICC_theta and σ_ε² = 1 − ICC_theta. ``psi`` only matters for
    LONGITUDINAL designs; cross-sectional designs behave as psi = 0.
    """

    ICC_theta: float
    rho: float
    corr_structure: CorrStructure = CorrStructure.AR1
    design_kind: DesignKind = DesignKind.CROSS_SECTIONAL
    psi: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.ICC_theta < 1.0):
            raise PanelPowerError("R2_OUT_OF_RANGE", f"ICC_theta must lie in [0, 1), got {self.ICC_theta}", "ICC_theta")
        if not abs(self.rho) < 1.0:
            raise PanelPowerError("R2_OUT_OF_RANGE", f"|rho| must be < 1, got {self.rho}", "rho")
        if not abs(self.psi) < 1.0:
            raise PanelPowerError("R2_OUT_OF_RANGE", f"|psi| must be < 1, got {self.psi}", "psi")

    @property
    def sigma_theta2(self) -> float:
        return self.ICC_theta

    @property
    def sigma_eps2(self) -> float:
        return 1.0 - self.ICC_theta

    @property
    def effective_psi(self) -> float:
        """Individual-level autocorrelation actually applied (0 when cross-sectional)."""
        return self.psi if self.design_kind is DesignKind.LONGITUDINAL else 0.0

    def to_dict(self) -> dict:
        return {
            "ICC_theta": self.ICC_theta,
            "corr_structure": self.corr_structure.value,
            "rho": self.rho,
            "design_kind": self.design_kind.value,
            "psi": self.psi,
        }

    @staticmethod
    def from_dict(d: dict) -> "ErrorModel":
        return ErrorModel(
            ICC_theta=float(d["ICC_theta"]),
            rho=float(d["rho"]),
            corr_structure=CorrStructure(d.get("corr_structure", "AR1")),
            design_kind=DesignKind(d.get("design_kind", "CROSS_SECTIONAL")),
            psi=float(d.get("psi", 0.0)),
        )


@dataclass(frozen=True)
class EstimatorSpec:
    """Estimator family, estimand, and optional covariate adjustment."""

    family: Family
    estimand: Estimand = field(default_factory=Estimand.pooled)
    covariates: Covariates | None = None

    def to_dict(self) -> dict:
        d = {"family": self.family.value, "estimand": self.estimand.to_dict()}
        if self.covariates is not None:
            d["covariates"] = self.covariates.to_dict()
        return d

    @staticmethod
    def from_dict(d: dict) -> "EstimatorSpec":
        cov = d.get("covariates")
        return EstimatorSpec(
            family=Family(d["family"]),
            estimand=Estimand.from_dict(d.get("estimand", {"kind": "POOLED"})),
            covariates=Covariates.from_dict(cov) if cov else None,
        )


@dataclass(frozen=True)
class TimeGeometry:
    """Centered-time means and sums of squares for one timing group."""

    mean_time_pre_k: float
    mean_time_post_k: float
    mean_time_full: float
    SSQT_pre_k: float
    SSQT_post_k: float
    SSQT_full: float
    post_share_k: float

    def to_dict(self) -> dict:
        return {
            "mean_time_pre_k": self.mean_time_pre_k,
            "mean_time_post_k": self.mean_time_post_k,
            "mean_time_full": self.mean_time_full,
            "SSQT_pre_k": self.SSQT_pre_k,
            "SSQT_post_k": self.SSQT_post_k,
            "SSQT_full": self.SSQT_full,
            "post_share_k": self.post_share_k,
        }


@dataclass(frozen=True)
class ValidatedDesign:
    """A DesignSpec that passed validation, with derived quantities attached."""

    spec: DesignSpec
    family: Family
    times: tuple[float, ...]
    A: tuple[int, ...]
    B: tuple[int, ...]
    M: float
    M_T: float
    M_C: float
    r: float
    p_T: tuple[float, ...]
    p_C: tuple[float, ...]

    @property
    def K(self) -> int:
        return len(self.spec.S)

    @property
    def P(self) -> int:
        return self.spec.P

    @property
    def S(self) -> tuple[int, ...]:
        return self.spec.S

    @property
    def N(self) -> float:
        return self.spec.N

    @property
    def M_T_k(self) -> tuple[float, ...]:
        return self.spec.M_T_k

    @property
    def M_C_k(self) -> tuple[float, ...]:
        return self.spec.M_C_k

    @property
    def is_its(self) -> bool:
        return self.family.is_its

    def pre_times(self, k: int) -> tuple[float, ...]:
        return self.times[: self.B[k]]

    def post_times(self, k: int) -> tuple[float, ...]:
        return self.times[self.B[k]:]

    def with_total_clusters(self, m_total: float) -> "ValidatedDesign":
        """Rescale per-group counts to a new total, preserving shares.

        For ITS designs the total is the treatment-cluster count.
        """
        if self.is_its:
            mt = tuple(p * m_total for p in self.p_T)
            mc = tuple(0.0 for _ in self.p_T)
        else:
            mt = tuple(self.r * p * m_total for p in self.p_T)
            mc = tuple((1.0 - self.r) * p * m_total for p in self.p_C)
        spec = replace(self.spec, M_T_k=mt, M_C_k=mc)
        return replace(
            self, spec=spec,
            M=m_total if not self.is_its else sum(mt),
            M_T=sum(mt), M_C=sum(mc),
        )

    def to_dict(self) -> dict:
        d = self.spec.to_dict()
        d.update({
            "family": self.family.value,
            "A_k": list(self.A),
            "B_k": list(self.B),
            "M": self.M,
            "M_T": self.M_T,
            "M_C": self.M_C,
            "r": self.r,
            "p_Tk": list(self.p_T),
            "p_Ck": list(self.p_C),
        })
        return d


def validate_design(spec: DesignSpec, est: EstimatorSpec) -> ValidatedDesign:
    """Validate a design against an estimator family and derive A_k, B_k, shares.

    Raises PanelPowerError with codes PERIOD_RANGE, NON_MONOTONE_TIMES,
    EMPTY_GROUP, ITS_WITH_COMPARISONS, CITS_TOO_FEW_PERIODS, NO_GROUP_INCLUDED.
    """
    family = est.family
    P = spec.P
    if P < 2:
        raise PanelPowerError("PERIOD_RANGE", f"need at least 2 periods, got P={P}", "P")
    times = spec.resolved_times()
    if len(times) != P:
        raise PanelPowerError("NON_MONOTONE_TIMES", f"times has length {len(times)}, expected P={P}", "times")
    if any(t2 <= t1 for t1, t2 in zip(times, times[1:])):
        raise PanelPowerError("NON_MONOTONE_TIMES", "times must be strictly increasing", "times")

    K = len(spec.S)
    if spec.K is not None and spec.K != K:
        raise PanelPowerError("PERIOD_RANGE", f"K={spec.K} does not match len(S)={K}", "K")
    if K < 1:
        raise PanelPowerError("EMPTY_GROUP", "need at least one timing group", "S")
    if any(s2 <= s1 for s1, s2 in zip(spec.S, spec.S[1:])):
        raise PanelPowerError("PERIOD_RANGE", "S must be strictly increasing (timing groups ordered earliest first)", "S")
    if len(spec.M_T_k) != K or len(spec.M_C_k) != K:
        raise PanelPowerError("EMPTY_GROUP", "M_T_k and M_C_k must have one entry per timing group", "M_T_k")

    A = tuple(P - s + 1 for s in spec.S)
    B = tuple(s - 1 for s in spec.S)
    if family.is_did:
        for k, s in enumerate(spec.S):
            if not (2 <= s <= P):
                raise PanelPowerError("PERIOD_RANGE", f"S_{k + 1}={s} outside [2, {P}] for DID", "S")
    else:
        # CITS/ITS trendlines need at least 3 points on each side.
        for k in range(K):
            if A[k] < 3 or B[k] < 3:
                raise PanelPowerError(
                    "CITS_TOO_FEW_PERIODS",
                    f"timing group {k + 1} has B={B[k]}, A={A[k]}; trend estimation needs at least 3 pre- and 3 post-periods",
                    "S",
                )

    for k, m in enumerate(spec.M_T_k):
        if not (m > 0):
            raise PanelPowerError("EMPTY_GROUP", f"M_T_{k + 1} must be > 0, got {m}", "M_T_k")
    if family.is_its:
        if any(m != 0 for m in spec.M_C_k):
            raise PanelPowerError("ITS_WITH_COMPARISONS", "ITS designs must have all M_C_k = 0", "M_C_k")
    else:
        for k, m in enumerate(spec.M_C_k):
            if not (m > 0):
                raise PanelPowerError("EMPTY_GROUP", f"M_C_{k + 1} must be > 0 for {family.value}, got {m}", "M_C_k")
    if not (spec.N >= 1):
        raise PanelPowerError("EMPTY_GROUP", f"N must be >= 1, got {spec.N}", "N")

    # Estimand feasibility against the derived post-period lengths.
    e = est.estimand
    if e.kind is EstimandKind.EXPOSURE:
        if e.l is None or e.l < 1:
            raise PanelPowerError("PERIOD_RANGE", "EXPOSURE estimand needs l >= 1", "estimand")
        if e.l > max(A):
            raise PanelPowerError("NO_GROUP_INCLUDED", f"no timing group is observed {e.l} periods after exposure (max A_k = {max(A)})", "estimand")
    elif e.kind is EstimandKind.CALENDAR:
        if e.q is None or e.q > P:
            raise PanelPowerError("PERIOD_RANGE", f"CALENDAR estimand needs a period label q <= P={P}", "estimand")
        if e.q < min(spec.S):
            raise PanelPowerError("NO_GROUP_INCLUDED", f"q={e.q} precedes every treatment start (min S_k = {min(spec.S)})", "estimand")

    if est.covariates is not None:
        c = est.covariates
        if not (0.0 <= c.R2_YX < 1.0) or not (0.0 <= c.R2_TX < 1.0):
            raise PanelPowerError("R2_OUT_OF_RANGE", "R2_YX and R2_TX must lie in [0, 1)", "covariates")
        if c.v < 0:
            raise PanelPowerError("R2_OUT_OF_RANGE", "covariate count v must be >= 0", "covariates")

    M_T = float(sum(spec.M_T_k))
    M_C = float(sum(spec.M_C_k))
    M = M_T + M_C
    r = M_T / M
    p_T = tuple(m / M_T for m in spec.M_T_k)
    p_C = tuple((m / M_C if M_C > 0 else 0.0) for m in spec.M_C_k)
    return ValidatedDesign(
        spec=spec, family=family, times=times, A=A, B=B,
        M=M, M_T=M_T, M_C=M_C, r=r, p_T=p_T, p_C=p_C,
    )


def time_geometry(design: ValidatedDesign) -> tuple[TimeGeometry, ...]:
    """Centered-time means and sums of squares for every timing group."""
    times = design.times
    P = design.P
    mean_full = math.fsum(times) / P
    ss_full = math.fsum((t - mean_full) ** 2 for t in times)
    out = []
    for k in range(design.K):
        pre = design.pre_times(k)
        post = design.post_times(k)
        m_pre = math.fsum(pre) / len(pre)
        m_post = math.fsum(post) / len(post)
        out.append(TimeGeometry(
            mean_time_pre_k=m_pre,
            mean_time_post_k=m_post,
            mean_time_full=mean_full,
            SSQT_pre_k=math.fsum((t - m_pre) ** 2 for t in pre),
            SSQT_post_k=math.fsum((t - m_post) ** 2 for t in post),
            SSQT_full=ss_full,
            post_share_k=design.A[k] / P,
        ))
    return tuple(out)
