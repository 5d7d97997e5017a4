"""Averaged autocorrelation quantities for the variance formulas.

Every term is an average of pairwise correlation weights over a time window
(pre, post, across, or the full panel), possibly weighted by centered
measurement times. Under the AR1 structure a pair at gap Δt contributes
rho**Δt (elapsed-time exponents, so uneven spacing is handled); under the
CONSTANT structure every distinct pair contributes rho. A point's
correlation with itself is always 1.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import CorrStructure, ValidatedDesign
from .errors import PanelPowerError

__all__ = [
    "AutocorrTerms",
    "basic_averages",
    "point_in_time_pre_post",
    "point_in_time_centered_pre_cross",
    "trend_weighted_terms",
]


def _weights(ti: np.ndarray, tj: np.ndarray, rho: float, structure: CorrStructure) -> np.ndarray:
    """Pairwise correlation weights between two time vectors."""
    gaps = np.abs(ti[:, None] - tj[None, :])
    if structure is CorrStructure.CONSTANT:
        return np.where(gaps == 0.0, 1.0, rho)
    if rho == 0.0:
        return np.where(gaps == 0.0, 1.0, 0.0)
    if rho > 0.0:
        return np.power(float(rho), gaps)
    return _signed_power(rho, gaps)


def _signed_power(rho: float, gaps: np.ndarray) -> np.ndarray:
    # negative rho with non-integer gaps is undefined; require integer gaps there
    if not np.allclose(gaps, np.round(gaps)):
        raise PanelPowerError(
            "NUMERIC_GUARD",
            "negative rho requires integer time gaps (rho**dt undefined otherwise)",
            "rho",
        )
    return np.power(float(rho), np.round(gaps).astype(int))


@dataclass(frozen=True)
class AutocorrTerms:
    """Every averaged autocorrelation for one timing group at one parameter.

    The same container serves the cluster-level parameter rho and, for
    longitudinal designs, the individual-level parameter psi.
    """

    rho_pre: float
    rho_post: float
    rho_pre_post: float
    rho_pre1: float
    rho_pre2: float
    rho_pre_post1: float
    rho_post1: float
    rho_post2: float
    rho_pre_post2: float
    rho_pre_post3: float
    rho_pre_post4: float
    rho_full1: float
    rho_full2: float
    rho_full3: float

    def to_dict(self) -> dict:
        return {k: float(v) for k, v in self.__dict__.items()}


def basic_averages(
    design: ValidatedDesign, k: int, rho: float, structure: CorrStructure
) -> tuple[float, float, float]:
    """Unweighted averages (rho_pre, rho_post, rho_pre_post) for group k.

    With a single pre- or post-period the within-window average is defined as
    0; its multiplier in the variance bracket vanishes anyway.
    """
    pre = np.asarray(design.pre_times(k))
    post = np.asarray(design.post_times(k))
    B, A = len(pre), len(post)
    w_pp = _weights(post, pre, rho, structure)
    rho_pre_post = float(w_pp.mean())
    if B >= 2:
        w = _weights(pre, pre, rho, structure)
        rho_pre = float((w.sum() - np.trace(w)) / (B * (B - 1)))
    else:
        rho_pre = 0.0
    if A >= 2:
        w = _weights(post, post, rho, structure)
        rho_post = float((w.sum() - np.trace(w)) / (A * (A - 1)))
    else:
        rho_post = 0.0
    return rho_pre, rho_post, rho_pre_post


def point_in_time_pre_post(
    design: ValidatedDesign, k: int, rho: float, structure: CorrStructure, period: int
) -> float:
    """Average correlation between post-period ``period`` and the pre-window."""
    if not (design.S[k] <= period <= design.P):
        raise PanelPowerError(
            "NOT_POST_PERIOD", f"period {period} is not a post-period for timing group {k + 1}", "estimand"
        )
    t_q = np.asarray([design.times[period - 1]])
    pre = np.asarray(design.pre_times(k))
    return float(_weights(t_q, pre, rho, structure).mean())


def point_in_time_centered_pre_cross(
    design: ValidatedDesign, k: int, rho: float, structure: CorrStructure, period: int
) -> float:
    """Centered-pre-time-weighted correlation with a single post-period.

    The cross trend term of the pooled formulas with the post-window
    collapsed to the one period of interest.
    """
    if not (design.S[k] <= period <= design.P):
        raise PanelPowerError(
            "NOT_POST_PERIOD", f"period {period} is not a post-period for timing group {k + 1}", "estimand"
        )
    t_q = np.asarray([design.times[period - 1]])
    pre = np.asarray(design.pre_times(k))
    cp = pre - pre.mean()
    return float((_weights(t_q, pre, rho, structure)[0] * cp).sum() / len(pre))


def trend_weighted_terms(
    design: ValidatedDesign, k: int, rho: float, structure: CorrStructure
) -> AutocorrTerms:
    """All centered-time-weighted autocorrelation averages for group k.

    Pre-window trend terms need B_k >= 2 and post-window terms A_k >= 2
    (guaranteed at >= 3 by CITS validation).
    """
    pre = np.asarray(design.pre_times(k))
    post = np.asarray(design.post_times(k))
    times = np.asarray(design.times)
    B, A, P = len(pre), len(post), len(times)
    if B < 2 or A < 2:
        raise PanelPowerError(
            "DEGENERATE_PERIOD",
            f"trend-weighted terms need at least 2 pre- and 2 post-periods (group {k + 1} has B={B}, A={A})",
        )
    cp = pre - pre.mean()
    ca = post - post.mean()
    rho_b, rho_a, rho_ba = basic_averages(design, k, rho, structure)

    w_pre = _weights(pre, pre, rho, structure)
    w_post = _weights(post, post, rho, structure)
    w_cross = _weights(post, pre, rho, structure)  # [a, b] with gap Time_a - Time_b

    upper_pre = np.triu(w_pre, 1)
    upper_post = np.triu(w_post, 1)
    rho_pre1 = float(2.0 / (B * (B - 1)) * (cp @ upper_pre @ cp))
    rho_post1 = float(2.0 / (A * (A - 1)) * (ca @ upper_post @ ca))
    rho_pre2 = float((cp @ w_pre).sum() / B**2)
    rho_post2 = float((ca @ w_post).sum() / A**2)
    rho_pre_post1 = float((w_cross @ cp).sum() / (A * B))
    rho_pre_post2 = float((ca @ w_cross).sum() / (A * B))
    rho_pre_post4 = float(ca @ w_cross @ cp / (A * B))

    ct = times - times.mean()
    post_ind = np.concatenate([np.zeros(B), np.ones(A)]) - A / P
    w_full = _weights(times, times, rho, structure)
    off = w_full - np.eye(P)
    upper_full = np.triu(w_full, 1)
    rho_full1 = float(2.0 / (P * (P - 1)) * (post_ind @ upper_full @ post_ind))
    rho_full2 = float(ct @ off @ post_ind / (P * (P - 1)))
    rho_full3 = float(2.0 / (P * (P - 1)) * (ct @ upper_full @ ct))

    return AutocorrTerms(
        rho_pre=rho_b, rho_post=rho_a, rho_pre_post=rho_ba,
        rho_pre1=rho_pre1, rho_pre2=rho_pre2, rho_pre_post1=rho_pre_post1,
        rho_post1=rho_post1, rho_post2=rho_post2,
        rho_pre_post2=rho_pre_post2, rho_pre_post3=rho_pre_post1,
        rho_pre_post4=rho_pre_post4,
        rho_full1=rho_full1, rho_full2=rho_full2, rho_full3=rho_full3,
    )
