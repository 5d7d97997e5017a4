"""Independent oracles for the closed-form engine.

Two routes that share no code with the package internals:

* ``matrix_variance``: each estimator is a linear functional c'y of the
  per-period cluster means, with c built from OLS hat matrices; its exact
  sampling variance is (1/M_T + 1/M_C) * c' Omega c with Omega composed
  directly from the error model. No averaged-correlation algebra involved.
* ``bf_*``: brute-force double loops over time pairs, transcribing the
  averaged-autocorrelation definitions one sum at a time.
"""

from __future__ import annotations

import numpy as np

from panelpower.design import CorrStructure, DesignKind, ErrorModel, Estimand, EstimandKind, Family, ValidatedDesign


# ---------------------------------------------------------------------------
# brute-force averaged autocorrelations (plain loops)
# ---------------------------------------------------------------------------

def _w(dt: float, rho: float, structure: str) -> float:
    dt = abs(dt)
    if dt == 0:
        return 1.0
    if structure == "CONSTANT":
        return rho
    return rho**dt


def bf_rho_pre(pre, rho, structure):
    B = len(pre)
    if B < 2:
        return 0.0
    s = sum(_w(pre[j] - pre[i], rho, structure) for i in range(B) for j in range(i + 1, B))
    return 2.0 / (B * (B - 1)) * s


def bf_rho_post(post, rho, structure):
    return bf_rho_pre(post, rho, structure)


def bf_rho_pre_post(pre, post, rho, structure):
    return sum(_w(a - b, rho, structure) for b in pre for a in post) / (len(pre) * len(post))


def bf_rho_at(pre, tq, rho, structure):
    return sum(_w(tq - b, rho, structure) for b in pre) / len(pre)


def bf_rho_pre1(pre, rho, structure):
    B = len(pre)
    m = sum(pre) / B
    s = sum((pre[i] - m) * (pre[j] - m) * _w(pre[j] - pre[i], rho, structure)
            for i in range(B) for j in range(i + 1, B))
    return 2.0 / (B * (B - 1)) * s


def bf_rho_pre2(pre, rho, structure):
    B = len(pre)
    m = sum(pre) / B
    return sum((pre[i] - m) * _w(pre[j] - pre[i], rho, structure)
               for i in range(B) for j in range(B)) / B**2


def bf_rho_pre_post1(pre, post, rho, structure):
    m = sum(pre) / len(pre)
    return sum((b - m) * _w(a - b, rho, structure) for b in pre for a in post) / (len(pre) * len(post))


def bf_rho_pre_post2(pre, post, rho, structure):
    m = sum(post) / len(post)
    return sum((a - m) * _w(a - b, rho, structure) for b in pre for a in post) / (len(pre) * len(post))


def bf_rho_pre_post4(pre, post, rho, structure):
    mp = sum(pre) / len(pre)
    ma = sum(post) / len(post)
    return sum((a - ma) * (b - mp) * _w(a - b, rho, structure)
               for b in pre for a in post) / (len(pre) * len(post))


def bf_rho_full1(times, A, rho, structure):
    P = len(times)
    share = A / P
    post_ind = [0.0] * (P - A) + [1.0] * A
    s = sum((post_ind[i] - share) * (post_ind[j] - share) * _w(times[j] - times[i], rho, structure)
            for i in range(P) for j in range(i + 1, P))
    return 2.0 / (P * (P - 1)) * s


def bf_rho_full2(times, A, rho, structure):
    P = len(times)
    m = sum(times) / P
    share = A / P
    post_ind = [0.0] * (P - A) + [1.0] * A
    s = sum((times[i] - m) * (post_ind[j] - share) * _w(times[j] - times[i], rho, structure)
            for i in range(P) for j in range(P) if i != j)
    return s / (P * (P - 1))


def bf_rho_full3(times, rho, structure):
    P = len(times)
    m = sum(times) / P
    s = sum((times[i] - m) * (times[j] - m) * _w(times[j] - times[i], rho, structure)
            for i in range(P) for j in range(i + 1, P))
    return 2.0 / (P * (P - 1)) * s


# ---------------------------------------------------------------------------
# matrix-algebra variance oracle
# ---------------------------------------------------------------------------

def _omega(times: np.ndarray, err: ErrorModel, N: float) -> np.ndarray:
    """Within-cluster covariance of per-period cell means."""
    P = len(times)
    gaps = np.abs(times[:, None] - times[None, :])
    psi = err.psi if err.design_kind is DesignKind.LONGITUDINAL else 0.0
    if err.corr_structure is CorrStructure.CONSTANT:
        r_th = np.where(gaps == 0, 1.0, err.rho)
        r_ps = np.where(gaps == 0, 1.0, psi)
    else:
        with np.errstate(divide="ignore"):
            r_th = np.where(gaps == 0, 1.0, float(err.rho) ** gaps if err.rho != 0 else 0.0)
            r_ps = np.where(gaps == 0, 1.0, float(psi) ** gaps if psi != 0 else 0.0)
    s_th = err.ICC_theta
    s_ep = (1.0 - err.ICC_theta) / N
    return s_th * r_th + s_ep * r_ps


def _pre_hat(pre: np.ndarray, at: float) -> np.ndarray:
    """OLS weights for forecasting the pre-window line at a given time."""
    c = pre - pre.mean()
    return 1.0 / len(pre) + (at - pre.mean()) * c / (c**2).sum()


def _group_weight_vector(design: ValidatedDesign, k: int, family: Family, period: int | None) -> np.ndarray:
    """Per-period weights of the estimator for one timing group and arm."""
    P = design.P
    B = design.B[k]
    times = np.asarray(design.times)
    pre, post = times[:B], times[B:]
    w = np.zeros(P)
    if family is Family.DID:
        if period is None:
            w[B:] = 1.0 / len(post)
        else:
            w[period - 1] = 1.0
        w[:B] = -1.0 / B
        return w
    if family in (Family.CITS_COMMON_SLOPES, Family.ITS_COMMON_SLOPES):
        X = np.column_stack([
            np.concatenate([np.ones(B), np.zeros(len(post))]),
            np.concatenate([np.zeros(B), np.ones(len(post))]),
            times,
        ])
        hat = np.linalg.solve(X.T @ X, X.T)
        return hat[1] - hat[0]
    # fully-interacted / discrete: post prediction minus pre-window forecast
    if period is None:  # pooled: post mean minus pre-line forecast at the mean post time
        w[B:] = 1.0 / len(post)
        w[:B] = -_pre_hat(pre, post.mean())
        return w
    tq = times[period - 1]
    if family in (Family.CITS_DISCRETE, Family.ITS_DISCRETE):
        w[period - 1] = 1.0
    else:
        cpost = post - post.mean()
        w[B:] = 1.0 / len(post) + (tq - post.mean()) * cpost / (cpost**2).sum()
    w[:B] = -_pre_hat(pre, tq)
    return w


def matrix_variance(design: ValidatedDesign, err: ErrorModel, family: Family, estimand: Estimand) -> float:
    """Exact sampling variance of the estimator, by direct linear algebra."""
    omega = _omega(np.asarray(design.times), err, design.N)
    its = family.is_its
    if estimand.kind is EstimandKind.POOLED:
        weights = [float(a) for a in design.A]
        periods: list[int | None] = [None] * design.K
    else:
        weights, periods = [], []
        for k in range(design.K):
            if estimand.kind is EstimandKind.EXPOSURE:
                ok = estimand.l <= design.A[k]
                periods.append(estimand.l + design.S[k] - 1 if ok else None)
            else:
                ok = estimand.q >= design.S[k]
                periods.append(estimand.q if ok else None)
            weights.append(1.0 if ok else 0.0)
    total = 0.0
    for k in range(design.K):
        if weights[k] == 0.0:
            continue
        c = _group_weight_vector(design, k, family, periods[k])
        inv = 1.0 / design.M_T_k[k] + (0.0 if its else 1.0 / design.M_C_k[k])
        total += weights[k] ** 2 * inv * float(c @ omega @ c)
    return total / sum(weights) ** 2
