"""Bundled design presets and the benchmark catalog.

``table3-base`` encodes the assumptions behind the bundled benchmark grid:
MDE target 0.20, two-tailed alpha 0.05, power 0.8, a 50-50
treatment-comparison split, K=2 equal timing groups, N=100 individuals per
cluster-period cell, ICC_theta=0.05, rho=0.4, evenly spaced periods.

``BENCHMARK_ROWS`` holds published reference cluster counts for that grid,
used as an executable regression suite (PASS within +/-1 cluster; NA cells
must be rejected by validation).
"""

from __future__ import annotations

from .design import (
    CorrStructure,
    DesignKind,
    DesignSpec,
    ErrorModel,
    EstimatorSpec,
    Family,
    ValidatedDesign,
    validate_design,
)
from .power import PowerQuery

__all__ = [
    "PRESETS",
    "BENCHMARK_ROWS",
    "BENCHMARK_FAMILIES",
    "preset_design",
    "preset_error_model",
    "preset_query",
]

PRESETS: dict[str, dict] = {
    "table3-base": {
        "P": 8,
        "S": [4, 6],
        "split": 0.5,
        "N": 100,
        "ICC_theta": 0.05,
        "rho": 0.4,
        "psi": 0.4,
        "corr_structure": "AR1",
        "design_kind": "CROSS_SECTIONAL",
        "alpha": 0.05,
        "lambda": 0.8,
        "mde": 0.20,
    },
}

# (panel, P, S, expected counts by family; None marks a not-applicable cell
# that validation must reject). ITS counts are treatment clusters only.
BENCHMARK_FAMILIES = (
    Family.DID,
    Family.CITS_FULL,
    Family.ITS_FULL,
    Family.CITS_COMMON_SLOPES,
    Family.ITS_COMMON_SLOPES,
)

BENCHMARK_ROWS: tuple[dict, ...] = tuple(
    {"panel": panel, "P": P, "S": S, "expected": dict(zip(BENCHMARK_FAMILIES, vals))}
    for panel, P, S, vals in [
        ("pooled-ar1", 8, (2, 4), (48, None, None, None, None)),
        ("pooled-ar1", 8, (4, 6), (37, 297, 74, 89, 22)),
        ("pooled-ar1", 12, (4, 8), (32, 641, 160, 68, 17)),
        ("pooled-ar1", 12, (6, 8), (27, 181, 45, 71, 18)),
        ("pooled-ar1", 12, (6, 10), (31, 222, 56, 79, 20)),
        ("pooled-ar1", 12, (8, 10), (29, 97, 24, 72, 18)),
        ("pooled-ar1", 16, (8, 10), (21, 138, 35, 61, 15)),
        ("pooled-constant", 8, (4, 6), (18, 226, 57, 62, 16)),
        ("pooled-constant", 12, (6, 8), (11, 101, 25, 41, 10)),
        ("pooled-longitudinal", 12, (6, 8), (29, 187, 47, 73, 18)),
        ("pooled-longitudinal", 12, (6, 10), (34, 228, 57, 81, 20)),
        ("exposure-1", 8, (2, 4), (58, None, None, None, None)),
        ("exposure-1", 8, (4, 6), (54, 95, 24, 83, 21)),
        ("exposure-1", 12, (4, 8), (53, 89, 22, 65, 16)),
        ("exposure-1", 12, (6, 8), (52, 74, 19, 70, 18)),
        ("exposure-1", 12, (6, 10), (52, 72, 18, 65, 16)),
        ("exposure-1", 12, (8, 10), (51, 67, 17, 65, 16)),
        ("exposure-1", 16, (8, 10), (51, 62, 16, 60, 15)),
        ("exposure-3", 8, (2, 4), (78, None, None, None, None)),
        ("exposure-3", 8, (4, 6), (65, 268, 67, 83, 21)),
        ("exposure-3", 12, (4, 8), (63, 219, 55, 65, 16)),
        ("exposure-3", 12, (6, 8), (60, 127, 32, 70, 18)),
        ("exposure-3", 12, (6, 10), (59, 131, 33, 65, 16)),
        ("exposure-3", 12, (8, 10), (57, 106, 27, 65, 16)),
        ("exposure-3", 16, (8, 10), (57, 86, 22, 60, 15)),
        ("exposure-5", 8, (2, 4), (82, None, None, None, None)),
        ("exposure-5", 8, (4, 6), (141, 1604, 401, 167, 42)),
        ("exposure-5", 12, (4, 8), (65, 474, 119, 65, 16)),
        ("exposure-5", 12, (6, 8), (61, 250, 63, 70, 18)),
        ("exposure-5", 12, (6, 10), (126, 591, 148, 139, 35)),
        ("exposure-5", 12, (8, 10), (118, 410, 103, 139, 35)),
        ("exposure-5", 16, (8, 10), (58, 141, 35, 60, 15)),
    ]
)


def preset_design(name: str, est: EstimatorSpec, P: int | None = None,
                  S: tuple[int, ...] | None = None) -> ValidatedDesign:
    """Materialize a preset's design (as allocation shares) for an estimator."""
    p = PRESETS[name]
    P = P if P is not None else p["P"]
    S = tuple(S if S is not None else p["S"])
    K = len(S)
    if est.family.is_its:
        mt = tuple(1.0 / K for _ in S)
        mc = tuple(0.0 for _ in S)
    else:
        split = p["split"]
        mt = tuple(split / K for _ in S)
        mc = tuple((1.0 - split) / K for _ in S)
    spec = DesignSpec(P=P, S=S, M_T_k=mt, M_C_k=mc, N=p["N"])
    return validate_design(spec, est)


def preset_error_model(name: str, structure: str | None = None,
                       design_kind: str | None = None, rho: float | None = None,
                       psi: float | None = None) -> ErrorModel:
    p = PRESETS[name]
    kind = DesignKind(design_kind or p["design_kind"])
    return ErrorModel(
        ICC_theta=p["ICC_theta"],
        rho=p["rho"] if rho is None else rho,
        corr_structure=CorrStructure(structure or p["corr_structure"]),
        design_kind=kind,
        psi=(p["psi"] if psi is None else psi) if kind is DesignKind.LONGITUDINAL else 0.0,
    )


def preset_query(name: str, mde: float | None = None) -> PowerQuery:
    p = PRESETS[name]
    return PowerQuery(alpha=p["alpha"], power=p["lambda"], mde_target=mde if mde is not None else p["mde"])
