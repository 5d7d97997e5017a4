"""Error type shared across the engine.

Every rejection carries a stable machine-readable ``code`` so the CLI can
print it on stderr and the HTTP service can echo it in ``error.code``.
"""

from __future__ import annotations

__all__ = ["PanelPowerError"]


class PanelPowerError(ValueError):
    """Validation or computation failure with a stable error code.

    Codes in use:
        PERIOD_RANGE, NON_MONOTONE_TIMES, EMPTY_GROUP, ITS_WITH_COMPARISONS,
        CITS_TOO_FEW_PERIODS, NOT_POST_PERIOD, DEGENERATE_PERIOD,
        NO_GROUP_INCLUDED, R2_OUT_OF_RANGE, NUMERIC_GUARD, P_OUT_OF_RANGE,
        NONPOSITIVE_DF, NO_CONVERGENCE, SINGULAR_FIT
    """

    def __init__(self, code: str, message: str, field: str | None = None):
        super().__init__(f"{code}: {message}")
        self.code = code
        self.message = message
        self.field = field
