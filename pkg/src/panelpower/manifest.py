"""Run manifest embedded in every CLI output for reproducibility."""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from datetime import datetime, timezone

from . import __version__

__all__ = ["RunManifest", "default_seed"]


def default_seed() -> int:
    """Seed from PANELPOWER_SEED, falling back to 0."""
    raw = os.environ.get("PANELPOWER_SEED")
    return int(raw) if raw else 0


@dataclass(frozen=True)
class RunManifest:
    """Command name plus the fully resolved parameter set that produced an output."""

    command: str
    parameters: dict
    seed: int | None = None
    version: str = __version__
    timestamp: str = field(default_factory=lambda: datetime.now(timezone.utc).isoformat(timespec="seconds"))

    def to_dict(self) -> dict:
        d = {
            "command": self.command,
            "parameters": self.parameters,
            "version": self.version,
            "timestamp": self.timestamp,
        }
        if self.seed is not None:
            d["seed"] = self.seed
        return d
