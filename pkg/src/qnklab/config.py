"""Global numeric tolerances."""

from __future__ import annotations

import os

DEFAULT_TOL = 1e-10

ENV_TOL = "QNKLAB_TOL"


def residual_tolerance() -> float:
    """Residual tolerance used by validity checks and verifiers.

    Defaults to 1e-10; the QNKLAB_TOL environment variable overrides it.
    Read at call time so a change takes effect without re-import.
    """
    raw = os.environ.get(ENV_TOL)
    if raw is None:
        return DEFAULT_TOL
    value = float(raw)
    if value <= 0:
        raise ValueError(f"{ENV_TOL} must be positive, got {raw!r}")
    return value
