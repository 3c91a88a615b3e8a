"""EMA momentum and learning-rate schedules over normalized training progress."""

from __future__ import annotations

import math
import warnings


def ema_schedule(progress: float, start: float = 0.996, end: float = 1.0) -> float:
    """Cosine ramp of the teacher momentum from `start` at u=0 to `end` at u=1."""
    u = progress
    if not 0.0 <= u <= 1.0:
        warnings.warn(f"EMA schedule progress {u} clamped to [0, 1]", stacklevel=2)
        u = min(max(u, 0.0), 1.0)
    return end - (end - start) * (math.cos(math.pi * u) + 1.0) / 2.0


def lr_schedule(
    progress: float,
    peak: float = 7.5e-4,
    minimum: float = 1e-6,
    warmup_frac: float = 0.05,
) -> float:
    """Linear warmup to `peak`, then cosine decay to `minimum` at u=1."""
    u = min(max(progress, 0.0), 1.0)
    if warmup_frac > 0 and u < warmup_frac:
        return peak * u / warmup_frac
    span = 1.0 - warmup_frac
    s = (u - warmup_frac) / span if span > 0 else 1.0
    return minimum + (peak - minimum) * (math.cos(math.pi * s) + 1.0) / 2.0
