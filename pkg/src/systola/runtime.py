"""Runtime knobs shared across modules."""

from __future__ import annotations

import os


def thread_count(default: int = 4) -> int:
    """Worker count for concurrent flows, capped by SYSTOLA_THREADS."""
    try:
        requested = int(os.environ.get("SYSTOLA_THREADS", default))
    except ValueError:
        requested = default
    cpus = os.cpu_count() or 1
    return max(1, min(requested, cpus))
