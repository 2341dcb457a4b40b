from __future__ import annotations

import os


def default_workers() -> int:
    """Worker cap from ``PPP_THREADS``, else the machine's core count."""
    raw = os.environ.get("PPP_THREADS", "").strip()
    if raw:
        try:
            n = int(raw)
        except ValueError:
            raise ValueError(f"PPP_THREADS must be a positive integer, got {raw!r}") from None
        if n < 1:
            raise ValueError(f"PPP_THREADS must be a positive integer, got {raw!r}")
        return n
    return os.cpu_count() or 1
