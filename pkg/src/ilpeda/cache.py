"""On-disk cache for expensive, deterministic artifacts (tablebase, pools)."""

import os
from pathlib import Path


def cache_dir() -> Path:
    root = os.environ.get("ILPEDA_CACHE")
    if root:
        p = Path(root)
    else:
        p = Path.home() / ".cache" / "ilpeda"
    p.mkdir(parents=True, exist_ok=True)
    return p
