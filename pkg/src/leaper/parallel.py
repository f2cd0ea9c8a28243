"""Worker-count resolution; results never depend on the count chosen."""
from __future__ import annotations

import os

from joblib import Parallel, delayed

ENV_VAR = "LEAPER_THREADS"


def resolve_n_jobs(n_jobs: int | None = None) -> int:
    if n_jobs is None:
        raw = os.environ.get(ENV_VAR, "")
        n_jobs = int(raw) if raw.strip() else 1
    if n_jobs < 1:
        n_jobs = os.cpu_count() or 1
    return n_jobs


def parallel_map(func, items, n_jobs: int | None = None) -> list:
    """``[func(i) for i in items]``, possibly spread over worker threads."""
    n = resolve_n_jobs(n_jobs)
    items = list(items)
    if n == 1 or len(items) < 2:
        return [func(i) for i in items]
    return Parallel(n_jobs=n, prefer="threads")(delayed(func)(i) for i in items)
