"""Small shared helpers."""

from __future__ import annotations

import os
import time
from contextlib import contextmanager
from typing import Iterator

import numpy as np
from rich.console import Console

THREADS_ENV = "SPECPRESERVE_THREADS"

err_console = Console(stderr=True)


def progress(message: str, verbose: bool) -> None:
    """Print a progress line to stderr when verbose."""
    if verbose:
        err_console.print(f"[dim]{message}[/dim]")


def make_rng(seed: int | np.random.SeedSequence) -> np.random.Generator:
    """Return a PCG64 generator for `seed`."""
    return np.random.default_rng(seed)


def spawn_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    """
    Derive independent per-trial seed sequences from one root seed.

    Trial k always receives the same child sequence whatever order the trials
    are evaluated in, so parallel sweeps merge to the same result as serial ones.

    Args:
        seed: Root seed recorded in reports.
        count: Number of child sequences.

    Returns:
        list[np.random.SeedSequence]: `count` children of `SeedSequence(seed)`.
    """
    return np.random.SeedSequence(seed).spawn(count)


def max_workers() -> int:
    """Resolve the worker cap from SPECPRESERVE_THREADS (default 1)."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or not raw.strip():
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if value < 1:
        raise ValueError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return value


def rel_close(a: float, b: float, tol: float) -> bool:
    """|a - b| <= tol * (1 + |b|)."""
    return abs(a - b) <= tol * (1.0 + abs(b))


@contextmanager
def stopwatch(timings: dict[str, float], key: str) -> Iterator[None]:
    """Record the wall time of the enclosed block under `key`."""
    start = time.perf_counter()
    try:
        yield
    finally:
        timings[key] = timings.get(key, 0.0) + (time.perf_counter() - start)
