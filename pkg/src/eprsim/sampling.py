"""Deterministic sharded shot engine.

Shots are cut into fixed-size chunks. Chunk ``k`` of stream ``s`` under seed
``seed`` always draws from a Philox generator keyed by ``(seed, s, k)``, so the
concatenated output depends only on the seed and shot count, never on how many
workers ran the chunks.
"""
from __future__ import annotations

import os
import zlib
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

CHUNK_SHOTS = 1 << 16
WORKERS_ENV = "EPRSIM_WORKERS"


def resolve_workers(workers: int | None = None) -> int:
    if workers is None:
        env = os.environ.get(WORKERS_ENV)
        workers = int(env) if env else 1
    if workers < 1:
        raise ValueError(f"workers must be >= 1, got {workers}")
    return workers


def stream_id(label: str) -> int:
    """Stable 32-bit id for a named random stream."""
    return zlib.crc32(label.encode("utf-8"))


def chunk_rng(seed: int, stream: int, index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([seed, stream, index])))


def chunk_sizes(shots: int, chunk: int = CHUNK_SHOTS) -> list[int]:
    full, rest = divmod(shots, chunk)
    return [chunk] * full + ([rest] if rest else [])


def run_sharded(
    fn: Callable[[np.random.Generator, int], np.ndarray],
    shots: int,
    seed: int,
    label: str,
    workers: int | None = None,
    chunk: int = CHUNK_SHOTS,
) -> np.ndarray:
    """Evaluate ``fn(rng, n)`` over all chunks and concatenate along axis 0."""
    if seed is None:
        raise ValueError("a seed is required for sampled estimates")
    if shots <= 0:
        raise ValueError("shots must be positive")
    sizes = chunk_sizes(shots, chunk)
    stream = stream_id(label)
    jobs = [(i, n) for i, n in enumerate(sizes)]

    def work(job):
        i, n = job
        return fn(chunk_rng(seed, stream, i), n)

    workers = resolve_workers(workers)
    if workers == 1 or len(jobs) == 1:
        parts = [work(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(work, jobs))
    return np.concatenate(parts, axis=0)


def sample_categorical(probs: np.ndarray, rng: np.random.Generator, n: int) -> np.ndarray:
    """Draw ``n`` indices from a fixed probability vector."""
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return np.searchsorted(cdf, rng.random(n), side="right").clip(0, len(probs) - 1)
