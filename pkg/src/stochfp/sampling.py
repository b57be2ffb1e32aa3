"""Seeded i.i.d. index sampling and mini-batch evaluation.

Indices are drawn uniformly on ``{1, ..., n}`` with replacement.  Each
iteration ``k`` of a run owns an independent substream derived from
``(seed, k)`` by a counter-based split, so changing the batch size at one
iteration never perturbs the draws at any other iteration, and identical
``(seed, k, n, b)`` always reproduce the same draw bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import MappingFamily, as_point

__all__ = ["iteration_rng", "BatchDraw", "sample_batch", "apply_mini_batch"]


def iteration_rng(seed: int, k: int) -> np.random.Generator:
    """Independent generator for iteration ``k`` of the stream ``seed``."""
    return np.random.Generator(
        np.random.PCG64(np.random.SeedSequence(entropy=seed, spawn_key=(k,)))
    )


@dataclass(frozen=True)
class BatchDraw:
    """One mini-batch of sampled component indices.

    ``indices`` are 1-based, each in ``[1, n]``, duplicates allowed; the
    length is the batch size.  ``k`` and ``seed`` locate the draw in the
    run's random stream.
    """

    indices: np.ndarray
    n: int
    k: int
    seed: int

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1 or idx.size < 1:
            raise ValueError("a draw must contain at least one index")
        if idx.min() < 1 or idx.max() > self.n:
            raise ValueError(f"indices must lie in [1, {self.n}]")
        object.__setattr__(self, "indices", idx)

    @property
    def batch_size(self) -> int:
        return self.indices.size

    def counts(self) -> np.ndarray:
        """Occurrences of each component, index-ascending; length ``n``."""
        return np.bincount(self.indices - 1, minlength=self.n)


def sample_batch(seed: int, k: int, n: int, b: int) -> BatchDraw:
    """Draw ``b`` indices i.i.d. uniform on ``[1, n]`` with replacement.

    Deterministic given ``(seed, k, n, b)``; distinct iterations or distinct
    seeds give independent streams.
    """
    if n < 1 or b < 1:
        raise ValueError("n and b must be >= 1")
    rng = iteration_rng(seed, k)
    idx = rng.integers(1, n + 1, size=b, dtype=np.int64)
    return BatchDraw(indices=idx, n=n, k=k, seed=seed)


def apply_mini_batch(family: MappingFamily, draw: BatchDraw, x) -> np.ndarray:
    """Arithmetic mean of the drawn components at ``x``.

    Equal indices are grouped first (index-ascending), so the result is
    ``sum_i (c_i / b) * T_i(x)`` with ``c_i`` the draw counts; this matches
    the plain sequential mean exactly in real arithmetic.
    """
    if draw.n != family.n:
        raise ValueError(f"draw was taken over {draw.n} components, family has {family.n}")
    xa = as_point(x, dim=family.dim)
    return family.mean_of_counts(draw.counts(), xa)
