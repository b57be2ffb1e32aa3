"""Core domain types: points, mapping families, problems, and run records.

Iterates live in R^d and are represented as plain 1-D float64 numpy arrays.
A :class:`MappingFamily` bundles ``n`` component mappings ``T_1, ..., T_n``
together with their exact mean ``T(x) = (1/n) sum_i T_i(x)``, which is the
operator whose fixed points the solvers target.  All types in this module are
immutable after construction and safe to share across threads; evaluation is
pure.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "DimensionMismatchError",
    "DivergenceError",
    "OracleError",
    "as_point",
    "f0_value",
    "exact_mean_apply",
    "MappingFamily",
    "CallableFamily",
    "OracleInfo",
    "Problem",
    "RunRecord",
    "EnsembleStats",
]


class DimensionMismatchError(ValueError):
    """Vector length does not match the expected dimension."""


class DivergenceError(RuntimeError):
    """An iterate left the finite range; carries the offending seed and step."""

    def __init__(self, message: str, seed: int | None = None, step: int | None = None):
        super().__init__(message)
        self.seed = seed
        self.step = step


class OracleError(RuntimeError):
    """An independent oracle failed to produce a certified solution."""


def as_point(x, dim: int | None = None, name: str = "x") -> np.ndarray:
    """Validate and convert ``x`` to a 1-D float64 array.

    Rejects empty vectors, NaN/Inf entries, and (when ``dim`` is given)
    length mismatches.
    """
    arr = np.asarray(x, dtype=float)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a 1-D vector with at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite coordinates")
    if dim is not None and arr.size != dim:
        raise DimensionMismatchError(f"{name} has length {arr.size}, expected {dim}")
    return arr


def f0_value(x, x0) -> float:
    """Half squared distance to the anchor: ``(1/2) ||x - x0||^2``.

    This is the objective the anchored iteration minimizes over the fixed
    point set; its gradient at ``x`` is ``x - x0``.
    """
    xa = as_point(x, name="x")
    x0a = as_point(x0, dim=xa.size, name="x0")
    d = xa - x0a
    return 0.5 * float(d @ d)


class MappingFamily:
    """A finite family of mappings ``T_i: R^d -> R^d`` with exact-mean access.

    Subclasses provide :meth:`eval_all`, returning the stacked component
    values at a point.  Component indices are 1-based in the public API,
    matching the sampling convention; row ``i`` of :meth:`eval_all` holds
    ``T_{i+1}(x)``.

    Parameters
    ----------
    dim : int
        Ambient dimension ``d``.
    n : int
        Number of component mappings.
    kind : str
        Tag describing the construction: ``"projection-mean"``,
        ``"gradient-mean"``, or ``"custom"``.
    """

    def __init__(self, dim: int, n: int, kind: str = "custom"):
        if dim < 1:
            raise ValueError("dimension must be >= 1")
        if n < 1:
            raise ValueError("family size must be >= 1")
        self._dim = int(dim)
        self._n = int(n)
        self._kind = str(kind)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def n(self) -> int:
        return self._n

    @property
    def kind(self) -> str:
        return self._kind

    def eval_all(self, x: np.ndarray) -> np.ndarray:
        """Evaluate every component at ``x``; returns an ``(n, d)`` array."""
        raise NotImplementedError

    def component(self, i: int, x) -> np.ndarray:
        """Evaluate ``T_i(x)`` for a 1-based index ``i``."""
        if not 1 <= i <= self._n:
            raise IndexError(f"component index {i} outside [1, {self._n}]")
        xa = as_point(x, dim=self._dim)
        return self.eval_all(xa)[i - 1]

    def mean(self, x) -> np.ndarray:
        """Exact mean ``T(x) = (1/n) sum_i T_i(x)``, summed in index order."""
        xa = as_point(x, dim=self._dim)
        return self.eval_all(xa).sum(axis=0) / self._n

    def mean_of_counts(self, counts: np.ndarray, x: np.ndarray) -> np.ndarray:
        """Weighted mean ``sum_i (c_i / b) T_i(x)`` with ``b = sum_i c_i``.

        This is the value of a sampled mini-batch mean in which component
        ``i`` was drawn ``c_i`` times; grouping equal draws first is exact
        in real arithmetic.  Hot path: skips point validation.
        """
        b = counts.sum()
        if b <= 0:
            raise ValueError("counts must sum to a positive batch size")
        w = counts / b
        return w @ self.eval_all(x)

    def __repr__(self) -> str:  # pragma: no cover
        return f"{type(self).__name__}(n={self._n}, dim={self._dim}, kind={self._kind!r})"


class CallableFamily(MappingFamily):
    """Family built from arbitrary Python callables (one per component)."""

    def __init__(self, components: Sequence[Callable[[np.ndarray], np.ndarray]],
                 dim: int, kind: str = "custom"):
        super().__init__(dim=dim, n=len(components), kind=kind)
        self._components = list(components)

    def eval_all(self, x: np.ndarray) -> np.ndarray:
        out = np.empty((self._n, self._dim))
        for i, t in enumerate(self._components):
            out[i] = np.asarray(t(x), dtype=float)
        return out


def exact_mean_apply(family: MappingFamily, x) -> np.ndarray:
    """Apply the exact mean mapping ``T = (1/n) sum_i T_i`` at ``x``."""
    return family.mean(x)


@dataclass(frozen=True)
class OracleInfo:
    """Data sufficient to compute the anchor's projection onto Fix(T) independently.

    ``kind`` selects the oracle route: ``"halfspaces"`` (cyclic-projection
    oracle over the stored halfspace list) or ``"quadratic"`` (normal
    equations over the stored least-squares terms).
    """

    kind: str
    data: tuple


@dataclass
class Problem:
    """A fixed-point problem instance: family, anchor point, optional oracle data.

    ``x0`` doubles as the initial iterate and the anchor of the anchored
    iterations; the target point is the projection of ``x0`` onto the fixed
    point set of the family mean.
    """

    family: MappingFamily
    x0: np.ndarray
    oracle_info: OracleInfo | None = None
    name: str = "problem"
    _oracle_cache: object = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.x0 = as_point(self.x0, dim=self.family.dim, name="x0")


@dataclass
class RunRecord:
    """Per-iteration trace of a single solver run.

    Rows are recorded at stride ``record_every`` plus the final iterate; ``ks``
    is strictly increasing from 0.  ``alphas`` and ``batch_sizes`` hold the
    schedule values at each recorded ``k`` (for the final row these are the
    values a further step would use).  ``dist_sq`` and ``batch_dist_sq`` are
    present only when the problem carries oracle data; ``step_norms`` holds
    ``||x_{k+1} - x_k||`` (NaN on the final row, where no step was taken).
    """

    ks: np.ndarray
    alphas: np.ndarray
    batch_sizes: np.ndarray
    residuals: np.ndarray
    f0_values: np.ndarray
    dist_sq: np.ndarray | None
    batch_dist_sq: np.ndarray | None
    step_norms: np.ndarray
    final_point: np.ndarray
    seed: int
    method: str

    def __post_init__(self):
        ks = np.asarray(self.ks)
        if ks.size == 0 or ks[0] != 0 or np.any(np.diff(ks) <= 0):
            raise ValueError("recorded ks must increase strictly from 0")
        if np.any(self.residuals < 0) or np.any(self.f0_values < 0):
            raise ValueError("residuals and f0 values must be nonnegative")


@dataclass
class EnsembleStats:
    """Monte-Carlo aggregates over independent trials of one configuration.

    Arrays are aligned with ``ks``.  ``f0gap_*`` is the signed gap
    ``mean f0(x_k) - f0_star`` when an oracle is available (raw ``f0``
    otherwise, with ``f0_star = 0``).  Standard errors use the unbiased
    sample variance across trials.
    """

    ks: np.ndarray
    alphas: np.ndarray
    batch_sizes: np.ndarray
    residual_mean: np.ndarray
    residual_se: np.ndarray
    f0gap_mean: np.ndarray
    f0gap_se: np.ndarray
    msq_dist_mean: np.ndarray | None
    msq_dist_se: np.ndarray | None
    batch_msq_mean: np.ndarray | None
    batch_msq_se: np.ndarray | None
    step_norm_mean: np.ndarray
    trial_count: int
    f0_star: float
    x_star: np.ndarray | None
    trial_seeds: np.ndarray

    def __post_init__(self):
        if self.trial_count < 2:
            raise ValueError("standard errors require at least two trials")
