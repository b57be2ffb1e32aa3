"""Built-in nonexpansive mapping families.

Two constructions are provided:

* projection means — each component is the metric projection onto a
  halfspace, so the mean's fixed points are exactly the intersection of the
  halfspaces (when nonempty);
* gradient-step means — each component is ``Id - eta * grad f_i`` for a
  quadratic least-squares term ``f_i(x) = (1/2)||A_i x - b_i||^2``, so the
  mean's fixed points are the minimizers of the averaged objective.

Both are nonexpansive componentwise: halfspace projections are firmly
nonexpansive, and the gradient steps are nonexpansive whenever
``eta <= 2 / L_i`` with ``L_i`` the largest eigenvalue of ``A_i^T A_i``.
The lambda-averaging combinator blends any family with the identity,
which preserves the fixed point set and shrinks the componentwise spread
by a factor ``(1 - lambda)``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import MappingFamily, as_point

__all__ = [
    "NonexpansivityError",
    "Halfspace",
    "project_halfspace",
    "ProjectionFamily",
    "make_projection_family",
    "QuadraticTerm",
    "GradientFamily",
    "make_gradient_family",
    "AveragedFamily",
    "make_averaged",
    "power_iteration_largest_eig",
]


class NonexpansivityError(ValueError):
    """Requested parameters would break componentwise nonexpansivity."""


@dataclass(frozen=True)
class Halfspace:
    """The set ``{x : <normal, x> <= offset}``."""

    normal: np.ndarray
    offset: float

    def __post_init__(self):
        n = as_point(self.normal, name="normal")
        if float(n @ n) == 0.0:
            raise ValueError("halfspace normal must be nonzero")
        object.__setattr__(self, "normal", n)
        object.__setattr__(self, "offset", float(self.offset))

    @property
    def dim(self) -> int:
        return self.normal.size

    def contains(self, x, tol: float = 0.0) -> bool:
        return float(self.normal @ as_point(x, dim=self.dim)) <= self.offset + tol


def project_halfspace(h: Halfspace, x) -> np.ndarray:
    """Metric projection onto a halfspace.

    Returns ``x`` unchanged when it already satisfies the constraint;
    otherwise drops it orthogonally onto the boundary hyperplane:
    ``x - max(0, <a,x> - beta) / ||a||^2 * a``.
    """
    xa = as_point(x, dim=h.dim)
    a = h.normal
    viol = float(a @ xa) - h.offset
    if viol <= 0.0:
        return xa.copy()
    return xa - (viol / float(a @ a)) * a


class ProjectionFamily(MappingFamily):
    """Mean-of-projections family over a list of halfspaces."""

    def __init__(self, halfspaces: Sequence[Halfspace]):
        if len(halfspaces) == 0:
            raise ValueError("need at least one halfspace")
        dim = halfspaces[0].dim
        for h in halfspaces:
            if h.dim != dim:
                raise ValueError("halfspaces have mixed dimensions")
        super().__init__(dim=dim, n=len(halfspaces), kind="projection-mean")
        self.halfspaces = tuple(halfspaces)
        self._A = np.stack([h.normal for h in halfspaces])
        self._beta = np.array([h.offset for h in halfspaces])
        self._inv_norm_sq = 1.0 / np.einsum("ij,ij->i", self._A, self._A)

    def eval_all(self, x: np.ndarray) -> np.ndarray:
        viol = self._A @ x - self._beta
        coef = np.maximum(viol, 0.0) * self._inv_norm_sq
        return x[None, :] - coef[:, None] * self._A


def make_projection_family(halfspaces: Sequence[Halfspace]) -> ProjectionFamily:
    """Family whose component ``i`` projects onto halfspace ``i``.

    The mean's fixed points are the intersection of the halfspaces whenever
    that intersection is nonempty (the caller is responsible for
    feasibility; the projection oracle detects empty intersections).
    """
    return ProjectionFamily(halfspaces)


def power_iteration_largest_eig(mat: np.ndarray, seed: int = 0,
                                tol: float = 1e-10, max_iter: int = 10_000) -> float:
    """Largest eigenvalue of a symmetric PSD matrix by power iteration."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(mat.shape[0])
    v /= np.linalg.norm(v)
    lam = 0.0
    for _ in range(max_iter):
        w = mat @ v
        nw = np.linalg.norm(w)
        if nw == 0.0:
            return 0.0
        v_new = w / nw
        lam_new = float(v_new @ (mat @ v_new))
        if abs(lam_new - lam) <= tol * max(1.0, abs(lam_new)):
            return lam_new
        v, lam = v_new, lam_new
    return lam


@dataclass(frozen=True)
class QuadraticTerm:
    """Least-squares term ``f(x) = (1/2)||A x - b||^2`` with gradient ``A^T(Ax - b)``."""

    A: np.ndarray
    b: np.ndarray
    check_rank: bool = True

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if A.ndim != 2 or b.ndim != 1 or A.shape[0] != b.size:
            raise ValueError("A must be (m, d) and b must be length m")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("term data must be finite")
        if self.check_rank:
            smin = np.linalg.svd(A, compute_uv=False).min() if A.shape[0] >= A.shape[1] else 0.0
            if smin <= 1e-10:
                raise ValueError(
                    "A must have full column rank (smallest singular value > 1e-10) "
                    "for the singleton-oracle problem"
                )
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.A.shape[1]

    def gradient(self, x: np.ndarray) -> np.ndarray:
        return self.A.T @ (self.A @ x - self.b)

    def lipschitz(self, seed: int = 0) -> float:
        """Gradient Lipschitz constant: largest eigenvalue of ``A^T A``."""
        return power_iteration_largest_eig(self.A.T @ self.A, seed=seed)


class GradientFamily(MappingFamily):
    """Family of gradient steps ``T_i = Id - eta * grad f_i`` on quadratic terms."""

    def __init__(self, terms: Sequence[QuadraticTerm], eta: float, l_max: float):
        if len(terms) == 0:
            raise ValueError("need at least one term")
        dim = terms[0].dim
        for t in terms:
            if t.dim != dim:
                raise ValueError("terms have mixed dimensions")
        super().__init__(dim=dim, n=len(terms), kind="gradient-mean")
        self.terms = tuple(terms)
        self.eta = float(eta)
        self.l_max = float(l_max)
        # stacked eta * A_i^T A_i and eta * A_i^T b_i, so each component is
        # T_i(x) = x - G_i x + h_i
        self._G = self.eta * np.stack([t.A.T @ t.A for t in terms])
        self._h = self.eta * np.stack([t.A.T @ t.b for t in terms])

    def eval_all(self, x: np.ndarray) -> np.ndarray:
        return x[None, :] - np.einsum("nij,j->ni", self._G, x) + self._h


def make_gradient_family(terms: Sequence[QuadraticTerm], eta="auto",
                         seed: int = 0) -> GradientFamily:
    """Family with ``T_i = Id - eta * grad f_i`` over quadratic terms.

    Parameters
    ----------
    terms : sequence of QuadraticTerm
        The component objectives.
    eta : float or "auto"
        Step length.  ``"auto"`` computes ``L_max = max_i lambda_max(A_i^T A_i)``
        by power iteration (tolerance 1e-10, at most 10_000 iterations) and
        uses ``1 / L_max``, keeping a safety margin inside the nonexpansivity
        region ``eta <= 2 / L_max``.
    seed : int
        Seed for the power-iteration start vectors.

    Raises
    ------
    NonexpansivityError
        If an explicit ``eta`` exceeds ``2 / L_max``.
    """
    l_max = max(t.lipschitz(seed=seed + i) for i, t in enumerate(terms))
    if eta == "auto":
        if l_max <= 0.0:
            raise ValueError("auto step requires a nonzero term")
        eta_val = 1.0 / l_max
    else:
        eta_val = float(eta)
        if eta_val < 0.0:
            raise ValueError("eta must be nonnegative")
        if l_max > 0.0 and eta_val > 2.0 / l_max + 1e-15:
            raise NonexpansivityError(
                f"nonexpansivity violated: eta={eta_val} exceeds 2/L_max={2.0 / l_max}"
            )
    return GradientFamily(terms, eta_val, l_max)


class AveragedFamily(MappingFamily):
    """Blend of a base family with the identity: ``T_i^lam = lam*Id + (1-lam)*T_i``.

    Shares the base family's fixed points and scales its componentwise
    variance by ``(1 - lam)^2``.
    """

    def __init__(self, base: MappingFamily, lam: float):
        if not 0.0 <= lam <= 1.0:
            raise ValueError("lambda must lie in [0, 1]")
        super().__init__(dim=base.dim, n=base.n, kind=base.kind)
        self.base = base
        self.lam = float(lam)

    def eval_all(self, x: np.ndarray) -> np.ndarray:
        return self.lam * x[None, :] + (1.0 - self.lam) * self.base.eval_all(x)


def make_averaged(base: MappingFamily, lam: float) -> AveragedFamily:
    """Convex combination of the identity and each component of ``base``."""
    return AveragedFamily(base, lam)
