"""Problem instances: minimize the product norm of anchor displacements.

An instance is a list of distinct anchor points plus a product norm.  The
objective at a point is the product norm of the stacked differences between
the point and each anchor.  This module evaluates the objective, bounds where
minimizers can live, classifies uniqueness, and produces subgradients with a
verified dual-block decomposition.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import (
    ArityMismatchError,
    InternalConsistencyError,
    InvalidInputError,
)
from .ground_norms import (
    DEFAULT_TOL,
    GroundNorm,
    as_vector,
    dual_ground_norm,
    ground_norm_eval,
    ground_norm_eval_many,
)
from .product_norms import (
    ProductNorm,
    _from_block_norms_many,
    product_norm_from_block_norms,
)
from .psi_generators import dual_norm_from_block_norms

# Anchors closer than this are considered duplicated.
_MIN_ANCHOR_GAP = 1e-12

# Relative tie width when spreading max-generator weight across blocks.
_TIE_RTOL = 1e-12

STRICTLY_CONVEX = "strictly_convex"
STRICT_BY_COLLINEARITY = "strict_by_collinearity"
UNKNOWN = "unknown"


@dataclasses.dataclass(frozen=True)
class ProblemInstance:
    """Distinct anchors stacked as rows, plus the product norm to minimize."""

    anchors: np.ndarray
    norm: ProductNorm

    def __post_init__(self):
        arr = np.asarray(self.anchors, dtype=float)
        if arr.ndim != 2 or arr.shape[0] < 2 or arr.shape[1] < 1:
            raise InvalidInputError(
                f"anchors must be an (n, d) stack with n >= 2, got shape {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("anchors must be finite")
        diffs = arr[:, None, :] - arr[None, :, :]
        dists = np.sqrt((diffs * diffs).sum(-1))
        np.fill_diagonal(dists, np.inf)
        if dists.min() <= _MIN_ANCHOR_GAP:
            raise InvalidInputError("anchors must be distinct")
        if not self.norm.arity_accepts(arr.shape[0]):
            raise ArityMismatchError(
                f"anchor count {arr.shape[0]} disagrees with generator arity "
                f"{self.norm.generator.arity}"
            )
        object.__setattr__(self, "anchors", arr)

    @property
    def n(self) -> int:
        return self.anchors.shape[0]

    @property
    def dim(self) -> int:
        return self.anchors.shape[1]

    def centroid(self) -> np.ndarray:
        return self.anchors.mean(axis=0)


def displacements(prob: ProblemInstance, u) -> np.ndarray:
    """Block stack of ``u`` minus each anchor."""
    u = as_vector(u, "u")
    if u.size != prob.dim:
        raise InvalidInputError(
            f"point has dimension {u.size}, anchors have dimension {prob.dim}"
        )
    return u[None, :] - prob.anchors


def objective_eval(prob: ProblemInstance, u) -> float:
    """Objective value at ``u``."""
    r = ground_norm_eval_many(prob.norm.ground, displacements(prob, u))
    return product_norm_from_block_norms(prob.norm.generator, r)


def objective_eval_many(prob: ProblemInstance, us: np.ndarray) -> np.ndarray:
    """Vectorized objective over rows of ``us``."""
    us = np.asarray(us, dtype=float)
    if us.ndim != 2 or us.shape[1] != prob.dim:
        raise InvalidInputError(f"points must form an (N, {prob.dim}) array")
    diffs = us[:, None, :] - prob.anchors[None, :, :]
    r = ground_norm_eval_many(prob.norm.ground, diffs)
    return _from_block_norms_many(prob.norm.generator, r)


@dataclasses.dataclass(frozen=True)
class SolveBound:
    """Ground-norm ball guaranteed to contain every minimizer."""

    radius: float


def solve_bound(prob: ProblemInstance) -> SolveBound:
    """Every minimizer has ground norm at most (1 + 1/n) times the anchor norm total."""
    total = float(sum(ground_norm_eval(prob.norm.ground, v) for v in prob.anchors))
    return SolveBound(radius=(1.0 + 1.0 / prob.n) * total)


def _ground_subgradient(nrm: GroundNorm, x: np.ndarray) -> np.ndarray:
    """A deterministic subgradient selection of the ground norm at ``x``.

    Returns the zero vector at the origin; elsewhere a unit-dual-norm vector
    whose pairing with ``x`` equals the norm (up to tie rounding for the max
    kind).
    """
    if not np.any(x):
        return np.zeros_like(x)
    if nrm.kind == "euclidean":
        return x / float(np.linalg.norm(x))
    if nrm.kind == "sum":
        return np.sign(x)
    if nrm.kind == "max":
        a = np.abs(x)
        m = float(a.max())
        active = a >= m * (1.0 - _TIE_RTOL)
        g = np.zeros_like(x)
        g[active] = np.sign(x[active]) / int(active.sum())
        return g
    nx = float(ground_norm_eval(nrm, x))
    return np.sign(x) * (np.abs(x) / nx) ** (nrm.p - 1.0)


def dual_selection(prob: ProblemInstance, u) -> np.ndarray:
    """Dual block stack certifying a subgradient of the objective at ``u``.

    The blocks have unit dual product norm and their pairing with the anchor
    displacements equals the objective value; both facts are verified before
    returning.  Summing the blocks gives an objective subgradient.
    """
    diffs = displacements(prob, u)
    r = ground_norm_eval_many(prob.norm.ground, diffs)
    gen = prob.norm.generator
    if gen.kind != "p":
        raise InvalidInputError("dual selection requires a power generator")
    selections = np.stack([_ground_subgradient(prob.norm.ground, row) for row in diffs])
    p = gen.p
    if p == 1.0:
        duals = selections
    elif p == math.inf:
        m = float(r.max())
        active = r >= m * (1.0 - _TIE_RTOL)
        weights = np.where(active, 1.0 / int(active.sum()), 0.0)
        duals = weights[:, None] * selections
    else:
        f = product_norm_from_block_norms(gen, r)
        weights = (r / f) ** (p - 1.0)
        duals = weights[:, None] * selections
    _verify_dual_selection(prob, diffs, r, duals)
    return duals


def _verify_dual_selection(
    prob: ProblemInstance, diffs: np.ndarray, r: np.ndarray, duals: np.ndarray
) -> None:
    f = product_norm_from_block_norms(prob.norm.generator, r)
    rstar = ground_norm_eval_many(dual_ground_norm(prob.norm.ground), duals)
    dual_norm = float(dual_norm_from_block_norms(prob.norm.generator, rstar))
    paired = float(np.sum(duals * diffs))
    scale = max(1.0, f)
    if abs(dual_norm - 1.0) > 1e-7 or abs(paired - f) > 1e-7 * scale:
        raise InternalConsistencyError(
            "dual selection failed verification: "
            f"dual_norm={dual_norm!r} pairing={paired!r} objective={f!r}"
        )


def objective_subgradient(prob: ProblemInstance, u) -> np.ndarray:
    """A subgradient of the objective at ``u`` (sum of the dual selection)."""
    return dual_selection(prob, u).sum(axis=0)


def strict_convexity_class(prob: ProblemInstance) -> str:
    """Classify uniqueness of the minimizer from norm structure and anchors.

    "strictly_convex" needs strictly convex ground and generator, giving a
    unique minimizer for every anchor set.  The constant generator with a
    strictly convex ground is strict unless the anchors are collinear, tested
    by a singular-value ratio at 1e-9.  Everything else is "unknown".
    """
    ground_strict = prob.norm.ground.kind in ("p", "euclidean")
    gen = prob.norm.generator
    gen_strict = gen.kind == "p" and gen.p != 1.0 and gen.p != math.inf
    if ground_strict and gen_strict:
        return STRICTLY_CONVEX
    if ground_strict and gen.kind == "p" and gen.p == 1.0:
        diffs = prob.anchors[1:] - prob.anchors[0]
        s = np.linalg.svd(diffs, compute_uv=False)
        collinear = s.size < 2 or s[1] <= 1e-9 * s[0]
        if not collinear:
            return STRICT_BY_COLLINEARITY
    return UNKNOWN
