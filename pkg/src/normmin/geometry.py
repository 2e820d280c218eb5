"""Small exact-geometry helpers: ball projections and convex hulls."""

from __future__ import annotations

import itertools

import numpy as np

from .errors import ContractError
from .ground_norms import GroundNorm, ground_norm_eval

_HULL_MAX_POINTS = 16


def project_onto_ball(nrm: GroundNorm, u: np.ndarray, radius: float) -> np.ndarray:
    """Project onto the closed ``nrm`` ball of given radius.

    Coordinate clipping for the max norm, sorting-based shrinkage for the sum
    norm, radial scaling for the Euclidean and power kinds (exact for the
    Euclidean norm, norm-decreasing and idempotent for power norms, which is
    all the solver needs).
    """
    u = np.asarray(u, dtype=float)
    if ground_norm_eval(nrm, u) <= radius:
        return u.copy()
    if nrm.kind == "max":
        return np.clip(u, -radius, radius)
    if nrm.kind == "sum":
        return _project_l1(u, radius)
    return u * (radius / ground_norm_eval(nrm, u))


def _project_l1(u: np.ndarray, radius: float) -> np.ndarray:
    """Euclidean projection onto the sum-norm ball, by soft thresholding."""
    a = np.abs(u)
    if a.sum() <= radius:
        return u.copy()
    s = np.sort(a)[::-1]
    cumsum = np.cumsum(s)
    ks = np.arange(1, a.size + 1)
    theta_candidates = (cumsum - radius) / ks
    valid = s - theta_candidates > 0
    k = int(np.max(ks[valid]))
    theta = (cumsum[k - 1] - radius) / k
    return np.sign(u) * np.maximum(a - theta, 0.0)


def affine_hull_basis(points: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal basis of the affine hull of the rows of ``points``.

    Returns (origin, basis) with basis of shape (d, k); k may be zero when
    all points coincide.
    """
    pts = np.asarray(points, dtype=float)
    origin = pts.mean(axis=0)
    diffs = pts - origin
    u, s, vt = np.linalg.svd(diffs, full_matrices=False)
    if s.size == 0 or s[0] == 0.0:
        return origin, np.zeros((pts.shape[1], 0))
    rank = int(np.sum(s > 1e-12 * s[0]))
    return origin, vt[:rank].T


def project_onto_convex_hull(points: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``u`` onto the convex hull of the rows.

    Enumerates candidate faces (all point subsets), solves the affine
    least-squares system on each, and keeps the feasible candidate nearest to
    ``u``.  Exact and deterministic; intended for small point counts.
    """
    pts = np.asarray(points, dtype=float)
    u = np.asarray(u, dtype=float)
    n = pts.shape[0]
    if n > _HULL_MAX_POINTS:
        raise ContractError(f"hull projection supports at most {_HULL_MAX_POINTS} points")
    best = None
    best_dist = np.inf
    for size in range(1, n + 1):
        for subset in itertools.combinations(range(n), size):
            sub = pts[list(subset)]
            k = sub.shape[0]
            if k == 1:
                cand = sub[0]
            else:
                gram = sub @ sub.T
                kkt = np.zeros((k + 1, k + 1))
                kkt[:k, :k] = gram
                kkt[:k, k] = 1.0
                kkt[k, :k] = 1.0
                rhs = np.concatenate([sub @ u, [1.0]])
                sol, *_ = np.linalg.lstsq(kkt, rhs, rcond=None)
                lam = sol[:k]
                if lam.min() < -1e-12 or abs(lam.sum() - 1.0) > 1e-9:
                    continue
                cand = lam @ sub
            dist = float(np.linalg.norm(cand - u))
            if dist < best_dist - 1e-15:
                best_dist = dist
                best = cand
    return np.array(best, dtype=float)


def hull_distance(points: np.ndarray, u: np.ndarray) -> float:
    """Euclidean distance from ``u`` to the convex hull of the rows."""
    proj = project_onto_convex_hull(points, u)
    return float(np.linalg.norm(np.asarray(u, dtype=float) - proj))
