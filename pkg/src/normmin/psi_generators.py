"""Generator functions on the weight simplex and their conjugates.

A generator is a convex continuous function on the probability simplex that
equals 1 at every vertex and never drops when one weight is zeroed out and the
rest are renormalized.  Built-in generators are the power family (exponent 1
gives the constant-one function, infinity gives the max of the weights);
arbitrary callables can be wrapped as tabulated generators and are validated
by sampling.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable

import numpy as np

from .errors import (
    BudgetExceededError,
    ContractError,
    InvalidInputError,
    MembershipViolationError,
)
from .ground_norms import DEFAULT_TOL, _power_norm

# Sum-to-one slack accepted on simplex points.
SIMPLEX_TOL = 1e-12

# Tabulated generator values may stray this far outside [max(t), 1] before an
# evaluation is rejected outright.
_EVAL_BAND = 1e-7

MAX_TABULATED_ARITY = 8

# Composition counts above this abort the lattice search instead of hanging.
_MAX_LATTICE_POINTS = 3_000_000


def as_simplex_point(t, name: str = "weights") -> np.ndarray:
    """Validate a nonnegative weight vector summing to one."""
    arr = np.asarray(t, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidInputError(f"{name} must be a 1-D vector with at least 2 entries")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} must be finite")
    if arr.min() < -SIMPLEX_TOL or arr.max() > 1.0 + SIMPLEX_TOL:
        raise MembershipViolationError(f"{name} must lie in [0, 1]")
    if abs(float(arr.sum()) - 1.0) > 100 * SIMPLEX_TOL:
        raise MembershipViolationError(f"{name} must sum to 1, got {float(arr.sum())!r}")
    return arr


def conjugate_exponent(p: float) -> float:
    if p == 1.0:
        return math.inf
    if p == math.inf:
        return 1.0
    return p / (p - 1.0)


@dataclasses.dataclass(frozen=True)
class PsiGenerator:
    """Generator on the weight simplex.

    ``kind`` is "p" for the built-in power family (``p`` in [1, inf]) or
    "tabulated" for a user callable with a fixed arity.  Power generators work
    at any arity; ``arity`` is None for them.
    """

    kind: str
    p: float | None = None
    func: Callable[[np.ndarray], float] | None = None
    arity: int | None = None
    symmetric: bool = True

    def __post_init__(self):
        if self.kind == "p":
            if self.p is None or (self.p != math.inf and not 1.0 <= float(self.p)):
                raise InvalidInputError("power generator needs exponent in [1, inf]")
            if self.p != math.inf:
                object.__setattr__(self, "p", float(self.p))
            if self.func is not None or self.arity is not None:
                raise InvalidInputError("power generator takes no callable or arity")
            object.__setattr__(self, "symmetric", True)
        elif self.kind == "tabulated":
            if self.func is None:
                raise InvalidInputError("tabulated generator needs a callable")
            if self.arity is None or int(self.arity) < 2:
                raise InvalidInputError("tabulated generator needs arity >= 2")
            if int(self.arity) > MAX_TABULATED_ARITY:
                raise ContractError(
                    f"tabulated arity {self.arity} above cap {MAX_TABULATED_ARITY}"
                )
            object.__setattr__(self, "arity", int(self.arity))
        else:
            raise InvalidInputError(f"unknown generator kind {self.kind!r}")

    @classmethod
    def power(cls, p: float) -> "PsiGenerator":
        return cls("p", p=p)

    @classmethod
    def tabulated(
        cls, func: Callable[[np.ndarray], float], arity: int, symmetric: bool = False
    ) -> "PsiGenerator":
        return cls("tabulated", func=func, arity=arity, symmetric=symmetric)

    def accepts_arity(self, n: int) -> bool:
        return self.kind == "p" or self.arity == n

    def __call__(self, t) -> float:
        return psi_eval(self, t)


def _psi_value_builtin(p: float, t: np.ndarray) -> float:
    if p == 1.0:
        return 1.0
    if p == math.inf:
        return float(t.max())
    return float(_power_norm(np.asarray(t, dtype=float), p))


def _psi_value_raw(gen: PsiGenerator, t: np.ndarray) -> float:
    """Evaluation without the range guard; axiom validation wants raw values."""
    if gen.kind == "p":
        return _psi_value_builtin(gen.p, t)
    return float(gen.func(t))


def _psi_value(gen: PsiGenerator, t: np.ndarray) -> float:
    """Evaluation without input validation; ``t`` must already be a simplex point."""
    if gen.kind == "p":
        return _psi_value_builtin(gen.p, t)
    val = float(gen.func(t))
    if not math.isfinite(val):
        raise MembershipViolationError("tabulated generator returned a non-finite value")
    lo = float(t.max()) - _EVAL_BAND
    if val < lo or val > 1.0 + _EVAL_BAND:
        raise MembershipViolationError(
            f"tabulated generator value {val!r} outside [{lo!r}, {1.0 + _EVAL_BAND!r}]"
        )
    return val


def psi_eval(gen: PsiGenerator, t) -> float:
    """Value of the generator at a simplex point."""
    t = as_simplex_point(t)
    if not gen.accepts_arity(t.size):
        raise InvalidInputError(
            f"generator arity {gen.arity} does not accept weight vector of size {t.size}"
        )
    return _psi_value(gen, t)


def psi_eval_many(gen: PsiGenerator, ts: np.ndarray) -> np.ndarray:
    """Vectorized evaluation over rows of ``ts``; rows must be simplex points."""
    ts = np.asarray(ts, dtype=float)
    if gen.kind == "p":
        if gen.p == 1.0:
            return np.ones(ts.shape[:-1])
        if gen.p == math.inf:
            return ts.max(axis=-1)
        return _power_norm(ts, gen.p)
    return np.array([_psi_value(gen, row) for row in ts.reshape(-1, ts.shape[-1])]).reshape(
        ts.shape[:-1]
    )


# ---------------------------------------------------------------------------
# Sampled validation of the defining axioms.
# ---------------------------------------------------------------------------


@dataclasses.dataclass
class ValidationReport:
    """Outcome of sampled axiom checks; a pass is evidence, not a proof."""

    arity: int
    samples: int
    tol: float
    vertex_values_ok: bool
    midpoint_convexity_ok: bool
    restriction_ok: bool
    bounds_ok: bool
    symmetry_ok: bool | None
    lipschitz_estimate: float
    failures: dict
    note: str = "sampled, not certified"

    @property
    def passed(self) -> bool:
        checks = [
            self.vertex_values_ok,
            self.midpoint_convexity_ok,
            self.restriction_ok,
            self.bounds_ok,
        ]
        if self.symmetry_ok is not None:
            checks.append(self.symmetry_ok)
        return all(checks)

    def to_dict(self) -> dict:
        return {
            "arity": self.arity,
            "samples": self.samples,
            "tol": self.tol,
            "vertex_values_ok": self.vertex_values_ok,
            "midpoint_convexity_ok": self.midpoint_convexity_ok,
            "restriction_ok": self.restriction_ok,
            "bounds_ok": self.bounds_ok,
            "symmetry_ok": self.symmetry_ok,
            "lipschitz_estimate": self.lipschitz_estimate,
            "failures": dict(self.failures),
            "passed": self.passed,
            "note": self.note,
        }


def _removal_value(gen: PsiGenerator, t: np.ndarray, i: int) -> float:
    """(1 - t_i) times the generator at t with slot i removed and renormalized."""
    rest = 1.0 - t[i]
    reduced = t.copy()
    reduced[i] = 0.0
    reduced = reduced / rest
    # Renormalization leaves the sum within a few ulps of 1; snap it exactly.
    reduced = reduced / reduced.sum()
    return rest * _psi_value_raw(gen, reduced)


def validate_psi(
    gen: PsiGenerator,
    samples: int = 2000,
    tol: float = DEFAULT_TOL,
    arity: int | None = None,
    seed: int = 0,
) -> ValidationReport:
    """Sampled check of the generator axioms.

    Draws Dirichlet points on the simplex and tests vertex values, midpoint
    convexity, the zeroed-slot restriction inequality, the bracketing between
    the largest weight and 1, and (if declared) permutation symmetry.  The
    report records the first counterexample per failed axiom.
    """
    if gen.kind == "p":
        n = arity if arity is not None else 3
    else:
        n = gen.arity
        if arity is not None and arity != n:
            raise InvalidInputError("arity argument disagrees with tabulated arity")
    if samples < n + 1:
        raise InvalidInputError(f"need at least arity+1 samples, got {samples}")

    rng = np.random.default_rng(seed)
    failures: dict[str, str] = {}

    vertex_ok = True
    for i in range(n):
        e = np.zeros(n)
        e[i] = 1.0
        v = _psi_value_raw(gen, e)
        if not math.isfinite(v) or abs(v - 1.0) > tol:
            vertex_ok = False
            failures.setdefault("vertex_values", f"value {v!r} at vertex {i}")
            break

    pts = rng.dirichlet(np.ones(n), size=samples)
    vals = np.array([_psi_value_raw(gen, t) for t in pts])

    bounds_ok = True
    for t, v in zip(pts, vals):
        if not math.isfinite(v) or v < t.max() - tol or v > 1.0 + tol:
            bounds_ok = False
            failures.setdefault("bounds", f"value {v!r} at {t.tolist()}")
            break

    convex_ok = True
    half = samples // 2
    for a, va, b, vb in zip(pts[:half], vals[:half], pts[half : 2 * half], vals[half : 2 * half]):
        if not (math.isfinite(va) and math.isfinite(vb)):
            continue
        mid = 0.5 * (a + b)
        vm = _psi_value_raw(gen, mid / mid.sum())
        if vm > 0.5 * (va + vb) + tol:
            convex_ok = False
            failures.setdefault(
                "midpoint_convexity",
                f"midpoint value {vm!r} above chord between {a.tolist()} and {b.tolist()}",
            )
            break

    restriction_ok = True
    for t, v in zip(pts, vals):
        if not math.isfinite(v):
            continue
        for i in range(n):
            if t[i] >= 1.0 - 1e-9:
                continue
            lower = _removal_value(gen, t, i)
            if v < lower - tol:
                restriction_ok = False
                failures.setdefault(
                    "restriction",
                    f"value {v!r} below zeroed-slot bound {lower!r} at {t.tolist()} slot {i}",
                )
                break
        if not restriction_ok:
            break

    symmetry_ok: bool | None = None
    if gen.symmetric:
        symmetry_ok = True
        for t, v in zip(pts[: min(samples, 200)], vals[: min(samples, 200)]):
            perm = rng.permutation(n)
            vp = _psi_value_raw(gen, t[perm])
            if abs(vp - v) > tol:
                symmetry_ok = False
                failures.setdefault(
                    "symmetry", f"values {v!r} vs {vp!r} under permutation of {t.tolist()}"
                )
                break

    diffs = pts[1:] - pts[:-1]
    gaps = np.abs(vals[1:] - vals[:-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        slopes = gaps / np.abs(diffs).sum(axis=1)
    lipschitz = float(np.nanmax(slopes)) if slopes.size else 0.0

    return ValidationReport(
        arity=n,
        samples=samples,
        tol=tol,
        vertex_values_ok=vertex_ok,
        midpoint_convexity_ok=convex_ok,
        restriction_ok=restriction_ok,
        bounds_ok=bounds_ok,
        symmetry_ok=symmetry_ok,
        lipschitz_estimate=lipschitz,
        failures=failures,
    )


# ---------------------------------------------------------------------------
# Conjugates.
# ---------------------------------------------------------------------------


def _simplex_lattice(n: int, grid: int):
    """Integer compositions of ``grid`` into ``n`` parts, as weight vectors."""
    if n > MAX_TABULATED_ARITY:
        raise ContractError(f"lattice arity {n} above cap {MAX_TABULATED_ARITY}")
    count = math.comb(grid + n - 1, n - 1)
    if count > _MAX_LATTICE_POINTS:
        raise BudgetExceededError(
            f"simplex lattice would hold {count} points (cap {_MAX_LATTICE_POINTS})"
        )

    def rec(total: int, parts: int):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in rec(total - first, parts - 1):
                yield (first, *rest)

    inv = 1.0 / grid
    for comp in rec(grid, n):
        yield np.array(comp, dtype=float) * inv


def _linear_over_psi(gen: PsiGenerator, weights: np.ndarray, t: np.ndarray) -> float:
    denom = _psi_value(gen, t)
    if denom <= 0.0:
        raise MembershipViolationError(
            f"generator must stay positive, got {denom!r} at {t.tolist()}"
        )
    return float(np.dot(weights, t)) / denom


def _polish_ratio(
    gen: PsiGenerator, weights: np.ndarray, t: np.ndarray, best: float, step0: float
) -> tuple[np.ndarray, float]:
    """Deterministic pairwise mass-transfer ascent of the linear-over-psi ratio.

    Pairwise transfers alone stall when several coordinates tie for the
    maximum (lowering the denominator then needs a joint move), so a blend
    toward the barycenter joins the candidate set.
    """
    n = t.size
    t = t.copy()
    uniform = np.full(n, 1.0 / n)
    step = step0
    while step > 1e-12:
        improved = False
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                move = min(step, t[j])
                if move <= 0.0:
                    continue
                cand = t.copy()
                cand[i] += move
                cand[j] -= move
                cand = np.clip(cand, 0.0, None)
                cand /= cand.sum()
                val = _linear_over_psi(gen, weights, cand)
                if val > best + 1e-15:
                    t, best = cand, val
                    improved = True
        cand = (1.0 - step) * t + step * uniform
        val = _linear_over_psi(gen, weights, cand)
        if val > best + 1e-15:
            t, best = cand, val
            improved = True
        if not improved:
            step *= 0.5
    return t, best


def _conjugate_sup(gen: PsiGenerator, weights: np.ndarray, grid: int) -> float:
    """Sup of <t, weights> / psi(t) over the simplex, lattice plus local polish."""
    n = weights.size
    best = -math.inf
    best_t = None
    for t in _simplex_lattice(n, grid):
        val = _linear_over_psi(gen, weights, t)
        if val > best:
            best, best_t = val, t
    _, polished = _polish_ratio(gen, weights, best_t, best, step0=1.0 / grid)
    return max(best, polished)


def psi_conjugate_eval(gen: PsiGenerator, s, grid: int = 200) -> float:
    """Conjugate generator value at a simplex point ``s``.

    Power generators use closed forms (exponent 1 and infinity swap, finite
    exponents conjugate).  Tabulated generators run a simplex-lattice search
    with ``grid`` subdivisions, refined by a deterministic polish; the result
    is never below the lattice maximum.
    """
    s = as_simplex_point(s, "s")
    if gen.kind == "p":
        q = conjugate_exponent(gen.p)
        return _psi_value_builtin(q, s)
    if s.size != gen.arity:
        raise InvalidInputError("conjugate argument arity mismatch")
    if grid < 2:
        raise InvalidInputError("conjugate lattice needs grid >= 2")
    return _conjugate_sup(gen, s, grid)


def dual_norm_from_block_norms(gen: PsiGenerator, rstar: np.ndarray, grid: int = 200) -> float:
    """Dual product norm given the blockwise dual ground norms ``rstar``.

    For power generators this is the conjugate-exponent aggregate; for
    tabulated generators it maximizes the weighted sum against the generator
    over the simplex.
    """
    rstar = np.asarray(rstar, dtype=float)
    if gen.kind == "p":
        q = conjugate_exponent(gen.p)
        if q == 1.0:
            return float(rstar.sum())
        if q == math.inf:
            return float(rstar.max())
        return float(_power_norm(np.abs(rstar), q))
    if rstar.size != gen.arity:
        raise InvalidInputError("block count disagrees with tabulated arity")
    if not np.any(rstar):
        return 0.0
    return _conjugate_sup(gen, rstar, grid)


def psi_conjugate_generator(gen: PsiGenerator, grid: int = 200) -> PsiGenerator:
    """The conjugate as a generator object.

    Power generators conjugate in closed form.  For tabulated generators the
    result is itself tabulated, each evaluation running a lattice search, so
    expect roughly 1/grid accuracy and matching cost.
    """
    if gen.kind == "p":
        return PsiGenerator.power(conjugate_exponent(gen.p))
    return PsiGenerator.tabulated(
        lambda s: _conjugate_sup(gen, np.asarray(s, dtype=float), grid),
        arity=gen.arity,
        symmetric=gen.symmetric,
    )


def psi_min_symmetric(gen: PsiGenerator, arity: int | None = None) -> tuple[np.ndarray, float]:
    """Minimizer and minimum of a symmetric generator: the uniform point."""
    if not gen.symmetric:
        raise ContractError("generator is not declared symmetric")
    if gen.kind == "tabulated":
        n = gen.arity
        if arity is not None and arity != n:
            raise InvalidInputError("arity argument disagrees with tabulated arity")
    else:
        n = arity if arity is not None else 3
    if n < 2:
        raise InvalidInputError("arity must be >= 2")
    t = np.full(n, 1.0 / n)
    return t, _psi_value(gen, t / t.sum())


def psi_sandwich_bounds(gen: PsiGenerator, t) -> tuple[float, float]:
    """Lower and upper envelope values (largest weight and 1) at ``t``."""
    t = as_simplex_point(t)
    return float(t.max()), 1.0
