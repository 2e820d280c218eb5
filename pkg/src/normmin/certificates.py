"""Dual optimality certificates: verification and recovery.

A certificate pairs a candidate solution with one dual block per anchor.
Checkers score it against the optimality conditions for the claimed norm
family and return named residuals; recovery reconstructs dual blocks at a
given point, or reports that none exist, which certifies the point is not
optimal at the requested tolerance.

Recovery uses closed forms when the ground norm has a unique unit-pairing
dual vector (Euclidean and power kinds) and otherwise solves a small elastic
feasibility linear program over the polyhedral dual balls.
"""

from __future__ import annotations

import dataclasses
import math

import numpy as np

from .errors import (
    InvalidInputError,
    RecoveryError,
    UnsupportedGeneratorError,
)
from .ground_norms import (
    DEFAULT_TOL,
    as_vector,
    dual_ground_norm,
    ground_norm_eval,
    ground_norm_eval_many,
)
from .problem import (
    ProblemInstance,
    _ground_subgradient,
    displacements,
    objective_eval,
)
from .product_norms import as_product_vector
from .psi_generators import conjugate_exponent, dual_norm_from_block_norms

RECOVERY_TOL = 1e-7

GENERAL = "general"
FERMAT_TORRICELLI = "fermat_torricelli"
CHEBYSHEV = "chebyshev"
P_FERMAT = "p_fermat"


@dataclasses.dataclass(frozen=True)
class Certificate:
    """Candidate solution plus one dual block per anchor."""

    solution: np.ndarray
    duals: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "solution", as_vector(self.solution, "solution"))
        object.__setattr__(self, "duals", as_product_vector(self.duals, "duals"))
        if self.duals.shape[1] != self.solution.size:
            raise InvalidInputError(
                "dual blocks and solution live in different spaces"
            )


@dataclasses.dataclass
class CertificateReport:
    """Named residuals (already scale-normalized) and the resulting verdict."""

    theorem: str
    verdict: bool
    residuals: dict
    tol: float
    warnings: list

    @property
    def worst(self) -> tuple[str, float]:
        name = max(self.residuals, key=lambda k: self.residuals[k])
        return name, self.residuals[name]

    def to_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "verdict": self.verdict,
            "residuals": dict(self.residuals),
            "tol": self.tol,
            "warnings": list(self.warnings),
        }


@dataclasses.dataclass(frozen=True)
class Infeasible:
    """Recovery outcome certifying no dual blocks exist at the tolerance."""

    theorem: str
    reason: str
    residual: float


def _cert_arrays(prob: ProblemInstance, cert: Certificate):
    if cert.duals.shape != prob.anchors.shape:
        raise InvalidInputError(
            f"certificate blocks {cert.duals.shape} do not match anchors "
            f"{prob.anchors.shape}"
        )
    if cert.solution.size != prob.dim:
        raise InvalidInputError("certificate solution dimension mismatch")
    diffs = displacements(prob, cert.solution)
    r = ground_norm_eval_many(prob.norm.ground, diffs)
    rstar = ground_norm_eval_many(dual_ground_norm(prob.norm.ground), cert.duals)
    return diffs, r, rstar


def _report(theorem: str, residuals: dict, tol: float, warnings=None) -> CertificateReport:
    verdict = all(v <= tol for v in residuals.values())
    return CertificateReport(
        theorem=theorem,
        verdict=verdict,
        residuals=residuals,
        tol=tol,
        warnings=list(warnings or []),
    )


def check_general(
    prob: ProblemInstance, cert: Certificate, tol: float = DEFAULT_TOL, grid: int = 200
) -> CertificateReport:
    """Score the generator-independent optimality conditions.

    Dual blocks must sum to zero, have unit dual product norm, and pair with
    the anchor displacements to the objective value.  Works for every
    generator; tabulated generators price the dual norm on a simplex lattice
    of ``grid`` subdivisions, so choose ``tol`` accordingly for them.
    """
    diffs, r, rstar = _cert_arrays(prob, cert)
    f = objective_eval(prob, cert.solution)
    dual_sum = ground_norm_eval(dual_ground_norm(prob.norm.ground), cert.duals.sum(axis=0))
    dual_scale = max(1.0, float(rstar.max()))
    dual_norm = float(dual_norm_from_block_norms(prob.norm.generator, rstar, grid=grid))
    paired = float(np.sum(cert.duals * diffs))
    residuals = {
        "dual_sum": dual_sum / dual_scale,
        "normalization": abs(dual_norm - 1.0),
        "pairing": abs(paired - f) / max(1.0, f),
    }
    return _report(GENERAL, residuals, tol)


def _require_power(prob: ProblemInstance, value: float, theorem: str) -> None:
    gen = prob.norm.generator
    if gen.kind != "p" or gen.p != value:
        raise UnsupportedGeneratorError(
            f"{theorem} conditions require the power generator with exponent "
            f"{value}, got {gen.kind}"
            + (f"({gen.p})" if gen.kind == "p" else "")
        )


def check_fermat_torricelli(
    prob: ProblemInstance, cert: Certificate, tol: float = DEFAULT_TOL
) -> CertificateReport:
    """Optimality conditions for the constant generator (sum of block norms).

    Dual blocks sum to zero, the largest dual norm is one, each block pairs
    with its displacement to the displacement's norm, and blocks of dual norm
    below one only occur where the displacement vanishes.
    """
    _require_power(prob, 1.0, FERMAT_TORRICELLI)
    diffs, r, rstar = _cert_arrays(prob, cert)
    dual_sum = ground_norm_eval(dual_ground_norm(prob.norm.ground), cert.duals.sum(axis=0))
    paired = np.sum(cert.duals * diffs, axis=1)
    scale = max(1.0, float(r.max()))
    residuals = {
        "dual_sum": dual_sum / max(1.0, float(rstar.max())),
        "max_dual_norm": abs(float(rstar.max()) - 1.0),
        "alignment": float(np.abs(paired - r).max()) / scale,
        "complementarity": float((np.abs(rstar - 1.0) * r).max()) / scale,
    }
    return _report(FERMAT_TORRICELLI, residuals, tol)


def check_chebyshev(
    prob: ProblemInstance, cert: Certificate, tol: float = DEFAULT_TOL
) -> CertificateReport:
    """Optimality conditions for the max generator (largest block norm).

    Dual norms sum to one, every block with a nonzero dual is aligned with
    its displacement, and nonzero duals only sit on blocks whose displacement
    norm attains the maximum.  Fewer than two nonzero duals is geometrically
    impossible at a true optimum and is reported as a warning.
    """
    _require_power(prob, math.inf, CHEBYSHEV)
    diffs, r, rstar = _cert_arrays(prob, cert)
    m = float(r.max())
    scale = max(1.0, m)
    dual_sum = ground_norm_eval(dual_ground_norm(prob.norm.ground), cert.duals.sum(axis=0))
    paired = np.sum(cert.duals * diffs, axis=1)
    residuals = {
        "dual_sum": dual_sum / max(1.0, float(rstar.max())),
        "dual_norm_total": abs(float(rstar.sum()) - 1.0),
        "alignment": float(np.abs(paired - rstar * r).max()) / scale,
        "complementarity": float(((m - r) * rstar).max()) / scale,
    }
    warnings = []
    nonzero = int(np.sum(rstar > tol))
    if nonzero < 2:
        warnings.append(
            f"only {nonzero} nonzero dual block(s); an optimum needs at least 2"
        )
    return _report(CHEBYSHEV, residuals, tol, warnings)


def check_p_fermat(
    prob: ProblemInstance, cert: Certificate, tol: float = DEFAULT_TOL
) -> CertificateReport:
    """Optimality conditions for finite power generators above exponent one.

    Dual norms raised to the conjugate exponent sum to one and follow the
    profile of the displacement norms raised to the exponent; every block is
    aligned with its displacement.
    """
    gen = prob.norm.generator
    if gen.kind != "p" or gen.p == 1.0 or gen.p == math.inf:
        raise UnsupportedGeneratorError(
            "power-profile conditions require a finite power generator above 1"
        )
    p = gen.p
    q = conjugate_exponent(p)
    diffs, r, rstar = _cert_arrays(prob, cert)
    dual_sum = ground_norm_eval(dual_ground_norm(prob.norm.ground), cert.duals.sum(axis=0))
    paired = np.sum(cert.duals * diffs, axis=1)
    scale = max(1.0, float(r.max()))
    powers = rstar**q
    profile = r**p
    total = profile.sum()
    target = profile / total if total > 0.0 else np.zeros_like(profile)
    residuals = {
        "dual_sum": dual_sum / max(1.0, float(rstar.max())),
        "dual_power_total": abs(float(powers.sum()) - 1.0),
        "alignment": float(np.abs(paired - rstar * r).max()) / scale,
        "proportionality": float(np.abs(powers - target).max()),
    }
    return _report(P_FERMAT, residuals, tol)


def matching_theorem(prob: ProblemInstance) -> str:
    """The specialized condition set for this instance's generator."""
    gen = prob.norm.generator
    if gen.kind != "p":
        return GENERAL
    if gen.p == 1.0:
        return FERMAT_TORRICELLI
    if gen.p == math.inf:
        return CHEBYSHEV
    return P_FERMAT


def check_certificate(
    prob: ProblemInstance,
    cert: Certificate,
    tol: float = DEFAULT_TOL,
    theorem: str = "auto",
    grid: int = 200,
) -> CertificateReport:
    """Dispatch to a checker by name, or to the generator's specialized one."""
    if theorem == "auto":
        theorem = matching_theorem(prob)
    if theorem == GENERAL:
        return check_general(prob, cert, tol, grid=grid)
    if theorem == FERMAT_TORRICELLI:
        return check_fermat_torricelli(prob, cert, tol)
    if theorem == CHEBYSHEV:
        return check_chebyshev(prob, cert, tol)
    if theorem == P_FERMAT:
        return check_p_fermat(prob, cert, tol)
    raise InvalidInputError(f"unknown theorem name {theorem!r}")


# ---------------------------------------------------------------------------
# Recovery.
# ---------------------------------------------------------------------------


class _ElasticLp:
    """Dense elastic feasibility LP: minimize total violation of equalities."""

    def __init__(self):
        self.nvar = 0
        self.bounds: list[tuple] = []
        self.ub_rows: list[tuple[list, float]] = []
        self.eq_rows: list[tuple[list, float]] = []

    def add_vars(self, count: int, lo, hi) -> range:
        start = self.nvar
        self.nvar += count
        self.bounds.extend([(lo, hi)] * count)
        return range(start, start + count)

    def add_ub(self, coeffs: list, rhs: float) -> None:
        self.ub_rows.append((coeffs, rhs))

    def add_eq(self, coeffs: list, rhs: float) -> None:
        self.eq_rows.append((coeffs, rhs))

    def solve(self) -> tuple[np.ndarray, float]:
        from scipy.optimize import linprog

        ne = len(self.eq_rows)
        total = self.nvar + 2 * ne
        cost = np.zeros(total)
        cost[self.nvar :] = 1.0
        a_eq = np.zeros((ne, total))
        b_eq = np.zeros(ne)
        for k, (coeffs, rhs) in enumerate(self.eq_rows):
            for j, v in coeffs:
                a_eq[k, j] += v
            a_eq[k, self.nvar + 2 * k] = 1.0
            a_eq[k, self.nvar + 2 * k + 1] = -1.0
            b_eq[k] = rhs
        if self.ub_rows:
            a_ub = np.zeros((len(self.ub_rows), total))
            b_ub = np.zeros(len(self.ub_rows))
            for k, (coeffs, rhs) in enumerate(self.ub_rows):
                for j, v in coeffs:
                    a_ub[k, j] += v
                b_ub[k] = rhs
        else:
            a_ub = b_ub = None
        bounds = self.bounds + [(0.0, None)] * (2 * ne)
        res = linprog(
            cost,
            A_ub=a_ub,
            b_ub=b_ub,
            A_eq=a_eq if ne else None,
            b_eq=b_eq if ne else None,
            bounds=bounds,
            method="highs",
        )
        if res.status != 0:
            raise RecoveryError(f"feasibility subproblem failed: {res.message}")
        return res.x[: self.nvar], float(res.fun)


def _polyhedral_duals(
    prob: ProblemInstance,
    diffs: np.ndarray,
    caps,
    cap_is_var: bool,
    pairing_targets,
    extra_total: float | None,
    pinned: np.ndarray,
) -> tuple[np.ndarray, float]:
    """Solve for dual blocks inside polyhedral dual balls.

    ``caps`` bounds each block's dual norm; with ``cap_is_var`` the caps
    become decision variables instead.  ``pairing_targets[i]`` is either None
    (no pairing row) or a pair (coeff_on_cap, constant) encoding
    <dual_i, diffs_i> = coeff * cap_i + constant.  ``extra_total`` adds the
    row sum(cap) = extra_total.  ``pinned`` blocks are fixed to zero through
    hard variable bounds, not elastic rows.
    """
    n, d = diffs.shape
    ground = prob.norm.ground
    lp = _ElasticLp()

    def block_bounds(i, lo, hi):
        return (0.0, 0.0) if pinned[i] else (lo, hi)

    if ground.kind == "max":
        pos = [lp.add_vars(d, *block_bounds(i, 0.0, None)) for i in range(n)]
        neg = [lp.add_vars(d, *block_bounds(i, 0.0, None)) for i in range(n)]

        def dual_coeffs(i, j):
            return [(pos[i][j], 1.0), (neg[i][j], -1.0)]

        def ball_coeffs(i):
            return [(pos[i][j], 1.0) for j in range(d)] + [
                (neg[i][j], 1.0) for j in range(d)
            ]

    elif ground.kind == "sum":
        w = [lp.add_vars(d, *block_bounds(i, None, None)) for i in range(n)]

        def dual_coeffs(i, j):
            return [(w[i][j], 1.0)]

        def ball_coeffs(i):
            return None

    else:
        raise RecoveryError("polyhedral route called with a smooth ground norm")

    cap_idx = None
    if cap_is_var:
        cap_idx = [lp.add_vars(1, *block_bounds(i, 0.0, None))[0] for i in range(n)]

    for i in range(n):
        if pinned[i]:
            continue
        if ground.kind == "max":
            coeffs = ball_coeffs(i)
            if cap_is_var:
                lp.add_ub(coeffs + [(cap_idx[i], -1.0)], 0.0)
            else:
                lp.add_ub(coeffs, float(caps[i]))
        else:
            for j in range(d):
                if cap_is_var:
                    lp.add_ub(dual_coeffs(i, j) + [(cap_idx[i], -1.0)], 0.0)
                    lp.add_ub(
                        [(idx, -c) for idx, c in dual_coeffs(i, j)] + [(cap_idx[i], -1.0)],
                        0.0,
                    )
                else:
                    lp.add_ub(dual_coeffs(i, j), float(caps[i]))
                    lp.add_ub([(idx, -c) for idx, c in dual_coeffs(i, j)], float(caps[i]))

    for j in range(d):
        coeffs = []
        for i in range(n):
            coeffs.extend(dual_coeffs(i, j))
        lp.add_eq(coeffs, 0.0)

    for i in range(n):
        target = pairing_targets[i]
        if target is None or pinned[i]:
            continue
        cap_coeff, const = target
        coeffs = []
        for j in range(d):
            coeffs.extend([(idx, c * diffs[i, j]) for idx, c in dual_coeffs(i, j)])
        if cap_coeff != 0.0 and cap_is_var:
            coeffs.append((cap_idx[i], -cap_coeff))
            lp.add_eq(coeffs, const)
        elif cap_coeff != 0.0:
            lp.add_eq(coeffs, const + cap_coeff * float(caps[i]))
        else:
            lp.add_eq(coeffs, const)

    if extra_total is not None:
        lp.add_eq([(cap_idx[i], 1.0) for i in range(n) if not pinned[i]], extra_total)

    x, violation = lp.solve()
    duals = np.zeros((n, d))
    for i in range(n):
        for j in range(d):
            duals[i, j] = sum(c * x[idx] for idx, c in dual_coeffs(i, j))
    return duals, violation


def _smooth_block_gradients(prob: ProblemInstance, diffs: np.ndarray) -> np.ndarray:
    return np.stack([_ground_subgradient(prob.norm.ground, row) for row in diffs])


def _recover_ft(prob, u, diffs, r, tol):
    scale = max(1.0, float(r.max()))
    ztol = tol * scale
    if prob.norm.ground.kind in ("euclidean", "p"):
        grads = _smooth_block_gradients(prob, diffs)
        near = np.flatnonzero(r <= ztol)
        if near.size == 0:
            duals = grads
        elif near.size == 1:
            k = int(near[0])
            duals = grads.copy()
            duals[k] = -np.delete(grads, k, axis=0).sum(axis=0)
            cap = ground_norm_eval(dual_ground_norm(prob.norm.ground), duals[k])
            if cap > 1.0 + 10.0 * tol:
                return Infeasible(
                    FERMAT_TORRICELLI,
                    "anchor-coincident block would need dual norm above one",
                    cap - 1.0,
                )
        else:
            return Infeasible(
                FERMAT_TORRICELLI, "point is near several anchors at once", float(near.size)
            )
        return duals
    caps = np.ones(prob.n)
    targets = [((0.0, float(r[i])) if r[i] > ztol else None) for i in range(prob.n)]
    duals, violation = _polyhedral_duals(
        prob, diffs, caps, False, targets, None, pinned=np.zeros(prob.n, dtype=bool)
    )
    if violation > tol * max(1.0, float(r.sum())):
        return Infeasible(FERMAT_TORRICELLI, "no feasible dual blocks", violation)
    return duals


def _recover_cheb(prob, u, diffs, r, tol):
    m = float(r.max())
    atol = tol * max(1.0, m)
    active = r >= m - atol
    if prob.norm.ground.kind in ("euclidean", "p"):
        grads = _smooth_block_gradients(prob, diffs)
        lp = _ElasticLp()
        idx = [
            lp.add_vars(1, 0.0, None if active[i] else 0.0)[0] for i in range(prob.n)
        ]
        for j in range(prob.dim):
            lp.add_eq([(idx[i], float(grads[i, j])) for i in range(prob.n)], 0.0)
        lp.add_eq([(idx[i], 1.0) for i in range(prob.n)], 1.0)
        x, violation = lp.solve()
        if violation > tol * max(1.0, m):
            return Infeasible(CHEBYSHEV, "no convex weights balance the gradients", violation)
        duals = x[:, None] * grads
        return duals
    targets = [((float(r[i]), 0.0) if active[i] else None) for i in range(prob.n)]
    duals, violation = _polyhedral_duals(
        prob, diffs, None, True, targets, extra_total=1.0, pinned=~active
    )
    if violation > tol * max(1.0, float(r.sum())):
        return Infeasible(CHEBYSHEV, "no feasible dual blocks", violation)
    return duals


def _recover_pft(prob, u, diffs, r, tol):
    p = prob.norm.generator.p
    q = conjugate_exponent(p)
    total = float((r**p).sum())
    if total <= 0.0:
        return Infeasible(P_FERMAT, "all displacements vanish", 0.0)
    caps = (r**p / total) ** (1.0 / q)
    if prob.norm.ground.kind in ("euclidean", "p"):
        grads = _smooth_block_gradients(prob, diffs)
        return caps[:, None] * grads
    scale = max(1.0, float(r.max()))
    ztol = tol * scale
    caps = np.where(r > ztol, caps, 0.0)
    targets = [
        ((0.0, float(caps[i] * r[i])) if caps[i] > 0.0 else None) for i in range(prob.n)
    ]
    duals, violation = _polyhedral_duals(
        prob, diffs, caps, False, targets, None, pinned=(caps == 0.0)
    )
    if violation > tol * max(1.0, float(r.sum())):
        return Infeasible(P_FERMAT, "no feasible dual blocks", violation)
    return duals


def recover_certificate(
    prob: ProblemInstance, u, tol: float = RECOVERY_TOL
) -> Certificate | Infeasible:
    """Reconstruct dual blocks at ``u`` or certify that none exist.

    The returned certificate always passes the generator's specialized
    checker at ``tol``; an :class:`Infeasible` result means ``u`` is not
    optimal at that tolerance.  The default tolerance is looser than the
    checking default because recovery stacks solver error on top of
    arithmetic error.
    """
    u = as_vector(u, "u")
    gen = prob.norm.generator
    if gen.kind != "p":
        raise UnsupportedGeneratorError("recovery requires a power generator")
    diffs = displacements(prob, u)
    r = ground_norm_eval_many(prob.norm.ground, diffs)
    if gen.p == 1.0:
        out = _recover_ft(prob, u, diffs, r, tol)
    elif gen.p == math.inf:
        out = _recover_cheb(prob, u, diffs, r, tol)
    else:
        out = _recover_pft(prob, u, diffs, r, tol)
    if isinstance(out, Infeasible):
        return out
    cert = Certificate(solution=u, duals=out)
    report = check_certificate(prob, cert, tol=tol)
    if report.verdict:
        return cert
    name, value = report.worst
    return Infeasible(
        report.theorem,
        f"reconstructed blocks fail the {name} condition",
        value,
    )
