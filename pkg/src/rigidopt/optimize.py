"""Length optimization on the fixed-edge constraint manifold.

The design problems are

    P_k(min / max):  optimize f_k(p) = |p_a - p_b|^2
                      subject to f_i(p) = f_i(p0) for every other edge i
                                 (plus pins, plus any extra linear rows).

Reference solver: projected gradient descent.  Each outer iteration takes a
gradient step and projects back with a Newton iteration whose Jacobian is
frozen at the pre-step point; the step length is halved when the projection
fails or the objective moves the wrong way, and restored after five clean
accepts.  At a KKT point the multipliers (normalized to 1 on the free edge)
form a self-stress of the framework, and definiteness of the stress-weighted
Hessian form on the critical cone certifies a strict local optimum modulo
the pinned motions.

Plain gradient descent stalls with residuals around step_tol/eta, which is
too coarse for rank decisions downstream, so `solve` finishes by polishing
the full KKT system with a damped Newton method (scipy's hybr) — the
reference descent path is unchanged and the polish can be switched off.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
import scipy.linalg
import scipy.optimize

from .errors import ProjectionFailed, StressVanishes
from .framework import (ConstraintSystem, EdgeLength, Framework,
                        build_system, constraint_gradient)
from .pinning import PinningSpec, make_pinning
from .rigidity import RANK_TOL, _rank_cutoff

__all__ = [
    "MIN",
    "MAX",
    "CONVERGED",
    "CONVERGED_DEGENERATE",
    "MAX_ITERS",
    "OptimizationProblem",
    "OptimizationResult",
    "SecondOrderResult",
    "CrossEdgeResult",
    "length_problem",
    "project",
    "solve",
    "lagrange_multiplier",
    "licq_check",
    "second_order_check",
    "cross_edge_optimality",
]

MIN = "min"
MAX = "max"

CONVERGED = "converged"
CONVERGED_DEGENERATE = "converged-degenerate"
MAX_ITERS = "max-iters"

#: squared length below which a minimized edge counts as collapsed
DEGENERATE_SQ = 1e-12


@dataclass
class OptimizationProblem:
    """A length-optimization instance plus every tolerance the solver uses.

    ``framework`` must already live in the pinning chart (see
    :func:`length_problem`, which arranges that); ``system`` holds the edge
    constraints (free edge marked), pins and any extra linear rows.
    """

    framework: Framework
    system: ConstraintSystem
    direction: str
    pinning: PinningSpec | None = None
    feas_tol: float = 1e-10
    kkt_tol: float = 1e-7
    step_tol: float = 1e-10
    pd_tol: float = 1e-8
    rank_tol: float = RANK_TOL
    eta: float = 1e-2
    max_iters: int = 200_000
    max_newton_iters: int = 50
    refresh_jacobian: bool = False
    polish: bool = True

    def __post_init__(self):
        if self.direction not in (MIN, MAX):
            raise ValueError(f"direction must be '{MIN}' or '{MAX}'")
        if self.system.free_index is None:
            raise ValueError("problem system needs a free edge")


def length_problem(fw: Framework,
                   free_edge: int,
                   direction: str,
                   anchors: Sequence[int] | None = None,
                   extras: Sequence = (),
                   targets: Sequence[float] | None = None,
                   **overrides) -> OptimizationProblem:
    """Standard problem setup: pin ``fw`` (moving it into the chart), fix
    every edge but ``free_edge`` at its current (or given target) length.

    ``targets`` are lengths indexed like ``fw.edges``; the free edge's entry
    is ignored.  Keyword overrides go straight into OptimizationProblem
    (eta, tolerances, ...).
    """
    spec, pinned_fw = make_pinning(fw, anchors)
    cs = build_system(pinned_fw, free_edge=free_edge,
                      pins=spec.constraints(), extras=extras, targets=targets)
    return OptimizationProblem(framework=pinned_fw, system=cs,
                               direction=direction, pinning=spec, **overrides)


# ---------------------------------------------------------------------------
# Projection
# ---------------------------------------------------------------------------


def project(cs: ConstraintSystem,
            p: np.ndarray,
            feas_tol: float = 1e-10,
            max_newton_iters: int = 50,
            refresh_jacobian: bool = False,
            frozen_at: np.ndarray | None = None) -> np.ndarray:
    """Newton-project ``p`` onto the fixed-constraint set.

    The correction is constrained to the row space of the Jacobian at
    ``frozen_at`` (default: p), i.e. steps have the form J0^T alpha.  In the
    reference variant the alpha-Jacobian J0 J0^T is factored once; with
    ``refresh_jacobian`` the current-point Jacobian multiplies J0^T instead.
    Raises ProjectionFailed on divergence (residual growing twice in a row)
    or when the iteration cap is hit.
    """
    p = np.asarray(p, dtype=float).copy()
    rows = cs.fixed_rows()
    if not rows:
        return p
    r = cs.fixed_residual(p)
    rmax = float(np.max(np.abs(r)))
    if rmax <= feas_tol:
        return p

    p0 = p if frozen_at is None else np.asarray(frozen_at, dtype=float)
    J0 = cs.fixed_jacobian(p0)
    cf = None
    if not refresh_jacobian:
        try:
            cf = scipy.linalg.cho_factor(J0 @ J0.T)
        except np.linalg.LinAlgError:
            raise ProjectionFailed("projection normal matrix is singular "
                                   "(dependent constraint gradients)")

    prev = np.inf
    grew = 0
    for _ in range(max_newton_iters):
        if refresh_jacobian:
            try:
                alpha = np.linalg.solve(cs.fixed_jacobian(p) @ J0.T, -r)
            except np.linalg.LinAlgError:
                raise ProjectionFailed("projection system is singular")
        else:
            alpha = scipy.linalg.cho_solve(cf, -r)
        p += J0.T @ alpha
        r = cs.fixed_residual(p)
        rmax = float(np.max(np.abs(r)))
        if rmax <= feas_tol:
            return p
        if rmax >= prev:
            grew += 1
            if grew >= 2:
                raise ProjectionFailed(
                    f"projection diverging (residual {rmax:.3e})")
        else:
            grew = 0
        prev = rmax
    raise ProjectionFailed(
        f"projection stalled at residual {rmax:.3e} after "
        f"{max_newton_iters} iterations")


# ---------------------------------------------------------------------------
# KKT pieces
# ---------------------------------------------------------------------------


def lagrange_multiplier(cs: ConstraintSystem,
                        p: np.ndarray,
                        objective_gradient: np.ndarray | None = None
                        ) -> tuple[np.ndarray, float]:
    """Least-squares KKT multipliers at ``p``.

    Solves min || g + J_fixed^T lam ||; g defaults to the free edge's
    gradient, whose own multiplier is fixed at 1 — so at a KKT point the
    returned vector is the self-stress normalized on the free edge
    (multipliers on pins are reaction forces).  Returns ``(lam, residual)``
    with residual relative to ||g||.
    """
    p = np.asarray(p, dtype=float)
    if objective_gradient is None:
        if cs.free_index is None:
            raise ValueError("system has no free edge; pass objective_gradient")
        g = constraint_gradient(cs, p, cs.free_index)
    else:
        g = np.asarray(objective_gradient, dtype=float)
    rows = cs.fixed_rows()
    A = cs.jacobian(p)[rows].T                      # (nd, n_fixed)
    lam_rest, *_ = np.linalg.lstsq(A, -g, rcond=None)
    gnorm = np.linalg.norm(g)
    resid = float(np.linalg.norm(g + A @ lam_rest) / (gnorm if gnorm else 1.0))
    lam = np.zeros(cs.size)
    lam[rows] = lam_rest
    if cs.free_index is not None and objective_gradient is None:
        lam[cs.free_index] = 1.0
    return lam, resid


def licq_check(cs: ConstraintSystem, p: np.ndarray,
               rank_tol: float = RANK_TOL) -> bool:
    """Are the fixed-constraint gradients linearly independent at p?"""
    J = cs.fixed_jacobian(np.asarray(p, dtype=float))
    if J.shape[0] == 0:
        return True
    s = np.linalg.svd(J, compute_uv=False)
    cutoff = _rank_cutoff(s, J.shape, rank_tol)
    return int(np.sum(s > cutoff)) == J.shape[0]


@dataclass
class SecondOrderResult:
    """Definiteness of the multiplier-weighted Hessian form on the critical cone."""

    certified: bool
    direction: str
    eig_min: float
    eig_max: float
    cone_dim: int
    cone_empty: bool = False


def _critical_cone(cs: ConstraintSystem, p: np.ndarray,
                   rank_tol: float) -> np.ndarray:
    """Orthonormal rows spanning null(J_fixed(p)) — the cone of admissible
    variations once every fixed constraint is linearized away."""
    J = cs.fixed_jacobian(np.asarray(p, dtype=float))
    if J.shape[0] == 0:
        return np.eye(cs.nd)
    _, s, Vt = np.linalg.svd(J)
    cutoff = _rank_cutoff(s, J.shape, rank_tol)
    rank = int(np.sum(s > cutoff))
    return Vt[rank:]


def _form_on_basis(cs: ConstraintSystem, w: np.ndarray, V: np.ndarray) -> np.ndarray:
    """(nf, nf) matrix of sum_i w_i grad^2 f_i restricted to the rows of V."""
    nf = V.shape[0]
    M = np.zeros((nf, nf))
    d = cs.d
    for i, c in enumerate(cs.constraints):
        if not isinstance(c, EdgeLength) or w[i] == 0.0:
            continue
        D = V[:, c.a * d:(c.a + 1) * d] - V[:, c.b * d:(c.b + 1) * d]
        M += (2.0 * w[i]) * (D @ D.T)
    return 0.5 * (M + M.T)


def second_order_check(cs: ConstraintSystem,
                       p: np.ndarray,
                       lam: np.ndarray,
                       direction: str,
                       pd_tol: float = 1e-8,
                       rank_tol: float = RANK_TOL) -> SecondOrderResult:
    """Second-order sufficiency at a KKT point.

    The Lagrangian Hessian is sum_i lam_i grad^2 f_i (the objective edge's
    contribution rides along with its multiplier fixed at 1).  MIN needs the
    form positive definite on the critical cone, MAX negative definite; the
    threshold is relative, pd_tol * ||M||_2.  An empty cone certifies
    trivially (flagged).
    """
    V = _critical_cone(cs, p, rank_tol)
    if V.shape[0] == 0:
        return SecondOrderResult(True, direction, 0.0, 0.0, 0, cone_empty=True)
    M = _form_on_basis(cs, lam, V)
    eigs = np.linalg.eigvalsh(M)
    norm = max(abs(eigs[0]), abs(eigs[-1]))
    if norm == 0.0:
        return SecondOrderResult(False, direction, 0.0, 0.0, V.shape[0])
    if direction == MIN:
        certified = eigs[0] > pd_tol * norm
    else:
        certified = eigs[-1] < -pd_tol * norm
    return SecondOrderResult(bool(certified), direction,
                             float(eigs[0]), float(eigs[-1]), V.shape[0])


# ---------------------------------------------------------------------------
# The descent engine (shared with stress design)
# ---------------------------------------------------------------------------


def _descend(cs: ConstraintSystem,
             p0: np.ndarray,
             obj: Callable[[np.ndarray], float],
             grad: Callable[[np.ndarray], np.ndarray],
             *,
             eta: float,
             step_tol: float,
             feas_tol: float,
             max_iters: int,
             max_newton_iters: int,
             refresh_jacobian: bool,
             degenerate: Callable[[np.ndarray], bool] | None = None
             ) -> tuple[np.ndarray, int, str]:
    """Projected gradient descent; returns (p, iterations, status).

    The initial feasibility projection is allowed to raise ProjectionFailed;
    in-loop projection failures and objective increases halve the step, and
    five consecutive accepts restore it.
    """
    p = project(cs, np.asarray(p0, dtype=float), feas_tol,
                max_newton_iters, refresh_jacobian)
    fcur = obj(p)
    eta_cur = eta
    streak = 0
    status = MAX_ITERS
    it = 0
    for it in range(1, max_iters + 1):
        trial = p - eta_cur * grad(p)
        try:
            pn = project(cs, trial, feas_tol, max_newton_iters,
                         refresh_jacobian, frozen_at=p)
        except ProjectionFailed:
            pn = None
        if pn is not None:
            fn = obj(pn)
            if fn > fcur + 1e-15 * max(1.0, abs(fcur)):
                pn = None
        if pn is None:
            eta_cur *= 0.5
            streak = 0
            continue
        step = float(np.linalg.norm(pn - p))
        p, fcur = pn, fn
        streak += 1
        if streak >= 5:
            eta_cur = eta
        if degenerate is not None and degenerate(p):
            status = CONVERGED_DEGENERATE
            break
        if step <= step_tol:
            status = CONVERGED
            break
    return p, it, status


def _weighted_hessian(cs: ConstraintSystem, w: np.ndarray) -> np.ndarray:
    """Dense sum_i w_i grad^2 f_i over the flattened configuration."""
    H = np.zeros((cs.nd, cs.nd))
    d = cs.d
    for i, c in enumerate(cs.constraints):
        if not isinstance(c, EdgeLength) or w[i] == 0.0:
            continue
        wi = 2.0 * w[i]
        for ax in range(d):
            ia, ib = c.a * d + ax, c.b * d + ax
            H[ia, ia] += wi
            H[ib, ib] += wi
            H[ia, ib] -= wi
            H[ib, ia] -= wi
    return H


def _kkt_polish(cs: ConstraintSystem,
                p: np.ndarray,
                objective_gradient: Callable[[np.ndarray], np.ndarray],
                objective_weights: np.ndarray,
                feas_tol: float) -> np.ndarray | None:
    """Newton-polish the stationarity + feasibility system in (p, lam).

    ``objective_weights`` is the full constraint-row weight vector of the
    objective (1 on the free edge, or the design weights), used for the
    constant objective Hessian.  Returns the polished configuration, or None
    if the root find failed or wandered off.
    """
    rows = cs.fixed_rows()
    nd = cs.nd
    nfix = len(rows)
    lam0, _ = lagrange_multiplier(
        cs, p, objective_gradient(p) if cs.free_index is None else None)
    x0 = np.concatenate([p, lam0[rows]])
    H_obj = _weighted_hessian(cs, objective_weights)

    def fun_jac(x):
        pc, lam_rest = x[:nd], x[nd:]
        J = cs.jacobian(pc)
        A = J[rows].T
        g = objective_gradient(pc)
        F = np.concatenate([g + A @ lam_rest, cs.residual(pc)[rows]])
        w_full = np.zeros(cs.size)
        w_full[rows] = lam_rest
        Hess = H_obj + _weighted_hessian(cs, w_full)
        Jac = np.zeros((nd + nfix, nd + nfix))
        Jac[:nd, :nd] = Hess
        Jac[:nd, nd:] = A
        Jac[nd:, :nd] = A.T
        return F, Jac

    sol = scipy.optimize.root(fun_jac, x0, jac=True, method="hybr",
                              options={"xtol": 1e-14})
    pn = sol.x[:nd]
    resid = np.max(np.abs(fun_jac(sol.x)[0]))
    moved = np.linalg.norm(pn - p)
    scale = 1.0 + float(np.linalg.norm(p))
    if resid > max(feas_tol * 1e2, 1e-9) or moved > 1e-3 * scale:
        return None
    return pn


def solve(prob: OptimizationProblem) -> OptimizationResult:
    """Run the descent (plus optional KKT polish) and certify the endpoint."""
    cs = prob.system
    k = cs.free_index
    sign = 1.0 if prob.direction == MIN else -1.0

    def obj(p):
        return sign * cs.value(p, k)

    def grad(p):
        return sign * constraint_gradient(cs, p, k)

    degenerate = None
    if prob.direction == MIN:
        degenerate = lambda p: cs.value(p, k) < DEGENERATE_SQ

    p, iters, status = _descend(
        cs, prob.framework.flat, obj, grad,
        eta=prob.eta, step_tol=prob.step_tol, feas_tol=prob.feas_tol,
        max_iters=prob.max_iters, max_newton_iters=prob.max_newton_iters,
        refresh_jacobian=prob.refresh_jacobian, degenerate=degenerate)

    if status == CONVERGED and prob.polish:
        weights = np.zeros(cs.size)
        weights[k] = 1.0
        polished = _kkt_polish(cs, p,
                               lambda q: constraint_gradient(cs, q, k),
                               weights, prob.feas_tol)
        if polished is not None:
            p = polished

    lam, kkt = lagrange_multiplier(cs, p)
    licq = licq_check(cs, p, prob.rank_tol)
    so = second_order_check(cs, p, lam, prob.direction,
                            prob.pd_tol, prob.rank_tol)
    fw_star = prob.framework.with_coords(p.reshape(prob.framework.n,
                                                   prob.framework.dim))
    return OptimizationResult(
        framework=fw_star, p_star=p, objective=float(cs.value(p, k)),
        multiplier=lam, kkt_residual=kkt, licq_ok=licq,
        second_order=so, iters=iters, status=status, problem=prob)


@dataclass
class OptimizationResult:
    """Endpoint of a design run, with the KKT data needed for certificates."""

    framework: Framework
    p_star: np.ndarray
    objective: float
    multiplier: np.ndarray
    kkt_residual: float
    licq_ok: bool
    second_order: SecondOrderResult
    iters: int
    status: str
    problem: OptimizationProblem | None = None

    @property
    def certified(self) -> bool:
        return self.status == CONVERGED and self.second_order.certified

    @property
    def certifying_stress(self) -> np.ndarray | None:
        """The prestress certifying the optimum: +multiplier at a minimum,
        -multiplier at a maximum.  None when not certified."""
        if not self.certified or self.problem is None:
            return None
        sign = 1.0 if self.problem.direction == MIN else -1.0
        return sign * self.multiplier


@dataclass
class CrossEdgeResult:
    edge: int
    direction: str
    multiplier: np.ndarray
    kkt_residual: float
    second_order: SecondOrderResult
    certified: bool


def cross_edge_optimality(result: OptimizationResult,
                          j: int,
                          vanish_tol: float = 1e-6) -> CrossEdgeResult:
    """Transfer a certificate from edge k's optimum to edge j.

    At a certified optimum of P_k, the certifying stress omega doubles as
    KKT data for every other edge: if omega_j > 0 the same configuration is
    a strict local minimum of f_j under its own problem, if omega_j < 0 a
    strict local maximum.  Raises StressVanishes when |omega_j| is below
    ``vanish_tol`` (no transfer possible).
    """
    if result.problem is None:
        raise ValueError("result carries no problem reference")
    omega = result.certifying_stress
    if omega is None:
        raise ValueError("cross-edge transfer needs a certified optimum")
    if abs(omega[j]) <= vanish_tol:
        raise StressVanishes(
            f"certifying stress vanishes on edge {j} ({omega[j]:.2e})")
    cs_j = dataclasses.replace(result.problem.system, free_index=j)
    direction = MIN if omega[j] > 0 else MAX
    lam_j, kkt = lagrange_multiplier(cs_j, result.p_star)
    so = second_order_check(cs_j, result.p_star, lam_j, direction,
                            result.problem.pd_tol, result.problem.rank_tol)
    certified = bool(kkt <= result.problem.kkt_tol and so.certified)
    return CrossEdgeResult(edge=j, direction=direction, multiplier=lam_j,
                           kkt_residual=kkt, second_order=so,
                           certified=certified)
