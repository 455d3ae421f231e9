"""Designing frameworks that carry a prescribed self-stress pattern.

Instead of freeing one edge, fix a complement S^c of the edges and minimize
the weighted sum  sum_{k in S} sigma_k f_k(p).  At a KKT point the vector
that is sigma on S and the multipliers on S^c annihilates the rigidity
matrix from the left — i.e. the designed components of a self-stress are
*chosen*, not found.  Positive definiteness of the weighted Hessian form on
the critical cone again certifies a strict constrained minimum, and then
the designed stress blocks every flex in that cone.

`force_density_solve` is the linear special case with nothing fixed except
pinned coordinates: minimizing sum_i w_i f_i is a (weighted-Laplacian)
linear solve for the free coordinates.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import SingularSystem
from .framework import (ConstraintSystem, EdgeLength, Framework,
                        build_system)
from .optimize import (MIN, RANK_TOL, SecondOrderResult, _descend,
                       _kkt_polish, lagrange_multiplier, licq_check,
                       second_order_check, CONVERGED)
from .pinning import PinningSpec, make_pinning

__all__ = [
    "StressDesignProblem",
    "StressDesignResult",
    "solve_stress_design",
    "force_density_solve",
]


@dataclass
class StressDesignProblem:
    """Minimize sum sigma_k f_k over the manifold fixing the other edges.

    ``targets`` maps edge index -> sigma_k (the designed stress component);
    every edge not in the map is held at its current length.  The framework
    is moved into the pinning chart on construction via
    :func:`stress_design_problem`.
    """

    framework: Framework
    system: ConstraintSystem          # complement edges + pins; no free row
    targets: dict[int, float]
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


def stress_design_problem(fw: Framework,
                          targets: Mapping[int, float],
                          anchors: Sequence[int] | None = None,
                          **overrides) -> StressDesignProblem:
    """Pin the framework and build the complement constraint system."""
    targets = {int(k): float(v) for k, v in targets.items()}
    if not targets:
        raise ValueError("no designed edges")
    for k in targets:
        if not 0 <= k < fw.m:
            raise ValueError(f"designed edge {k} out of range")
    spec, pinned_fw = make_pinning(fw, anchors)
    cons = []
    for k, (a, b) in enumerate(pinned_fw.edges):
        if k not in targets:
            cons.append(EdgeLength(a, b, pinned_fw.edge_length(k) ** 2))
    cons.extend(spec.constraints())
    cs = ConstraintSystem(pinned_fw.n, pinned_fw.dim, cons)
    return StressDesignProblem(framework=pinned_fw, system=cs,
                               targets=targets, pinning=spec, **overrides)


@dataclass
class StressDesignResult:
    framework: Framework
    p_star: np.ndarray
    objective: float
    multiplier: np.ndarray        # per framework edge, sigma on S; pins after
    kkt_residual: float
    stress_residual: float        # ||lam^T R_g|| / (||lam|| ||R_g||)
    licq_ok: bool
    second_order: SecondOrderResult
    iters: int
    status: str
    problem: StressDesignProblem | None = None

    @property
    def certified(self) -> bool:
        return self.status == CONVERGED and self.second_order.certified

    @property
    def designed_stress(self) -> np.ndarray:
        """Edge part of the multiplier: the self-stress carried at the optimum."""
        m = self.framework.m
        return self.multiplier[:m]


def solve_stress_design(prob: StressDesignProblem) -> StressDesignResult:
    """Projected gradient descent on the weighted length objective."""
    cs = prob.system
    fw = prob.framework
    d = fw.dim
    items = sorted(prob.targets.items())
    sig_edges = [fw.edges[k] for k, _ in items]
    sig = np.array([v for _, v in items])

    def obj(p):
        total = 0.0
        for (a, b), s in zip(sig_edges, sig):
            diff = p[a * d:(a + 1) * d] - p[b * d:(b + 1) * d]
            total += s * float(diff @ diff)
        return total

    def grad(p):
        g = np.zeros_like(p)
        for (a, b), s in zip(sig_edges, sig):
            diff = (2.0 * s) * (p[a * d:(a + 1) * d] - p[b * d:(b + 1) * d])
            g[a * d:(a + 1) * d] += diff
            g[b * d:(b + 1) * d] -= diff
        return g

    p, iters, status = _descend(
        cs, fw.flat, obj, grad,
        eta=prob.eta, step_tol=prob.step_tol, feas_tol=prob.feas_tol,
        max_iters=prob.max_iters, max_newton_iters=prob.max_newton_iters,
        refresh_jacobian=prob.refresh_jacobian)

    if status == CONVERGED and prob.polish:
        # objective Hessian weights live on a throwaway system that has one
        # row per designed edge, so reuse the shared polish with an extended
        # constraint list: designed rows first are *not* constraints here —
        # instead fold the objective Hessian in directly.
        polished = _polish_design(cs, p, obj, grad, sig_edges, sig,
                                  prob.feas_tol)
        if polished is not None:
            p = polished

    lam_rest, kkt = lagrange_multiplier(cs, p, grad(p))

    # full multiplier over the framework's edges (sigma on S), then pins
    n_pins = cs.size - (fw.m - len(items))
    lam_full = np.zeros(fw.m + n_pins)
    ci = 0
    for k in range(fw.m):
        if k in prob.targets:
            lam_full[k] = prob.targets[k]
        else:
            lam_full[k] = lam_rest[ci]
            ci += 1
    lam_full[fw.m:] = lam_rest[ci:]

    stress_residual = _generalized_stress_residual(fw, cs, p, lam_full)
    licq = licq_check(cs, p, prob.rank_tol)
    so = _design_second_order(cs, p, lam_rest, sig_edges, sig,
                              prob.pd_tol, prob.rank_tol)
    fw_star = fw.with_coords(p.reshape(fw.n, d))
    return StressDesignResult(
        framework=fw_star, p_star=p, objective=float(obj(p)),
        multiplier=lam_full, kkt_residual=kkt,
        stress_residual=stress_residual, licq_ok=licq, second_order=so,
        iters=iters, status=status, problem=prob)


def _polish_design(cs, p, obj, grad, sig_edges, sig, feas_tol):
    """KKT polish with the design objective (constant Hessian)."""
    import scipy.optimize

    rows = cs.fixed_rows()
    nd = cs.nd
    d = cs.d
    H_obj = np.zeros((nd, nd))
    for (a, b), s in zip(sig_edges, sig):
        w = 2.0 * s
        for ax in range(d):
            ia, ib = a * d + ax, b * d + ax
            H_obj[ia, ia] += w
            H_obj[ib, ib] += w
            H_obj[ia, ib] -= w
            H_obj[ib, ia] -= w

    lam0, _ = lagrange_multiplier(cs, p, grad(p))
    x0 = np.concatenate([p, lam0[rows]])
    from .optimize import _weighted_hessian

    def fun_jac(x):
        pc, lam_rest = x[:nd], x[nd:]
        J = cs.jacobian(pc)
        A = J[rows].T
        F = np.concatenate([grad(pc) + A @ lam_rest, cs.residual(pc)[rows]])
        w_full = np.zeros(cs.size)
        w_full[rows] = lam_rest
        Hess = H_obj + _weighted_hessian(cs, w_full)
        n = nd + len(rows)
        Jac = np.zeros((n, n))
        Jac[:nd, :nd] = Hess
        Jac[:nd, nd:] = A
        Jac[nd:, :nd] = A.T
        return F, Jac

    sol = scipy.optimize.root(fun_jac, x0, jac=True, method="hybr",
                              options={"xtol": 1e-14})
    pn = sol.x[:nd]
    resid = np.max(np.abs(fun_jac(sol.x)[0]))
    if resid > max(feas_tol * 1e2, 1e-9) or \
            np.linalg.norm(pn - p) > 1e-3 * (1.0 + np.linalg.norm(p)):
        return None
    return pn


def _generalized_stress_residual(fw: Framework, cs: ConstraintSystem,
                                 p: np.ndarray, lam_full: np.ndarray) -> float:
    """||lam^T [R; G]|| / (||lam|| ||[R; G]||) for the edge+pin multiplier."""
    from .rigidity import rigidity_matrix

    fw_p = fw.with_coords(p.reshape(fw.n, fw.dim))
    R = rigidity_matrix(fw_p)
    blocks = [R]
    G = [c.gradient(p, cs.d) for c in cs.constraints
         if not isinstance(c, EdgeLength)]
    if G:
        blocks.append(np.stack(G))
    Rg = np.vstack(blocks)
    num = np.linalg.norm(lam_full @ Rg)
    den = np.linalg.norm(lam_full) * np.linalg.norm(Rg, 2)
    return float(num / den) if den else 0.0


def _design_second_order(cs, p, lam_rest, sig_edges, sig, pd_tol, rank_tol):
    """Second-order check with the combined weights (sigma + multipliers)."""
    from .optimize import _critical_cone

    V = _critical_cone(cs, p, rank_tol)
    if V.shape[0] == 0:
        return SecondOrderResult(True, MIN, 0.0, 0.0, 0, cone_empty=True)
    d = cs.d
    nf = V.shape[0]
    M = np.zeros((nf, nf))
    for (a, b), s in zip(sig_edges, sig):
        D = V[:, a * d:(a + 1) * d] - V[:, b * d:(b + 1) * d]
        M += (2.0 * s) * (D @ D.T)
    for i, c in enumerate(cs.constraints):
        if not isinstance(c, EdgeLength) or lam_rest[i] == 0.0:
            continue
        D = V[:, c.a * d:(c.a + 1) * d] - V[:, c.b * d:(c.b + 1) * d]
        M += (2.0 * lam_rest[i]) * (D @ D.T)
    M = 0.5 * (M + M.T)
    eigs = np.linalg.eigvalsh(M)
    norm = max(abs(eigs[0]), abs(eigs[-1]))
    certified = norm > 0.0 and eigs[0] > pd_tol * norm
    return SecondOrderResult(bool(certified), MIN,
                             float(eigs[0]), float(eigs[-1]), nf)


# ---------------------------------------------------------------------------
# Force density (linear form finding)
# ---------------------------------------------------------------------------


def force_density_solve(fw: Framework,
                        weights: Sequence[float],
                        pinned) -> Framework:
    """Minimize sum_i w_i |p_a - p_b|^2 with some coordinates held fixed.

    ``pinned`` may be a PinningSpec, a list of vertex indices (fixed fully),
    or a list of (vertex, axis) pairs; fixed coordinates keep their current
    values.  The stationarity system for the free coordinates is the weighted
    graph Laplacian (per axis); it is solved directly.  Raises SingularSystem
    when that reduced matrix is singular (e.g. all weights zero, or a free
    subgraph with zero total weight) — indefinite-but-nonsingular systems
    (mixed-sign weights) are solved and give a stationary point.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (fw.m,):
        raise ValueError(f"need one weight per edge ({fw.m}), got {w.shape}")

    d = fw.dim
    nd = fw.n * d
    fixed: set[int] = set()
    if isinstance(pinned, PinningSpec):
        pairs = pinned.pinned
    else:
        pairs = []
        for item in pinned:
            if np.isscalar(item) or isinstance(item, (int, np.integer)):
                pairs.extend((int(item), ax) for ax in range(d))
            else:
                v, ax = item
                pairs.append((int(v), int(ax)))
    for v, ax in pairs:
        if not (0 <= v < fw.n and 0 <= ax < d):
            raise ValueError(f"pinned coordinate ({v}, {ax}) out of range")
        fixed.add(v * d + ax)
    free = [i for i in range(nd) if i not in fixed]
    if not free:
        return fw.with_coords(fw.coords)

    H = np.zeros((nd, nd))
    for k, (a, b) in enumerate(fw.edges):
        wk = 2.0 * w[k]
        if wk == 0.0:
            continue
        for ax in range(d):
            ia, ib = a * d + ax, b * d + ax
            H[ia, ia] += wk
            H[ib, ib] += wk
            H[ia, ib] -= wk
            H[ib, ia] -= wk

    p = fw.flat
    fixed_idx = sorted(fixed)
    Hff = H[np.ix_(free, free)]
    rhs = -H[np.ix_(free, fixed_idx)] @ p[fixed_idx] if fixed_idx else \
        np.zeros(len(free))

    s = np.linalg.svd(Hff, compute_uv=False) if len(free) else np.array([1.0])
    if s[0] == 0.0 or s[-1] <= 1e-12 * s[0]:
        raise SingularSystem("force-density system is singular "
                             "(zero-weight component or unpinned motion)")
    p_new = p.copy()
    p_new[free] = np.linalg.solve(Hff, rhs)
    return fw.with_coords(p_new.reshape(fw.n, d))
