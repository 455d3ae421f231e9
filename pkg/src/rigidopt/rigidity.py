"""First- and second-order rigidity analysis.

The rigidity matrix R(p) stacks the gradients of the squared edge lengths,
so infinitesimal flexes are null vectors of R and self-stresses are left
null vectors (row-space cokernel).  Trivial flexes come from the rigid
motions of R^d: d translations plus d(d-1)/2 infinitesimal rotations, a
space of dimension D = d(d+1)/2 whenever the vertices affinely span R^d.

The counts always satisfy the rank identity

    dim(self-stresses) - dim(nontrivial flexes) = m - n*d + trivial_dim,

which the test-suite checks on random frameworks in both dimensions.

Second-order (prestress) rigidity: a self-stress w blocks the nontrivial
flex space V if the stress form  sum_i w_i |v_a - v_b|^2  is definite on V;
`prestress_test` assembles that form on a basis of V and checks
definiteness of either sign.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateSpan, DegenerateSpanWarning
from .framework import (Constraint, Framework, PinCoordinate, build_system,
                        span_dimension)

__all__ = [
    "RigidityReport",
    "PrestressResult",
    "rigidity_matrix",
    "trivial_flex_basis",
    "analyze",
    "prestress_test",
    "second_order_stress_test",
    "UNDER_CONSTRAINED",
    "ISOSTATIC",
    "OVER_CONSTRAINED",
    "FIRST_ORDER_RIGID",
    "PRESTRESS_STABLE",
    "NOT_CERTIFIED",
    "INCONCLUSIVE",
]

UNDER_CONSTRAINED = "under-constrained"
ISOSTATIC = "isostatic"
OVER_CONSTRAINED = "over-constrained"

FIRST_ORDER_RIGID = "first-order-rigid"
PRESTRESS_STABLE = "prestress-stable"
NOT_CERTIFIED = "not-certified"
INCONCLUSIVE = "inconclusive"

#: default relative cutoff for rank decisions (fraction of the largest
#: singular value; the max(m, nd)*eps floor is applied on top).
RANK_TOL = 1e-9

_N_RANDOM_STRESS_COMBOS = 32
_STRESS_COMBO_SEED = 20240517


def _rank_cutoff(s: np.ndarray, shape: tuple[int, int], rank_tol: float) -> float:
    if s.size == 0:
        return 0.0
    floor = max(shape) * np.finfo(float).eps
    return max(rank_tol, floor) * s[0]


def rigidity_matrix(fw: Framework) -> np.ndarray:
    """R(p), shape (m, n*d): row k is the gradient of f_k(p) = |p_a - p_b|^2."""
    R = np.zeros((fw.m, fw.n * fw.dim))
    d = fw.dim
    for k, (a, b) in enumerate(fw.edges):
        diff = 2.0 * (fw.coords[a] - fw.coords[b])
        R[k, a * d:(a + 1) * d] = diff
        R[k, b * d:(b + 1) * d] = -diff
    return R


def trivial_flex_basis(fw: Framework, rank_tol: float = RANK_TOL) -> np.ndarray:
    """Orthonormal basis of the trivial-motion space T(p), rows of shape (D', n*d).

    Generators: d translations and, for each coordinate pair (i, j), the
    rotation field p -> S_ij p with the elementary skew matrix.  D' < d(d+1)/2
    only at degenerate configurations (all vertices collinear in 3D); that
    case emits a DegenerateSpanWarning.
    """
    n, d = fw.n, fw.dim
    gens = []
    for ax in range(d):
        t = np.zeros((n, d))
        t[:, ax] = 1.0
        gens.append(t.ravel())
    for i in range(d):
        for j in range(i + 1, d):
            r = np.zeros((n, d))
            r[:, i] = -fw.coords[:, j]
            r[:, j] = fw.coords[:, i]
            gens.append(r.ravel())
    G = np.stack(gens)
    U, s, Vt = np.linalg.svd(G, full_matrices=False)
    cutoff = _rank_cutoff(s, G.shape, rank_tol)
    keep = s > cutoff
    basis = Vt[keep]
    D = d * (d + 1) // 2
    if basis.shape[0] < D:
        warnings.warn(
            f"trivial-motion space has dimension {basis.shape[0]} < {D} "
            "(degenerate configuration)", DegenerateSpanWarning, stacklevel=2)
    return basis


def _null_space(A: np.ndarray, ncols: int, rank_tol: float) -> tuple[np.ndarray, int]:
    """(orthonormal null-space basis rows, rank) of A (may have zero rows)."""
    if A.shape[0] == 0:
        return np.eye(ncols), 0
    U, s, Vt = np.linalg.svd(A)
    cutoff = _rank_cutoff(s, A.shape, rank_tol)
    rank = int(np.sum(s > cutoff))
    return Vt[rank:], rank


def _left_null_space(A: np.ndarray, rank_tol: float) -> np.ndarray:
    """Orthonormal basis (rows) of the left null space of A."""
    if A.shape[0] == 0:
        return np.zeros((0, 0))
    U, s, Vt = np.linalg.svd(A)
    cutoff = _rank_cutoff(s, A.shape, rank_tol)
    rank = int(np.sum(s > cutoff))
    return U[:, rank:].T


@dataclass
class PrestressResult:
    """Outcome of the prestress-stability (second-order) test.

    verdict : one of FIRST_ORDER_RIGID, PRESTRESS_STABLE, NOT_CERTIFIED,
        INCONCLUSIVE.
    stress : the certifying stress (full constraint-row vector) when
        PRESTRESS_STABLE, else None.
    mu_min : smallest eigenvalue of the stress form on the flex basis for the
        certifying stress (positive when certified).
    """

    verdict: str
    stress: np.ndarray | None = None
    mu_min: float | None = None


@dataclass
class RigidityReport:
    """First-order counts plus the prestress verdict for one configuration."""

    rank: int
    trivial_dim: int
    nontrivial_flexes: np.ndarray      # (n_flex, n*d), orthonormal rows
    self_stresses: np.ndarray          # (n_stress, rows), orthonormal rows
    classification: str                # edge count vs. isostatic count
    first_order_rigid: bool
    prestress: PrestressResult
    pinned: bool = False

    @property
    def n_flexes(self) -> int:
        return self.nontrivial_flexes.shape[0]

    @property
    def n_stresses(self) -> int:
        return self.self_stresses.shape[0]

    def summary(self) -> str:
        return (f"{self.classification}, flexes={self.n_flexes}, "
                f"stresses={self.n_stresses}, {self.prestress.verdict}")


def _normalize_stress(w: np.ndarray) -> np.ndarray:
    """Unit norm, largest-magnitude entry positive (sign convention for
    reporting and for reproducible bases)."""
    nrm = np.linalg.norm(w)
    if nrm == 0.0:
        return w
    w = w / nrm
    k = int(np.argmax(np.abs(w)))
    if w[k] < 0:
        w = -w
    return w


def second_order_stress_test(fw: Framework, w: np.ndarray, v: np.ndarray) -> float:
    """sum_over_edges w_k |v_a - v_b|^2 for a stress w and flex v.

    Normalization of w and v is the caller's business; the certification
    paths use unit-norm vectors.  ``w`` may be a full constraint-row vector
    (trailing non-edge entries are ignored — their Hessians vanish).
    """
    w = np.asarray(w, dtype=float)
    v = np.asarray(v, dtype=float).ravel()
    d = fw.dim
    total = 0.0
    for k, (a, b) in enumerate(fw.edges):
        dv = v[a * d:(a + 1) * d] - v[b * d:(b + 1) * d]
        total += w[k] * float(dv @ dv)
    return total


def _stress_form(fw: Framework, w: np.ndarray,
                 V: np.ndarray) -> tuple[np.ndarray, float]:
    """|V| x |V| matrix of the stress form on the flex basis rows of V.

    Also returns the cancellation scale ||sum_k |w_k| D_k D_k^T||_2: the form
    is a signed sum of PSD terms, and an eigenvalue many orders below this
    scale is numerically zero (e.g. at a cubic critical point), not a
    certificate of definiteness."""
    nf = V.shape[0]
    d = fw.dim
    M = np.zeros((nf, nf))
    S = np.zeros((nf, nf))
    for k, (a, b) in enumerate(fw.edges):
        if w[k] == 0.0:
            continue
        D = V[:, a * d:(a + 1) * d] - V[:, b * d:(b + 1) * d]  # (nf, d)
        G = D @ D.T
        M += w[k] * G
        S += abs(w[k]) * G
    scale = float(np.linalg.norm(S, 2))
    return 0.5 * (M + M.T), scale


def prestress_test(fw: Framework,
                   flexes: np.ndarray,
                   stresses: np.ndarray,
                   pd_tol: float = 1e-8) -> PrestressResult:
    """Search the stress space for a stress whose form is definite on the flexes.

    With no nontrivial flexes the configuration is first-order rigid.  For a
    one-dimensional stress space both signs of the basis stress are tried;
    for higher-dimensional spaces each basis stress plus a fixed set of
    seeded random unit combinations is tried, and failure of all of them is
    only INCONCLUSIVE (definiteness of some combination may still exist).

    ``pd_tol`` is relative to the form's cancellation scale (the same sum
    with |w_k| in place of w_k): min eig > pd_tol * scale.  Measuring
    against ||M||_2 itself would pass any 1x1 form, including the
    numerically-zero one at a cubic critical point.
    """
    if flexes.shape[0] == 0:
        return PrestressResult(FIRST_ORDER_RIGID)
    if stresses.shape[0] == 0:
        return PrestressResult(NOT_CERTIFIED)

    candidates = [stresses[i] for i in range(stresses.shape[0])]
    if stresses.shape[0] > 1:
        rng = np.random.default_rng(_STRESS_COMBO_SEED)
        for _ in range(_N_RANDOM_STRESS_COMBOS):
            c = rng.standard_normal(stresses.shape[0])
            c /= np.linalg.norm(c)
            candidates.append(c @ stresses)

    for w in candidates:
        M, scale = _stress_form(fw, w, flexes)
        if scale == 0.0:
            continue
        eigs = np.linalg.eigvalsh(M)
        if eigs[0] > pd_tol * scale:
            return PrestressResult(PRESTRESS_STABLE, _apply_sign(w, +1), float(eigs[0]))
        if eigs[-1] < -pd_tol * scale:
            return PrestressResult(PRESTRESS_STABLE, _apply_sign(w, -1), float(-eigs[-1]))

    if stresses.shape[0] == 1:
        return PrestressResult(NOT_CERTIFIED)
    return PrestressResult(INCONCLUSIVE)


def _apply_sign(w: np.ndarray, sign: int) -> np.ndarray:
    w = sign * np.asarray(w, dtype=float)
    return w / np.linalg.norm(w)


def analyze(fw: Framework,
            pins: Sequence[PinCoordinate] | None = None,
            extras: Sequence[Constraint] = (),
            rank_tol: float = RANK_TOL,
            pd_tol: float = 1e-8) -> RigidityReport:
    """Full first-/second-order report for one configuration.

    Unpinned (pins is None): flexes are null R(p) intersected with the
    orthogonal complement of the trivial motions.  Pinned: flexes are the
    null space of the stacked Jacobian [R; pin rows] — with a valid pinning
    this space is isomorphic to the unpinned one.  ``extras`` (e.g. midpoint
    conditions) join the edge rows in both the flex and the stress
    computation; stress vectors then carry one multiplier entry per edge
    followed by one per extra constraint.
    """
    if pins is not None and span_dimension(fw.coords) < fw.dim:
        raise DegenerateSpan(
            "pinning requested but the vertices do not affinely span R^d")

    cs = build_system(fw, pins=pins or (), extras=extras)
    p = fw.flat
    J_full = cs.jacobian(p)

    m = fw.m
    n_extra = len(extras)
    # stress rows: edges + extras (pins are excluded: a valid pinning adds no
    # dependencies among the rows, and reaction multipliers are not stresses).
    stress_row_idx = list(range(m)) + list(range(cs.size - n_extra, cs.size))
    R_stress = J_full[stress_row_idx]
    stresses = _left_null_space(R_stress, rank_tol)
    stresses = np.stack([_normalize_stress(w) for w in stresses]) \
        if stresses.shape[0] else stresses

    T = trivial_flex_basis(fw, rank_tol)
    if pins is not None:
        flexes, _ = _null_space(J_full, cs.nd, rank_tol)
        _, rank = _null_space(R_stress, cs.nd, rank_tol)
    else:
        null, rank = _null_space(R_stress, cs.nd, rank_tol)
        # Project out the trivial directions and re-orthonormalize what
        # remains.  The keep threshold gets a 1e-7 floor: directions kept by
        # the rank decision can carry row-space contamination of that order,
        # and a genuinely nontrivial flex has O(1) residual norm.
        resid = null - (null @ T.T) @ T
        if resid.size:
            _, s, Vt = np.linalg.svd(resid)
            # absolute cutoff: the null rows are unit vectors, so a genuine
            # nontrivial direction keeps O(1) norm after the projection
            keep = max(rank_tol, 1e-7)
            flexes = Vt[:int(np.sum(s > keep))]
        else:
            flexes = np.zeros((0, cs.nd))

    D = fw.dim * (fw.dim + 1) // 2
    if m + D < fw.n * fw.dim:
        classification = UNDER_CONSTRAINED
    elif m + D == fw.n * fw.dim:
        classification = ISOSTATIC
    else:
        classification = OVER_CONSTRAINED

    first_order = flexes.shape[0] == 0
    prestress = prestress_test(fw, flexes, stresses, pd_tol)
    return RigidityReport(rank=rank,
                          trivial_dim=T.shape[0],
                          nontrivial_flexes=flexes,
                          self_stresses=stresses,
                          classification=classification,
                          first_order_rigid=first_order,
                          prestress=prestress,
                          pinned=pins is not None)
