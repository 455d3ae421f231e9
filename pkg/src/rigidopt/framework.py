"""Bar frameworks and squared-length constraint systems.

A framework is a graph drawn in R^d (d = 2 or 3) with vertices ``p_1..p_n``
and edges treated as rigid bars.  Every geometric quantity downstream is
built from the squared-length maps

    f_ij(p) = |p_i - p_j|^2,

whose gradients are linear in p and whose Hessians are constant.  This module
holds the framework container, the constraint kinds (squared edge lengths,
pinned coordinates, general linear functionals) and a ``ConstraintSystem``
that evaluates residuals, Jacobians and stress-weighted Hessian forms for a
flattened configuration vector.

Configurations are flattened vertex-major: ``p.ravel()`` puts the d
coordinates of vertex 0 first, then vertex 1, and so on.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

__all__ = [
    "Framework",
    "EdgeLength",
    "PinCoordinate",
    "Linear",
    "Constraint",
    "ConstraintSystem",
    "build_system",
    "midpoint_constraints",
    "edge_length_sq",
    "constraint_gradient",
    "stress_quadratic",
    "stress_bilinear",
    "perturb",
    "align",
    "span_dimension",
]


def _as_coords(coords, dim: int | None = None) -> np.ndarray:
    p = np.asarray(coords, dtype=float)
    if p.ndim != 2:
        raise ValueError(f"coordinates must be an (n, d) array, got shape {p.shape}")
    if dim is not None and p.shape[1] != dim:
        raise ValueError(f"expected dimension {dim}, got {p.shape[1]}")
    return p


@dataclass(frozen=True)
class Framework:
    """Immutable bar framework: vertex coordinates plus an edge list.

    Parameters
    ----------
    coords : (n, d) array
        Vertex positions, d in {2, 3}.
    edges : sequence of (i, j)
        Vertex index pairs, stored sorted as i < j.  Duplicate edges, loops
        and zero-length bars are rejected.
    """

    coords: np.ndarray
    edges: tuple[tuple[int, int], ...]

    def __init__(self, coords, edges: Sequence[tuple[int, int]]):
        p = _as_coords(coords)
        n, d = p.shape
        if d not in (2, 3):
            raise ValueError(f"ambient dimension must be 2 or 3, got {d}")
        if n < 2:
            raise ValueError("a framework needs at least two vertices")
        norm_edges = []
        seen = set()
        for (a, b) in edges:
            a, b = int(a), int(b)
            if a == b:
                raise ValueError(f"loop edge ({a}, {b})")
            if not (0 <= a < n and 0 <= b < n):
                raise ValueError(f"edge ({a}, {b}) references a missing vertex")
            if a > b:
                a, b = b, a
            if (a, b) in seen:
                raise ValueError(f"duplicate edge ({a}, {b})")
            seen.add((a, b))
            if np.allclose(p[a], p[b]):
                raise ValueError(f"edge ({a}, {b}) has zero length")
            norm_edges.append((a, b))
        p = p.copy()
        p.flags.writeable = False
        object.__setattr__(self, "coords", p)
        object.__setattr__(self, "edges", tuple(norm_edges))

    @property
    def n(self) -> int:
        return self.coords.shape[0]

    @property
    def dim(self) -> int:
        return self.coords.shape[1]

    @property
    def m(self) -> int:
        return len(self.edges)

    @property
    def flat(self) -> np.ndarray:
        """Configuration flattened vertex-major, shape (n*d,)."""
        return self.coords.ravel().copy()

    def with_coords(self, coords) -> "Framework":
        """Same graph at new coordinates."""
        return Framework(np.asarray(coords, dtype=float).reshape(self.n, self.dim),
                         self.edges)

    def edge_vector(self, k: int) -> np.ndarray:
        a, b = self.edges[k]
        return self.coords[a] - self.coords[b]

    def edge_length(self, k: int) -> float:
        return float(np.linalg.norm(self.edge_vector(k)))

    def edge_lengths(self) -> np.ndarray:
        return np.array([self.edge_length(k) for k in range(self.m)])


# ---------------------------------------------------------------------------
# Constraint kinds.  Each one evaluates f(p) and its gradient on the
# flattened configuration; EdgeLength is the only kind with a nonzero
# (and constant) Hessian.
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EdgeLength:
    """Squared length of edge (a, b) held at ``target`` (a squared length)."""

    a: int
    b: int
    target: float

    def value(self, p: np.ndarray, d: int) -> float:
        pa = p[self.a * d:(self.a + 1) * d]
        pb = p[self.b * d:(self.b + 1) * d]
        diff = pa - pb
        return float(diff @ diff)

    def gradient(self, p: np.ndarray, d: int) -> np.ndarray:
        g = np.zeros_like(p)
        pa = p[self.a * d:(self.a + 1) * d]
        pb = p[self.b * d:(self.b + 1) * d]
        diff = 2.0 * (pa - pb)
        g[self.a * d:(self.a + 1) * d] = diff
        g[self.b * d:(self.b + 1) * d] = -diff
        return g


@dataclass(frozen=True)
class PinCoordinate:
    """Coordinate ``axis`` of ``vertex`` held at ``target``."""

    vertex: int
    axis: int
    target: float = 0.0

    def value(self, p: np.ndarray, d: int) -> float:
        return float(p[self.vertex * d + self.axis])

    def gradient(self, p: np.ndarray, d: int) -> np.ndarray:
        g = np.zeros_like(p)
        g[self.vertex * d + self.axis] = 1.0
        return g


@dataclass(frozen=True)
class Linear:
    """General linear functional a.p held at ``target``.

    ``coeffs`` has length n*d (flattened vertex-major).  Used e.g. for
    midpoint conditions: p_mid - (p_a + p_b)/2 = 0, one constraint per
    coordinate.
    """

    coeffs: tuple[float, ...]
    target: float = 0.0

    def value(self, p: np.ndarray, d: int) -> float:
        return float(np.dot(self.coeffs, p))

    def gradient(self, p: np.ndarray, d: int) -> np.ndarray:
        return np.asarray(self.coeffs, dtype=float).copy()


Constraint = Union[EdgeLength, PinCoordinate, Linear]


def midpoint_constraints(n: int, d: int, mid: int, pair: tuple[int, int]) -> list[Linear]:
    """d Linear constraints forcing vertex ``mid`` onto the midpoint of ``pair``."""
    a, b = pair
    out = []
    for ax in range(d):
        c = np.zeros(n * d)
        c[mid * d + ax] = 1.0
        c[a * d + ax] = -0.5
        c[b * d + ax] = -0.5
        out.append(Linear(tuple(c), 0.0))
    return out


@dataclass
class ConstraintSystem:
    """Ordered list of constraints over a flattened configuration.

    ``free_index`` optionally marks one constraint (the objective edge in the
    length optimization problems) that is excluded from the feasibility set:
    :meth:`fixed_rows` lists every other row, and the projection/solvers only
    enforce those.

    The constraint layout convention used throughout the package is
    edges first (in framework edge order), then pins, then linear extras, so
    that a multiplier/stress vector's leading m entries always line up with
    the edge list.
    """

    n: int
    d: int
    constraints: list[Constraint]
    free_index: int | None = None

    @property
    def size(self) -> int:
        return len(self.constraints)

    @property
    def nd(self) -> int:
        return self.n * self.d

    def fixed_rows(self) -> list[int]:
        return [i for i in range(self.size) if i != self.free_index]

    def value(self, p: np.ndarray, i: int) -> float:
        return self.constraints[i].value(p, self.d)

    def residual(self, p: np.ndarray) -> np.ndarray:
        """f_i(p) - target_i for every constraint (free row included)."""
        p = np.asarray(p, dtype=float)
        return np.array([c.value(p, self.d) - c.target for c in self.constraints])

    def jacobian(self, p: np.ndarray) -> np.ndarray:
        """Rows are the constraint gradients at p, shape (size, n*d)."""
        p = np.asarray(p, dtype=float)
        return np.stack([c.gradient(p, self.d) for c in self.constraints])

    def fixed_residual(self, p: np.ndarray) -> np.ndarray:
        return self.residual(p)[self.fixed_rows()]

    def fixed_jacobian(self, p: np.ndarray) -> np.ndarray:
        return self.jacobian(p)[self.fixed_rows()]

    def is_feasible(self, p: np.ndarray, feas_tol: float = 1e-10) -> bool:
        r = self.fixed_residual(p)
        return bool(r.size == 0 or np.max(np.abs(r)) <= feas_tol)

    def hessian(self, i: int) -> np.ndarray:
        """Dense (n*d, n*d) Hessian of constraint i (constant; zero except
        for EdgeLength rows)."""
        H = np.zeros((self.nd, self.nd))
        c = self.constraints[i]
        if isinstance(c, EdgeLength):
            d = self.d
            for ax in range(d):
                ia, ib = c.a * d + ax, c.b * d + ax
                H[ia, ia] += 2.0
                H[ib, ib] += 2.0
                H[ia, ib] -= 2.0
                H[ib, ia] -= 2.0
        return H

    # -- stress-weighted Hessian forms ------------------------------------

    def stress_bilinear(self, w: np.ndarray, va: np.ndarray, vb: np.ndarray) -> float:
        """sum_i w_i va^T (grad^2 f_i) vb.

        Only EdgeLength constraints contribute; ``w`` may cover either just
        the edges or the full constraint list (trailing entries multiply zero
        Hessians either way).
        """
        w = np.asarray(w, dtype=float)
        va = np.asarray(va, dtype=float)
        vb = np.asarray(vb, dtype=float)
        total = 0.0
        d = self.d
        for i, c in enumerate(self.constraints):
            if i >= w.size:
                break
            if not isinstance(c, EdgeLength):
                continue
            da = va[c.a * d:(c.a + 1) * d] - va[c.b * d:(c.b + 1) * d]
            db = vb[c.a * d:(c.a + 1) * d] - vb[c.b * d:(c.b + 1) * d]
            total += w[i] * 2.0 * float(da @ db)
        return total

    def stress_quadratic(self, w: np.ndarray, v: np.ndarray) -> float:
        """sum_i w_i v^T (grad^2 f_i) v  =  2 * sum_edges w_i |v_a - v_b|^2."""
        return self.stress_bilinear(w, v, v)


def build_system(fw: Framework,
                 free_edge: int | None = None,
                 pins: Sequence[PinCoordinate] = (),
                 extras: Sequence[Constraint] = (),
                 targets: Sequence[float] | None = None) -> ConstraintSystem:
    """ConstraintSystem for a framework: one EdgeLength per edge (targets
    default to the current squared lengths), then pins, then extras.

    ``free_edge`` is an index into ``fw.edges`` and marks that row free.
    ``targets`` are *lengths* (not squared) overriding the measured ones.
    """
    cons: list[Constraint] = []
    for k, (a, b) in enumerate(fw.edges):
        if targets is not None:
            t = float(targets[k]) ** 2
        else:
            t = fw.edge_length(k) ** 2
        cons.append(EdgeLength(a, b, t))
    cons.extend(pins)
    cons.extend(extras)
    return ConstraintSystem(fw.n, fw.dim, cons, free_index=free_edge)


# ---------------------------------------------------------------------------
# Free functions on frameworks.
# ---------------------------------------------------------------------------


def edge_length_sq(fw: Framework, k: int) -> float:
    """f_k(p) = squared length of edge k."""
    v = fw.edge_vector(k)
    return float(v @ v)


def constraint_gradient(cs: ConstraintSystem, p: np.ndarray, i: int) -> np.ndarray:
    """Gradient row of constraint i at configuration p (flattened)."""
    return cs.constraints[i].gradient(np.asarray(p, dtype=float), cs.d)


def stress_quadratic(cs: ConstraintSystem, w: np.ndarray, v: np.ndarray) -> float:
    return cs.stress_quadratic(w, v)


def stress_bilinear(cs: ConstraintSystem, w: np.ndarray, va: np.ndarray, vb: np.ndarray) -> float:
    return cs.stress_bilinear(w, va, vb)


def perturb(fw: Framework, magnitude: float, seed: int) -> Framework:
    """Deterministic random perturbation: every coordinate moves by an
    independent uniform draw from [-magnitude, magnitude]."""
    rng = np.random.default_rng(seed)
    delta = rng.uniform(-magnitude, magnitude, size=fw.coords.shape)
    return fw.with_coords(fw.coords + delta)


def align(fw_a: Framework, fw_b: Framework) -> tuple[float, Framework]:
    """Best isometric alignment of fw_b onto fw_a (translations, rotations
    and reflections all allowed).

    Returns ``(rmsd, aligned_b)`` where rmsd is the root-mean-square
    per-vertex distance after the optimal orthogonal Procrustes transform.
    Over the full orthogonal group the optimum is U V^T from the SVD of the
    cross-covariance; both determinant signs are admitted by construction.
    """
    if fw_a.n != fw_b.n or fw_a.dim != fw_b.dim:
        raise ValueError("frameworks must share vertex count and dimension")
    A = fw_a.coords
    B = fw_b.coords
    ca = A.mean(axis=0)
    cb = B.mean(axis=0)
    A0 = A - ca
    B0 = B - cb
    U, _, Vt = np.linalg.svd(B0.T @ A0)
    R = U @ Vt  # orthogonal, may include a reflection
    Bal = B0 @ R + ca
    rmsd = float(np.sqrt(np.mean(np.sum((Bal - A) ** 2, axis=1))))
    return rmsd, fw_b.with_coords(Bal)


def span_dimension(coords: np.ndarray, tol: float = 1e-9) -> int:
    """Dimension of the affine span of the rows of coords."""
    p = _as_coords(coords)
    q = p - p.mean(axis=0)
    if q.shape[0] == 1:
        return 0
    s = np.linalg.svd(q, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > tol * s[0]))
