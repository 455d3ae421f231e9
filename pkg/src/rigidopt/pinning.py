"""Pinning: removing the rigid motions with coordinate constraints.

Ambient rigid motions make every optimum a d(d+1)/2-dimensional orbit, so
the optimization problems pin D = d(d+1)/2 coordinates instead of factoring
the group out.  The standard chart:

    d = 2:  vertex v0 at the origin, vertex v1 on the (positive) x-axis
            -> pins (v0,x), (v0,y), (v1,y)
    d = 3:  v0 at the origin, v1 on the x-axis, v2 in the xy-plane
            -> pins (v0,x|y|z), (v1,y), (v1,z), (v2,z)

`make_pinning` moves the framework into that chart with an actual isometry
(so the pinned coordinates are exactly zero) and returns the pin list.
`pinning_condition` checks that a pin set actually kills the trivial
motions: rank(G(p) T(p)^T) must equal the trivial dimension, where G holds
the pin gradient rows and T a trivial-motion basis.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DegenerateAnchors
from .framework import Framework, PinCoordinate
from .rigidity import RANK_TOL, _rank_cutoff, trivial_flex_basis

__all__ = ["PinningSpec", "make_pinning", "pinning_condition"]


@dataclass(frozen=True)
class PinningSpec:
    """Which coordinates are pinned (all to zero) and the anchors behind them."""

    pinned: tuple[tuple[int, int], ...]   # (vertex, axis) pairs
    anchors: tuple[int, ...]

    def constraints(self) -> list[PinCoordinate]:
        return [PinCoordinate(v, ax, 0.0) for (v, ax) in self.pinned]

    @property
    def size(self) -> int:
        return len(self.pinned)

    def origin_vertex(self) -> int | None:
        """The vertex with the most pinned axes (the fully pinned anchor)."""
        counts: dict[int, int] = {}
        for v, _ in self.pinned:
            counts[v] = counts.get(v, 0) + 1
        if not counts:
            return None
        best = max(counts.values())
        return min(v for v, c in counts.items() if c == best)


def _default_anchors(fw: Framework) -> list[int]:
    """Greedy anchors: vertex 0; the vertex farthest from it; in 3D also the
    vertex maximizing the triangle area with the first two."""
    p = fw.coords
    a0 = 0
    dists = np.linalg.norm(p - p[a0], axis=1)
    a1 = int(np.argmax(dists))
    anchors = [a0, a1]
    if fw.dim == 3:
        u = p[a1] - p[a0]
        areas = np.linalg.norm(np.cross(u, p - p[a0]), axis=1)
        areas[[a0, a1]] = -1.0
        anchors.append(int(np.argmax(areas)))
    return anchors


def make_pinning(fw: Framework,
                 anchors: Sequence[int] | None = None) -> tuple[PinningSpec, Framework]:
    """Move ``fw`` by an isometry into the pinning chart and return the pins.

    ``anchors`` are d vertex indices (default: greedy choice); they must be
    affinely independent or DegenerateAnchors is raised.  The returned
    framework has anchor 0 at the origin, anchor 1 on the positive x-axis,
    and (3D) anchor 2 in the xy-plane; the pin constraints hold exactly.
    """
    d = fw.dim
    if anchors is None:
        anchors = _default_anchors(fw)
    anchors = [int(a) for a in anchors]
    if len(anchors) != d or len(set(anchors)) != d:
        raise DegenerateAnchors(f"need {d} distinct anchor vertices, got {anchors}")

    p = fw.coords
    shifted = p - p[anchors[0]]
    M = shifted[anchors[1:]]                       # (d-1, d)
    if M.size:
        s = np.linalg.svd(M, compute_uv=False)
        scale = np.max(np.linalg.norm(shifted, axis=1))
        if s.size < d - 1 or s[-1] <= 1e-10 * max(scale, 1.0):
            raise DegenerateAnchors(
                f"anchor vertices {anchors} are affinely dependent")

    # Orthogonal Q with anchor rows lower-triangular: M @ Q = L.  QR of M^T
    # gives exactly that; column sign flips make the diagonal positive
    # (anchor 1 on the *positive* x-axis) without disturbing the zeros.
    Q, R = np.linalg.qr(np.asarray(M.T), mode="complete")
    for j in range(min(d - 1, R.shape[0])):
        if R[j, j] < 0:
            Q[:, j] = -Q[:, j]
    if np.linalg.det(Q) < 0:
        Q[:, -1] = -Q[:, -1]   # last column is unconstrained by the anchors
    new_coords = shifted @ Q

    pins: list[tuple[int, int]] = [(anchors[0], ax) for ax in range(d)]
    pins += [(anchors[1], ax) for ax in range(1, d)]
    if d == 3:
        pins.append((anchors[2], 2))
    spec = PinningSpec(tuple(pins), tuple(anchors))

    # zero the pinned coordinates exactly (they are ~1e-16 after the rotation)
    for v, ax in pins:
        new_coords[v, ax] = 0.0
    return spec, fw.with_coords(new_coords)


def pinning_condition(fw: Framework, spec: PinningSpec,
                      rank_tol: float = RANK_TOL) -> tuple[bool, int]:
    """Does the pin set remove every trivial motion at this configuration?

    Returns ``(holds, rank)`` where rank = rank(G T^T) and the condition
    holds iff rank equals the trivial dimension D'.
    """
    T = trivial_flex_basis(fw, rank_tol)
    G = np.zeros((spec.size, fw.n * fw.dim))
    for i, (v, ax) in enumerate(spec.pinned):
        G[i, v * fw.dim + ax] = 1.0
    A = G @ T.T
    s = np.linalg.svd(A, compute_uv=False)
    cutoff = _rank_cutoff(s, A.shape, rank_tol)
    rank = int(np.sum(s > cutoff))
    return rank == T.shape[0], rank
