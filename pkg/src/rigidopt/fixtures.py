"""Reference frameworks used by the tests, demos and documentation.

Coordinates of the *_optimized variants are quoted to five significant
digits, which is the precision the alignment checks use.  Edge orders are
part of the contract: free/tuning edge indices below refer to these lists.
"""

from __future__ import annotations

import math

import numpy as np

from .framework import Framework, Linear, midpoint_constraints

__all__ = [
    "braced_hexagon",
    "braced_hexagon_maximized",
    "BRACED_HEXAGON_FREE_EDGE",
    "BRACED_HEXAGON_ANCHORS",
    "linked_triangles",
    "linked_triangles_minimized",
    "LINKED_TRIANGLES_FREE_EDGE",
    "LINKED_TRIANGLES_ANCHORS",
    "midpoint_braced_square",
    "midpoint_braced_square_minimized",
    "midpoint_square_constraints",
    "MIDPOINT_SQUARE_FREE_EDGE",
    "MIDPOINT_SQUARE_ANCHORS",
    "bridged_triangles",
    "bridged_triangles_tuned",
    "BRIDGED_TRIANGLES_FREE_EDGE",
    "BRIDGED_TRIANGLES_TUNE_EDGE",
    "BRIDGED_TRIANGLES_ALPHA_PAIR",
    "BRIDGED_TRIANGLES_ANCHORS",
    "braced_tower",
    "tower_designed_edges",
    "BRACED_TOWER_ANCHORS",
    "double_triangular_prism",
    "regular_braced_hexagon",
    "four_bar",
    "FOUR_BAR_FREE_EDGE",
    "crossed_square",
    "path_graph",
    "all_fixtures",
]


# -- hexagonal ring with three long braces ----------------------------------
# Boundary edges 0..5, braces 6..8; the last brace is the design (free) edge.

_HEX_EDGES = [(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0),
              (1, 4), (2, 5), (0, 3)]
BRACED_HEXAGON_FREE_EDGE = 8
BRACED_HEXAGON_ANCHORS = (0, 5)


def braced_hexagon() -> Framework:
    coords = [(0.0, 0.0), (-0.5, 0.86603), (0.62583, 1.5160),
              (2.6258, 1.5160), (3.4744, 0.66750), (1.0, 0.0)]
    return Framework(coords, _HEX_EDGES)


def braced_hexagon_maximized() -> Framework:
    """Length-maximized configuration of the free brace (reference result)."""
    coords = [(0.0, 0.0), (-0.61425, 0.78911), (0.48962, 1.4758),
              (2.4634, 1.7987), (3.3594, 1.0005), (1.0, 0.0)]
    return Framework(coords, _HEX_EDGES)


def regular_braced_hexagon(radius: float = 1.0) -> Framework:
    """Same graph on a regular hexagon (degenerate: three braces meet at the
    center's mirror symmetry, so this one is *not* first-order rigid)."""
    coords = [(radius * math.cos(k * math.pi / 3.0),
               radius * math.sin(k * math.pi / 3.0)) for k in range(6)]
    return Framework(coords, _HEX_EDGES)


# -- two triangles linked by three bars --------------------------------------
# Triangles (0,1,2) and (3,4,5); links 6..8, the last one free.

_LINKED_EDGES = [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5),
                 (1, 4), (0, 3), (2, 5)]
LINKED_TRIANGLES_FREE_EDGE = 8
LINKED_TRIANGLES_ANCHORS = (0, 3)


def linked_triangles() -> Framework:
    coords = [(0.0, 0.0), (0.65, 1.1258), (1.65, 1.1303),
              (3.2, 0.0), (3.4568, 2.1850), (2.3762, 0.87259)]
    return Framework(coords, _LINKED_EDGES)


def linked_triangles_minimized() -> Framework:
    coords = [(0.0, 0.0), (0.85812, 0.97654), (1.8396, 0.78484),
              (3.2, 0.0), (3.6146, 2.1606), (2.4417, 0.93002)]
    return Framework(coords, _LINKED_EDGES)


# -- square with edge midpoints and an inner braced quadrilateral -------------
# Vertices: 0..3 outer corners, 4..7 edge midpoints, 8..11 inner quad.
# Edges: outer square, inner quad, four rungs (midpoint -> inner); rung
# index 8 is the free edge.  The midpoint conditions are extra linear rows.

_SQ_EDGES = [(0, 1), (1, 2), (2, 3), (3, 0),
             (8, 9), (9, 10), (10, 11), (11, 8),
             (4, 8), (5, 9), (6, 10), (7, 11)]
_SQ_MID_PAIRS = [(4, (0, 1)), (5, (1, 2)), (6, (2, 3)), (7, (3, 0))]
MIDPOINT_SQUARE_FREE_EDGE = 8
MIDPOINT_SQUARE_ANCHORS = (0, 1)


def midpoint_braced_square() -> Framework:
    coords = [(0.0, 0.0), (4.0, 0.0), (4.0, 4.0), (0.0, 4.0),
              (2.0, 0.0), (4.0, 2.0), (2.0, 4.0), (0.0, 2.0),
              (2.3088, 1.0172), (2.7017, 1.8515),
              (1.7877, 3.4701), (0.87688, 2.1496)]
    return Framework(coords, _SQ_EDGES)


def midpoint_braced_square_minimized() -> Framework:
    coords = [(0.0, 0.0), (4.0, 0.0), (2.6004, 3.7471), (-1.3996, 3.7471),
              (2.0, 0.0), (3.3002, 1.8736), (0.60036, 3.7471),
              (-0.69982, 1.8736),
              (1.7710, 0.87585), (1.9975, 1.7698),
              (0.85574, 3.2366), (0.18475, 1.7795)]
    return Framework(coords, _SQ_EDGES)


def midpoint_square_constraints(fw: Framework) -> list[Linear]:
    """The eight linear rows keeping vertices 4..7 on the edge midpoints."""
    out: list[Linear] = []
    for mid, pair in _SQ_MID_PAIRS:
        out.extend(midpoint_constraints(fw.n, fw.dim, mid, pair))
    return out


# -- two triangles bridged by three bars, one of them tunable ----------------
# Edge 0 (P2-P5) is the observable/free edge, edge 1 (P1-P4) the tuning
# edge; the family's fixed lengths are 1.7/1.5/2.5, 1.8/2.0/3.0 and 2.3.

_BRIDGE_EDGES = [(1, 4), (0, 3), (0, 1), (1, 2), (0, 2),
                 (3, 4), (4, 5), (3, 5), (2, 5)]
BRIDGED_TRIANGLES_FREE_EDGE = 0
BRIDGED_TRIANGLES_TUNE_EDGE = 1
BRIDGED_TRIANGLES_ALPHA_PAIR = (0, 2)
BRIDGED_TRIANGLES_ANCHORS = (0, 3)


def bridged_triangles() -> Framework:
    coords = [(0.0, 0.0), (0.99555, 1.3780), (0.0, 2.5),
              (1.0, 0.0), (0.54036, 1.7403), (2.2906, 2.7082)]
    return Framework(coords, _BRIDGE_EDGES)


def bridged_triangles_tuned() -> Framework:
    """Member of the same family at the critical tuning length ~0.49815."""
    coords = [(0.0, 0.0), (0.99555, 1.3780), (0.0, 2.5),
              (0.49815, 0.0), (0.39104, 1.7968), (2.2978, 2.4002)]
    return Framework(coords, _BRIDGE_EDGES)


# -- four-unit tower of cross-braced squares ---------------------------------
# Vertices (col, row) on the unit grid, index 2*row + col; 21 edges.

_TOWER_EDGES = (
    [(0, 1), (2, 3), (4, 5), (6, 7), (8, 9)] +                  # horizontals
    [(0, 2), (1, 3), (2, 4), (3, 5), (4, 6), (5, 7), (6, 8), (7, 9)] +
    [(0, 3), (1, 2), (2, 5), (3, 4), (4, 7), (5, 6), (6, 9), (7, 8)]
)
BRACED_TOWER_ANCHORS = (0, 1)


def braced_tower() -> Framework:
    coords = [(float(i % 2), float(i // 2)) for i in range(10)]
    return Framework(coords, _TOWER_EDGES)


def tower_designed_edges() -> dict[int, float]:
    """Vertical edges with the 8:4:2:1 doubled stress targets."""
    sigma = [8.0, 4.0, 2.0, 1.0, 8.0, 4.0, 2.0, 1.0]
    verticals = [(0, 2), (1, 3), (2, 4), (3, 5), (4, 6), (5, 7), (6, 8), (7, 9)]
    index = {e: k for k, e in enumerate(_TOWER_EDGES)}
    return {index[e]: s for e, s in zip(verticals, sigma)}


# -- two stacked triangular prisms (3D, isostatic) ----------------------------


def double_triangular_prism(twist: float = 0.4, radius: float = 1.0,
                            height: float = 1.0) -> Framework:
    """Three triangle rings, consecutive rings joined by verticals and one
    family of diagonals: n = 9, m = 21, isostatic in 3D.  ``twist`` rotates
    each ring relative to the one below (0 is a degenerate straight stack)."""
    coords = []
    for level in range(3):
        for i in range(3):
            ang = 2.0 * math.pi * i / 3.0 + level * twist
            coords.append((radius * math.cos(ang), radius * math.sin(ang),
                           level * height))
    edges = []
    for level in range(3):
        base = 3 * level
        edges += [(base + i, base + (i + 1) % 3) for i in range(3)]
    for level in range(2):
        base = 3 * level
        edges += [(base + i, base + 3 + i) for i in range(3)]
        edges += [(base + i, base + 3 + (i + 1) % 3) for i in range(3)]
    return Framework(coords, edges)


# -- small utility graphs ------------------------------------------------------


_FOUR_BAR_EDGES = [(0, 1), (1, 2), (2, 3), (0, 3), (0, 2)]
FOUR_BAR_FREE_EDGE = 4


def four_bar() -> Framework:
    """Crank-rocker linkage; dropping the diagonal (edge 4) gives a closed
    one-parameter motion."""
    coords = [(0.0, 0.0), (2.0, 0.0), (1.8, 1.45), (0.55, 0.6)]
    # bars: ground 0-1, rocker 1-2 (1.5), coupler 2-3 (2.0 nominal), crank 0-3
    return Framework(coords, _FOUR_BAR_EDGES)


def crossed_square(side: float = 2.0) -> Framework:
    """Square with both diagonals meeting at a physical center vertex."""
    s = side
    coords = [(0.0, 0.0), (s, 0.0), (s, s), (0.0, s), (s / 2.0, s / 2.0)]
    edges = [(0, 1), (1, 2), (2, 3), (3, 0),
             (0, 4), (1, 4), (2, 4), (3, 4)]
    return Framework(coords, edges)


def path_graph(n: int = 3, spacing: float = 1.0) -> Framework:
    coords = [(k * spacing, 0.0) for k in range(n)]
    # stagger slightly so the framework spans the plane
    coords = [(x, 0.3 * (k % 2)) for k, (x, _) in enumerate(coords)]
    return Framework(coords, [(k, k + 1) for k in range(n - 1)])


def all_fixtures() -> dict[str, Framework]:
    return {
        "braced-hexagon": braced_hexagon(),
        "braced-hexagon-maximized": braced_hexagon_maximized(),
        "linked-triangles": linked_triangles(),
        "linked-triangles-minimized": linked_triangles_minimized(),
        "midpoint-braced-square": midpoint_braced_square(),
        "midpoint-braced-square-minimized": midpoint_braced_square_minimized(),
        "bridged-triangles": bridged_triangles(),
        "bridged-triangles-tuned": bridged_triangles_tuned(),
        "braced-tower": braced_tower(),
        "double-triangular-prism": double_triangular_prism(),
        "regular-braced-hexagon": regular_braced_hexagon(),
        "four-bar": four_bar(),
        "crossed-square": crossed_square(),
    }
