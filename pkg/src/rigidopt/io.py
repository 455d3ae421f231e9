"""Reading and writing framework documents.

The on-disk format is a small JSON object::

    {
      "schema": 1,
      "dim": 2,
      "vertices": [[0.0, 0.0], [1.0, 0.0], ...],
      "edges": [[0, 1], [1, 2], ...],
      "lengths": [1.0, ...],              # optional, target lengths per edge
      "pins": [[0, 0], [0, 1], [1, 1]],   # optional, (vertex, axis) pairs
      "midpoints": [{"mid": 4, "pair": [0, 1]}, ...],   # optional
      "metadata": {...}                   # optional, free-form
    }

Unknown top-level keys survive a load/save round trip untouched.  Validation
is collected: a bad file reports every problem at once instead of the first.

``ingest_packing`` converts a plain-text sphere/disk packing listing into a
document whose contacts become unit-length bars.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Optional, Sequence, Union

import numpy as np

from .errors import DocumentError
from .framework import Framework, Linear, PinCoordinate, midpoint_constraints
from .pinning import PinningSpec

__all__ = [
    "FrameworkDocument",
    "load",
    "loads",
    "save",
    "saves",
    "ingest_packing",
]

SCHEMA_VERSION = 1

_CANONICAL_KEYS = ("schema", "dim", "vertices", "edges", "lengths", "pins",
                   "midpoints", "metadata")


@dataclass
class FrameworkDocument:
    dim: int
    vertices: list[list[float]]
    edges: list[tuple[int, int]]
    lengths: Optional[list[float]] = None
    pins: list[tuple[int, int]] = field(default_factory=list)
    midpoints: list[dict[str, Any]] = field(default_factory=list)
    metadata: dict[str, Any] = field(default_factory=dict)
    extra: dict[str, Any] = field(default_factory=dict)

    # -- conversions ---------------------------------------------------------

    def framework(self) -> Framework:
        return Framework(np.asarray(self.vertices, dtype=float), self.edges)

    def pin_constraints(self) -> list[PinCoordinate]:
        fw = np.asarray(self.vertices, dtype=float)
        return [PinCoordinate(v, ax, float(fw[v, ax])) for v, ax in self.pins]

    def pinning_spec(self) -> Optional[PinningSpec]:
        """Interpret the pin list as a rigid-motion gauge, if it is one."""
        if not self.pins:
            return None
        by_vertex: dict[int, list[int]] = {}
        for v, ax in self.pins:
            by_vertex.setdefault(v, []).append(ax)
        anchors = tuple(sorted(by_vertex, key=lambda v: (-len(by_vertex[v]), v)))
        return PinningSpec(tuple((v, a) for v, a in self.pins), anchors)

    def extra_constraints(self) -> list[Linear]:
        n = len(self.vertices)
        out: list[Linear] = []
        for item in self.midpoints:
            a, b = item["pair"]
            out.extend(midpoint_constraints(n, self.dim, item["mid"], (a, b)))
        return out

    def target_lengths(self) -> Optional[np.ndarray]:
        if self.lengths is None:
            return None
        return np.asarray(self.lengths, dtype=float)

    @classmethod
    def from_framework(cls, fw: Framework, lengths=None, pins=(),
                       midpoints=(), metadata=None) -> "FrameworkDocument":
        return cls(
            dim=fw.dim,
            vertices=[[float(x) for x in row] for row in fw.coords],
            edges=[tuple(e) for e in fw.edges],
            lengths=None if lengths is None else [float(v) for v in lengths],
            pins=[tuple(p) for p in pins],
            midpoints=[dict(m) for m in midpoints],
            metadata=dict(metadata or {}),
        )


# -- validation ---------------------------------------------------------------


def _check_document(raw: dict) -> tuple[Optional[FrameworkDocument], list[str]]:
    errors: list[str] = []

    def fail(msg: str) -> None:
        errors.append(msg)

    schema = raw.get("schema", SCHEMA_VERSION)
    if not isinstance(schema, int) or schema != SCHEMA_VERSION:
        fail(f"unsupported schema version {schema!r} (expected {SCHEMA_VERSION})")

    dim = raw.get("dim")
    if dim not in (2, 3):
        fail(f"'dim' must be 2 or 3, got {dim!r}")
        dim = 2

    vertices = raw.get("vertices")
    n = 0
    if not isinstance(vertices, list) or not vertices:
        fail("'vertices' must be a non-empty list of coordinate rows")
        vertices = []
    else:
        n = len(vertices)
        for k, row in enumerate(vertices):
            if (not isinstance(row, list) or len(row) != dim
                    or not all(isinstance(x, (int, float)) for x in row)):
                fail(f"vertex {k}: expected {dim} numbers, got {row!r}")

    edges_raw = raw.get("edges")
    edges: list[tuple[int, int]] = []
    if not isinstance(edges_raw, list):
        fail("'edges' must be a list of [i, j] pairs")
    else:
        seen = set()
        for k, e in enumerate(edges_raw):
            if (not isinstance(e, list) or len(e) != 2
                    or not all(isinstance(x, int) for x in e)):
                fail(f"edge {k}: expected a pair of vertex indices, got {e!r}")
                continue
            a, b = e
            if a == b:
                fail(f"edge {k}: loop at vertex {a}")
                continue
            if not (0 <= a < n and 0 <= b < n):
                fail(f"edge {k}: vertex index out of range in {e!r}")
                continue
            key = (min(a, b), max(a, b))
            if key in seen:
                fail(f"edge {k}: duplicate of {key}")
                continue
            seen.add(key)
            edges.append((a, b))

    lengths = raw.get("lengths")
    if lengths is not None:
        if (not isinstance(lengths, list)
                or not all(isinstance(x, (int, float)) for x in lengths)):
            fail("'lengths' must be a list of numbers")
        elif isinstance(edges_raw, list) and len(lengths) != len(edges_raw):
            fail(f"'lengths' has {len(lengths)} entries for {len(edges_raw)} edges")
        elif any(x <= 0 for x in lengths):
            fail("'lengths' entries must be positive")

    pins_raw = raw.get("pins", [])
    pins: list[tuple[int, int]] = []
    if not isinstance(pins_raw, list):
        fail("'pins' must be a list of [vertex, axis] pairs")
    else:
        for k, p in enumerate(pins_raw):
            if (not isinstance(p, list) or len(p) != 2
                    or not all(isinstance(x, int) for x in p)):
                fail(f"pin {k}: expected [vertex, axis], got {p!r}")
                continue
            v, ax = p
            if not (0 <= v < n) or not (0 <= ax < dim):
                fail(f"pin {k}: out of range {p!r}")
                continue
            pins.append((v, ax))

    mids_raw = raw.get("midpoints", [])
    midpoints: list[dict[str, Any]] = []
    if not isinstance(mids_raw, list):
        fail("'midpoints' must be a list of objects")
    else:
        for k, item in enumerate(mids_raw):
            if (not isinstance(item, dict) or "mid" not in item
                    or "pair" not in item):
                fail(f"midpoint {k}: expected keys 'mid' and 'pair'")
                continue
            mid, pair = item["mid"], item["pair"]
            if (not isinstance(mid, int) or not isinstance(pair, list)
                    or len(pair) != 2
                    or not all(isinstance(x, int) for x in pair)):
                fail(f"midpoint {k}: malformed entry {item!r}")
                continue
            ids = (mid, pair[0], pair[1])
            if len(set(ids)) != 3 or not all(0 <= v < n for v in ids):
                fail(f"midpoint {k}: vertex indices invalid in {item!r}")
                continue
            midpoints.append({"mid": mid, "pair": [pair[0], pair[1]]})

    metadata = raw.get("metadata", {})
    if not isinstance(metadata, dict):
        fail("'metadata' must be an object")
        metadata = {}

    if errors:
        return None, errors

    extra = {k: v for k, v in raw.items() if k not in _CANONICAL_KEYS}
    doc = FrameworkDocument(
        dim=dim,
        vertices=[[float(x) for x in row] for row in vertices],
        edges=edges,
        lengths=None if lengths is None else [float(x) for x in lengths],
        pins=pins,
        midpoints=midpoints,
        metadata=metadata,
        extra=extra,
    )
    # Framework() enforces geometric sanity (zero-length bars, n >= 2, ...)
    try:
        doc.framework()
    except ValueError as exc:
        return None, [str(exc)]
    return doc, []


def loads(text: str, source: str = "<string>") -> FrameworkDocument:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(
            [f"{source}: invalid JSON at line {exc.lineno}, column {exc.colno}: "
             f"{exc.msg}"]) from exc
    if not isinstance(raw, dict):
        raise DocumentError([f"{source}: top level must be a JSON object"])
    doc, errors = _check_document(raw)
    if errors:
        raise DocumentError([f"{source}: {e}" for e in errors])
    assert doc is not None
    return doc


def load(path: Union[str, Path]) -> FrameworkDocument:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DocumentError([f"{path}: {exc.strerror or exc}"]) from exc
    return loads(text, source=str(path))


def saves(doc: FrameworkDocument) -> str:
    out: dict[str, Any] = {"schema": SCHEMA_VERSION, "dim": doc.dim}
    out["vertices"] = [[float(x) for x in row] for row in doc.vertices]
    out["edges"] = [[int(a), int(b)] for a, b in doc.edges]
    if doc.lengths is not None:
        out["lengths"] = [float(v) for v in doc.lengths]
    if doc.pins:
        out["pins"] = [[int(v), int(ax)] for v, ax in doc.pins]
    if doc.midpoints:
        out["midpoints"] = [{"mid": int(m["mid"]),
                             "pair": [int(m["pair"][0]), int(m["pair"][1])]}
                            for m in doc.midpoints]
    if doc.metadata:
        out["metadata"] = doc.metadata
    out.update(doc.extra)
    return json.dumps(out, indent=2) + "\n"


def save(doc: FrameworkDocument, path: Union[str, Path]) -> None:
    Path(path).write_text(saves(doc))


# -- packing ingestion ---------------------------------------------------------


def _strip_comments(lines: Iterable[str]) -> list[list[str]]:
    rows = []
    for line in lines:
        body = line.split("#", 1)[0].strip()
        if body:
            rows.append(body.split())
    return rows


def ingest_packing(path: Union[str, Path],
                   tolerance: float = 1e-6) -> FrameworkDocument:
    """Convert a packing listing into a unit-bar framework document.

    Expected layout (``#`` comments allowed)::

        n [dim]
        x y [z]        # one row per center
        ...
        i j            # contact pairs, 0-based ...
        ...            # ... or an n-by-n 0/1 adjacency matrix

    Contacts are given target length 1.  If a measured center distance
    deviates from 1 by more than ``tolerance`` the measured value is kept
    instead and a warning is issued.
    """
    path = Path(path)
    try:
        rows = _strip_comments(path.read_text().splitlines())
    except OSError as exc:
        raise DocumentError([f"{path}: {exc.strerror or exc}"]) from exc
    if not rows:
        raise DocumentError([f"{path}: empty packing file"])

    errors: list[str] = []
    head = rows[0]
    try:
        n = int(head[0])
        dim = int(head[1]) if len(head) > 1 else 0
    except ValueError:
        raise DocumentError([f"{path}: header must be 'n [dim]', got {head!r}"])
    if n < 2:
        raise DocumentError([f"{path}: need at least two centers, got {n}"])
    if len(rows) < 1 + n:
        raise DocumentError([f"{path}: expected {n} coordinate rows"])

    if dim == 0:
        dim = len(rows[1])
    if dim not in (2, 3):
        raise DocumentError([f"{path}: dimension must be 2 or 3, got {dim}"])

    coords = np.zeros((n, dim))
    for k in range(n):
        row = rows[1 + k]
        if len(row) != dim:
            errors.append(f"center {k}: expected {dim} coordinates, got {row!r}")
            continue
        try:
            coords[k] = [float(x) for x in row]
        except ValueError:
            errors.append(f"center {k}: non-numeric entry in {row!r}")
    if errors:
        raise DocumentError([f"{path}: {e}" for e in errors])

    tail = rows[1 + n:]
    if not tail:
        raise DocumentError([f"{path}: no contacts listed"])

    pairs: list[tuple[int, int]] = []
    if len(tail) == n and all(len(r) == n for r in tail):
        # adjacency matrix form
        for i in range(n):
            for j in range(i + 1, n):
                if tail[i][j] not in ("0", "1") or tail[j][i] != tail[i][j]:
                    errors.append(f"adjacency entry ({i},{j}) invalid")
                elif tail[i][j] == "1":
                    pairs.append((i, j))
    else:
        for k, row in enumerate(tail):
            if len(row) != 2:
                errors.append(f"contact {k}: expected 'i j', got {row!r}")
                continue
            try:
                i, j = int(row[0]), int(row[1])
            except ValueError:
                errors.append(f"contact {k}: non-integer pair {row!r}")
                continue
            if i == j or not (0 <= i < n and 0 <= j < n):
                errors.append(f"contact {k}: bad pair ({i}, {j})")
                continue
            pairs.append((min(i, j), max(i, j)))
    if errors:
        raise DocumentError([f"{path}: {e}" for e in errors])
    pairs = sorted(set(pairs))
    if not pairs:
        raise DocumentError([f"{path}: no contacts listed"])

    lengths = []
    off_unit = []
    for i, j in pairs:
        measured = float(np.linalg.norm(coords[i] - coords[j]))
        if abs(measured - 1.0) > tolerance:
            off_unit.append((i, j, measured))
            lengths.append(measured)
        else:
            lengths.append(1.0)
    if off_unit:
        worst = max(off_unit, key=lambda t: abs(t[2] - 1.0))
        warnings.warn(
            f"{len(off_unit)} contact(s) deviate from unit distance by more "
            f"than {tolerance:g} (worst: {worst[0]}-{worst[1]} at "
            f"{worst[2]:.6g}); keeping measured lengths for those",
            UserWarning, stacklevel=2)

    return FrameworkDocument(
        dim=dim,
        vertices=[[float(x) for x in row] for row in coords],
        edges=pairs,
        lengths=lengths,
        metadata={"source": path.name, "kind": "packing"},
    )
