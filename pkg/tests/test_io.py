"""Framework document serialization and packing ingestion."""

import json

import numpy as np
import pytest

from rigidopt import fixtures as fx
from rigidopt import io
from rigidopt.errors import DocumentError
from rigidopt.framework import Linear


MIDPOINTS = [{"mid": m, "pair": [a, b]}
             for m, (a, b) in [(4, (0, 1)), (5, (1, 2)),
                               (6, (2, 3)), (7, (3, 0))]]


def make_doc():
    fw = fx.midpoint_braced_square()
    return io.FrameworkDocument.from_framework(
        fw,
        lengths=fw.edge_lengths(),
        pins=[(0, 0), (0, 1), (1, 1)],
        midpoints=MIDPOINTS,
        metadata={"note": "square with braced midpoints"},
    )


class TestRoundTrip:
    def test_saves_loads_identity(self):
        doc = make_doc()
        text = io.saves(doc)
        again = io.loads(text)
        assert io.saves(again) == text

    def test_file_round_trip(self, tmp_path):
        doc = make_doc()
        path = tmp_path / "square.json"
        io.save(doc, path)
        again = io.load(path)
        np.testing.assert_allclose(again.framework().coords,
                                   doc.framework().coords)
        assert again.edges == doc.edges
        assert again.pins == doc.pins
        assert again.metadata == doc.metadata

    def test_unknown_keys_survive(self):
        raw = json.loads(io.saves(make_doc()))
        raw["display"] = {"color": "teal", "lw": 2}
        doc = io.loads(json.dumps(raw))
        assert doc.extra == {"display": {"color": "teal", "lw": 2}}
        assert json.loads(io.saves(doc))["display"]["color"] == "teal"

    def test_trailing_newline(self):
        assert io.saves(make_doc()).endswith("}\n")


class TestValidation:
    def test_all_errors_reported_at_once(self):
        raw = {
            "schema": 7,
            "dim": 5,
            "vertices": [[0.0, 0.0], [1.0], [2.0, 0.0]],
            "edges": [[0, 0], [0, 1], [0, 1], [0, 9]],
            "pins": [[0, 3], "nope"],
            "lengths": [1.0],
        }
        with pytest.raises(DocumentError) as exc:
            io.loads(json.dumps(raw), source="bad.json")
        msgs = exc.value.errors
        assert len(msgs) >= 7
        assert all(m.startswith("bad.json: ") for m in msgs)
        joined = "\n".join(msgs)
        assert "schema version 7" in joined
        assert "'dim' must be 2 or 3" in joined
        assert "loop at vertex 0" in joined
        assert "duplicate of (0, 1)" in joined
        assert "out of range" in joined
        assert "'lengths' has 1 entries for 4 edges" in joined

    def test_invalid_json_reports_position(self):
        with pytest.raises(DocumentError) as exc:
            io.loads('{"dim": 2,,}')
        assert "invalid JSON at line 1" in exc.value.errors[0]

    def test_top_level_must_be_object(self):
        with pytest.raises(DocumentError, match="top level"):
            io.loads("[1, 2, 3]")

    def test_geometric_checks_still_apply(self):
        # structurally valid JSON, but two coincident vertices joined by a bar
        raw = {"dim": 2, "vertices": [[0.0, 0.0], [0.0, 0.0]],
               "edges": [[0, 1]]}
        with pytest.raises(DocumentError, match="zero length"):
            io.loads(json.dumps(raw))

    def test_nonpositive_lengths_rejected(self):
        raw = {"dim": 2, "vertices": [[0.0, 0.0], [1.0, 0.0]],
               "edges": [[0, 1]], "lengths": [-1.0]}
        with pytest.raises(DocumentError, match="positive"):
            io.loads(json.dumps(raw))

    def test_missing_file(self, tmp_path):
        with pytest.raises(DocumentError, match="nothing.json"):
            io.load(tmp_path / "nothing.json")


class TestConversions:
    def test_pin_constraints_hold_current_coords(self):
        doc = make_doc()
        fw = doc.framework()
        for con in doc.pin_constraints():
            assert con.value(fw.flat, fw.dim) == pytest.approx(0.0, abs=1e-15)

    def test_pinning_spec_anchor_ordering(self):
        spec = make_doc().pinning_spec()
        assert spec is not None
        assert spec.anchors[0] == 0      # fully pinned vertex leads
        assert set(spec.pinned) == {(0, 0), (0, 1), (1, 1)}

    def test_no_pins_no_spec(self):
        doc = make_doc()
        doc.pins = []
        assert doc.pinning_spec() is None

    def test_midpoints_become_linear_constraints(self):
        doc = make_doc()
        cons = doc.extra_constraints()
        assert len(cons) == 2 * len(doc.midpoints)   # one per axis in 2D
        assert all(isinstance(c, Linear) for c in cons)
        fw = doc.framework()
        for c in cons:
            assert c.value(fw.flat, fw.dim) == pytest.approx(0.0, abs=1e-12)

    def test_target_lengths_array(self):
        doc = make_doc()
        t = doc.target_lengths()
        np.testing.assert_allclose(t, doc.framework().edge_lengths())
        doc.lengths = None
        assert doc.target_lengths() is None


UNIT_TRIANGLE = """\
# three unit disks
3 2
0.0 0.0
1.0 0.0
0.5 0.8660254037844386
0 1
1 2   # wraps around
0 2
"""


class TestPackingIngestion:
    def test_contact_list(self, tmp_path):
        path = tmp_path / "tri.txt"
        path.write_text(UNIT_TRIANGLE)
        doc = io.ingest_packing(path)
        assert doc.dim == 2
        assert doc.edges == [(0, 1), (0, 2), (1, 2)]
        assert doc.lengths == [1.0, 1.0, 1.0]
        assert doc.metadata["kind"] == "packing"
        doc.framework()   # loadable as geometry

    def test_adjacency_matrix(self, tmp_path):
        path = tmp_path / "tri_adj.txt"
        path.write_text(
            "3\n"
            "0.0 0.0\n1.0 0.0\n0.5 0.8660254037844386\n"
            "0 1 1\n1 0 1\n1 1 0\n")
        doc = io.ingest_packing(path)
        assert doc.edges == [(0, 1), (0, 2), (1, 2)]

    def test_off_unit_contact_warns_and_keeps_measured(self, tmp_path):
        path = tmp_path / "loose.txt"
        path.write_text(
            "3 2\n"
            "0.0 0.0\n1.002 0.0\n0.5 0.8660254037844386\n"
            "0 1\n1 2\n0 2\n")
        with pytest.warns(UserWarning, match=r"worst: 0-1 at 1.002"):
            doc = io.ingest_packing(path, tolerance=1e-3)
        # pairs are sorted: [(0, 1), (0, 2), (1, 2)]
        assert doc.lengths[0] == pytest.approx(1.002)
        assert doc.lengths[1] == 1.0          # 0-2 stayed in contact
        assert doc.lengths[2] != 1.0          # 1-2 dragged off unit too

    def test_within_tolerance_snaps_to_unit(self, tmp_path):
        path = tmp_path / "tight.txt"
        path.write_text(
            "3 2\n"
            "0.0 0.0\n1.0000001 0.0\n0.5 0.8660254037844386\n"
            "0 1\n1 2\n0 2\n")
        doc = io.ingest_packing(path, tolerance=1e-3)
        assert doc.lengths == [1.0, 1.0, 1.0]

    def test_rejects_contactless_listing(self, tmp_path):
        path = tmp_path / "none.txt"
        path.write_text("2 2\n0 0\n1 0\n")
        with pytest.raises(DocumentError, match="no contacts"):
            io.ingest_packing(path)

    def test_rejects_bad_pairs(self, tmp_path):
        path = tmp_path / "bad.txt"
        path.write_text("2 2\n0 0\n1 0\n0 5\n")
        with pytest.raises(DocumentError, match="bad pair"):
            io.ingest_packing(path)

    def test_rejects_short_file(self, tmp_path):
        path = tmp_path / "short.txt"
        path.write_text("4 2\n0 0\n1 0\n")
        with pytest.raises(DocumentError, match="coordinate rows"):
            io.ingest_packing(path)
