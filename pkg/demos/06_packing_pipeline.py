"""
From a disk packing to a rigidity verdict
=========================================

Plain-text packing listings (centers + contacts) convert straight into
framework documents: every contact becomes a unit bar.  Afterwards the
usual pipeline applies -- analyze the contact graph, jitter it, re-optimize
an edge.  This is the batch path the command line uses:

    rigidopt analyze cluster.json
    rigidopt optimize cluster.json --edge 0 --dir max ...
"""

import tempfile
from pathlib import Path

import numpy as np

import rigidopt as r

# a six-disk hexagonal cluster around a central disk would be over-packed;
# take a 2x3 triangular patch instead
listing = """\
# 2x3 triangular patch of unit disks
6 2
0.0 0.0
1.0 0.0
2.0 0.0
0.5 0.8660254037844386
1.5 0.8660254037844386
2.5 0.8660254037844386
0 1
1 2
3 4
4 5
0 3
1 3
1 4
2 4
2 5
"""

workdir = Path(tempfile.mkdtemp(prefix="packing_demo_"))
packing_file = workdir / "patch.txt"
packing_file.write_text(listing)

doc = r.ingest_packing(packing_file)
fw = doc.framework()
print(f"ingested {fw.n} disks with {fw.m} contacts "
      f"(all unit: {set(doc.lengths) == {1.0}})")

rep = r.analyze(fw)
print(f"contact graph: {rep.classification}, "
      f"{rep.n_flexes} flexes, {rep.n_stresses} stresses")
print(f"verdict: {rep.summary()}")

# persist as a framework document for the CLI
doc_path = workdir / "patch.json"
r.save(doc, doc_path)
print(f"wrote {doc_path}")

# the triangulated patch is isostatic and rigid; freeing the 0-1 contact
# turns it into a one-degree-of-freedom linkage, and maximizing the freed
# distance folds it flat into a locked, prestress-stable configuration
res = r.solve(r.length_problem(fw, 0, r.MAX, anchors=(0, 2)))
print(f"\nmaximize freed contact 0-1: {res.status}, "
      f"length {np.sqrt(res.objective):.6f}, certified {res.certified}")
rep2 = r.analyze(res.framework)
print(f"at the extremum: {rep2.summary()}")
