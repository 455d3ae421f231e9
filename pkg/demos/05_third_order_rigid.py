"""
Hunting a third-order rigid framework
=====================================

Free one edge of the two bridged triangles and the remaining constraints
cut out a closed one-dimensional manifold of configurations.  The freed
edge's length, plotted against an angle coordinate along the loop, shows a
minimum and a maximum.  Shrinking the tunable bridge bar pulls a second
max/min pair together until they annihilate -- and exactly at the merge the
length function has a *cubic* critical point.  Re-inserting the freed edge
there produces a framework that is neither first-order rigid nor prestress
stable, yet rigid: third-order rigidity, certified by the nonvanishing
cubic coefficient a3.

`merge_search` does the whole hunt: bisect the tuning length on the count
of extrema, polish the (tuning length, critical point) pair with a 2x2
Newton iteration, then assemble the certificate.
"""

import numpy as np

import rigidopt as r
from rigidopt import fixtures

fw = fixtures.bridged_triangles()
res = r.merge_search(fw, fixtures.BRIDGED_TRIANGLES_FREE_EDGE,
                     fixtures.BRIDGED_TRIANGLES_TUNE_EDGE,
                     bracket=(0.3, 1.0),
                     anchors=fixtures.BRIDGED_TRIANGLES_ANCHORS,
                     alpha_pair=fixtures.BRIDGED_TRIANGLES_ALPHA_PAIR)

cert = res.certificate
print(f"tuning bar length at the merge: {res.tuned_length:.6f}")
print(f"freed edge length at the critical point: {res.critical_length:.6f}")
print(f"bisection steps: {res.bisection_iters}, polish: {res.polish_path}")
print(f"f' = {cert.f1_prime:.2e}   f'' = {cert.f1_second:.2e}   "
      f"a3 = {cert.a3:.4e}")
print(f"kernel dimension: {cert.dim_kernel}   verdict: {cert.verdict}")

# the surviving extrema of the tuned loop (the merged pair is gone)
for e in res.extrema:
    print(f"surviving {e.kind}: length {np.sqrt(e.f1):.5f} "
          f"at alpha {e.alpha:.5f}")

# first- and second-order rigidity both fail at the critical configuration
# (the stress form vanishes on the flex), so the cubic certificate is doing
# real work:
critical = res.framework.with_coords(
    res.critical_config.reshape(fw.n, fw.dim))
rep = r.analyze(critical)
print(f"\nanalyze at the critical configuration: {rep.summary()}")
print("rigidity here comes from the cubic term alone")

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    tr = res.trace
    order = np.argsort(tr.alpha)
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(tr.alpha[order], tr.lengths[order], ".", ms=2)
    ax.axhline(res.critical_length, color="C3", lw=0.8)
    ax.axvline(res.alpha_critical, color="C3", lw=0.8)
    ax.set_xlabel("angle coordinate alpha")
    ax.set_ylabel("freed edge length")
    ax.set_title("length along the tuned manifold (cubic flat spot)")
    fig.savefig("demo05_merge.png", dpi=150)
    print("\nwrote demo05_merge.png")
