"""Manifold tracing, extremum detection and the merge-point machinery.

Two independent oracles anchor these tests:

* the four-bar loop, where the extreme distances between the two free
  pivots are reached at collinear configurations and equal |DC| -+ |AD|
  exactly;
* the two-angle reduction in ``oracles.py``, which finds merge points of
  the two-triangle families from a dense root solve that shares nothing
  with the package's trace/bisect/Newton pipeline.
"""

import numpy as np
import numpy.testing as npt
import pytest

from rigidopt import fixtures as fx
from rigidopt.bifurcation import (
    _raw_extrema,
    _tangent,
    find_extrema,
    manifold_derivatives,
    merge_search,
    third_order_certificate,
    trace_manifold,
)
from rigidopt.errors import BracketInvalid
from rigidopt.framework import Framework, build_system
from rigidopt.optimize import project
from rigidopt.pinning import make_pinning
from rigidopt.rigidity import analyze

from oracles import mirror_symmetric_family, two_angle_merge_oracle

TWO_TRIANGLE_EDGES = [(1, 4), (0, 3), (0, 1), (1, 2), (0, 2),
                      (3, 4), (4, 5), (3, 5), (2, 5)]


@pytest.fixture(scope="module")
def four_bar_run():
    fw = fx.four_bar()
    spec, chart = make_pinning(fw, anchors=(0, 1))
    cs = build_system(chart, free_edge=fx.FOUR_BAR_FREE_EDGE,
                      pins=spec.constraints())
    trace = trace_manifold(cs, chart.flat, alpha_pair=(1, 2))
    return cs, trace


@pytest.fixture(scope="module")
def bridged_merge():
    return merge_search(fx.bridged_triangles(),
                        fx.BRIDGED_TRIANGLES_FREE_EDGE,
                        fx.BRIDGED_TRIANGLES_TUNE_EDGE,
                        bracket=(0.45, 0.55),
                        anchors=fx.BRIDGED_TRIANGLES_ANCHORS,
                        alpha_pair=fx.BRIDGED_TRIANGLES_ALPHA_PAIR)


@pytest.fixture(scope="module")
def tuned_chart(bridged_merge):
    spec, chart = make_pinning(bridged_merge.framework,
                               anchors=fx.BRIDGED_TRIANGLES_ANCHORS)
    # merge_search already works in the pinned chart, so this is a no-op
    # isometry; the rebuilt system must reproduce its geometry exactly
    assert np.allclose(chart.coords, bridged_merge.framework.coords)
    return spec, chart


@pytest.fixture(scope="module")
def pitchfork_merge():
    fw = Framework(mirror_symmetric_family(2.26), TWO_TRIANGLE_EDGES)
    return merge_search(fw, 0, 1, bracket=(2.15, 2.35), anchors=(0, 3),
                        alpha_pair=(0, 2))


class TestTraceManifold:
    def test_four_bar_closes(self, four_bar_run):
        _, trace = four_bar_run
        assert trace.closed
        assert trace.failure is None
        assert trace.max_residual < 1e-9

    def test_lengths_are_sqrt_of_f1(self, four_bar_run):
        _, trace = four_bar_run
        npt.assert_allclose(trace.lengths, np.sqrt(trace.f1), rtol=1e-12)

    def test_configs_feasible_and_tangents_unit(self, four_bar_run):
        cs, trace = four_bar_run
        idx = [0, len(trace) // 3, 2 * len(trace) // 3]
        for i in idx:
            assert cs.is_feasible(trace.configs[i], feas_tol=1e-8)
            assert np.linalg.norm(trace.tangents[i]) == pytest.approx(1.0)

    def test_alpha_matches_requested_pair(self, four_bar_run):
        _, trace = four_bar_run
        i = 17
        p = trace.configs[i].reshape(-1, 2)
        v = p[2] - p[1]
        want = np.arctan2(v[1], v[0]) % (2 * np.pi)
        assert trace.alpha[i] == pytest.approx(want)


class TestFourBarExtrema:
    def test_collinear_distance_oracle(self, four_bar_run):
        cs, trace = four_bar_run
        ext = find_extrema(cs, trace)
        assert [e.kind for e in ext] == ["min", "max"]
        coords = fx.four_bar().coords
        ad = np.linalg.norm(coords[3] - coords[0])
        dc = np.linalg.norm(coords[2] - coords[3])
        # |p0 p2| is extremal exactly when 0, 3, 2 are collinear
        assert np.sqrt(ext[0].f1) == pytest.approx(dc - ad, abs=1e-8)
        assert np.sqrt(ext[1].f1) == pytest.approx(dc + ad, abs=1e-8)

    def test_extrema_are_kkt_points(self, four_bar_run):
        cs, trace = four_bar_run
        for e in find_extrema(cs, trace):
            assert e.kkt_residual < 1e-8
            assert cs.is_feasible(e.config, feas_tol=1e-8)


class TestManifoldDerivatives:
    def test_matches_trace_differences(self, four_bar_run):
        cs, trace = four_bar_run
        h = trace.h
        for i in (25, 80, 200):
            v, _ = _tangent(cs, trace.configs[i], 1e-9)
            if v @ trace.tangents[i] < 0:
                v = -v
            d1, d2 = manifold_derivatives(cs, trace.configs[i], v)
            fd1 = (trace.f1[i + 1] - trace.f1[i - 1]) / (2 * h)
            fd2 = (trace.f1[i + 1] - 2 * trace.f1[i] + trace.f1[i - 1]) / h ** 2
            assert d1 == pytest.approx(fd1, rel=5e-3, abs=1e-4)
            assert d2 == pytest.approx(fd2, rel=5e-3, abs=1e-3)


class TestGrazeFilter:
    def _trace_at_offset(self, bridged_merge, tuned_chart, eps):
        """Re-trace the tuned family with the tuning bar longer by eps."""
        spec, chart = tuned_chart
        lengths = list(chart.edge_lengths())
        lengths[fx.BRIDGED_TRIANGLES_TUNE_EDGE] = bridged_merge.tuned_length + eps
        cs = build_system(chart, free_edge=fx.BRIDGED_TRIANGLES_FREE_EDGE,
                          pins=spec.constraints(), targets=lengths)
        p0 = project(cs, bridged_merge.trace.configs[0])
        return cs, trace_manifold(cs, p0)

    def test_resolvable_pair_is_kept(self, bridged_merge, tuned_chart):
        # 3e-5 past the merge the new extremum pair is several samples wide
        cs, tr = self._trace_at_offset(bridged_merge, tuned_chart, 3e-5)
        ext = find_extrema(cs, tr)
        assert len(ext) == 4
        assert [e.kind for e in ext] == ["max", "min", "max", "min"]

    def test_unresolvable_pair_is_dropped(self, bridged_merge, tuned_chart):
        # 1e-8 past the merge the pair sits inside one sample step: the raw
        # sign changes are there, but no polish can separate them
        cs, tr = self._trace_at_offset(bridged_merge, tuned_chart, 1e-8)
        assert len(_raw_extrema(cs, tr)) == 4
        ext = find_extrema(cs, tr)
        assert len(ext) == 2
        assert [e.kind for e in ext] == ["min", "max"]


class TestBridgedMerge:
    def test_agrees_with_two_angle_oracle(self, bridged_merge):
        mu_star, crit_len = two_angle_merge_oracle(
            fx.bridged_triangles().coords, obj_pair=(1, 4), con_pair=(2, 5),
            seed_mu=0.49815, seed_len=0.95854)
        assert bridged_merge.tuned_length == pytest.approx(mu_star, abs=1e-6)
        assert bridged_merge.critical_length == pytest.approx(crit_len,
                                                              abs=1e-6)

    def test_certificate(self, bridged_merge):
        c = bridged_merge.certificate
        assert c.verdict == "third-order"
        assert bridged_merge.certified
        assert abs(c.f1_prime) < 1e-8
        assert abs(c.f1_second) < 1e-8
        assert c.dim_kernel == 1
        assert c.licq_rest
        assert abs(c.a3) > 1e-6
        assert abs(c.second_order_value) < 1e-3

    def test_cubic_coefficient_cross_checks(self, bridged_merge):
        c = bridged_merge.certificate
        # fitted on the full window, on half the window, and assembled from
        # third derivatives analytically: all three agree
        assert c.a3_half_window == pytest.approx(c.a3, rel=1e-3)
        assert c.a3_analytic == pytest.approx(c.a3, rel=1e-3)

    def test_polish_path_and_trace(self, bridged_merge):
        assert bridged_merge.polish_path == "newton-2d"
        assert bridged_merge.bisection_iters >= 1
        assert bridged_merge.trace.closed

    def test_surviving_extrema(self, bridged_merge):
        ext = bridged_merge.extrema
        assert [e.kind for e in ext] == ["min", "max"]
        mins = [e for e in ext if e.kind == "min"]
        assert np.sqrt(mins[0].f1) == pytest.approx(0.66504, abs=2e-4)
        assert mins[0].alpha == pytest.approx(2.06612, abs=2e-3)

    def test_certificate_reconstructable(self, bridged_merge, tuned_chart):
        spec, chart = tuned_chart
        cs = build_system(chart, free_edge=fx.BRIDGED_TRIANGLES_FREE_EDGE,
                          pins=spec.constraints())
        cert = third_order_certificate(cs, bridged_merge.critical_config)
        assert cert.verdict == "third-order"
        assert cert.a3 == pytest.approx(bridged_merge.certificate.a3,
                                        rel=1e-6)

    def test_critical_point_defeats_prestress_test(self, bridged_merge):
        # the stress form vanishes on the kernel flex at the cubic point:
        # first- and second-order certificates both fail, and only the
        # nonzero a3 establishes rigidity.  The prestress test must not be
        # fooled by a numerically-zero 1x1 form.
        fw = bridged_merge.framework
        critical = fw.with_coords(
            bridged_merge.critical_config.reshape(fw.n, fw.dim))
        rep = analyze(critical)
        assert rep.n_flexes == 1 and rep.n_stresses == 1
        assert rep.prestress.verdict == "not-certified"

    def test_window_choice_stable(self, bridged_merge, tuned_chart):
        spec, chart = tuned_chart
        cs = build_system(chart, free_edge=fx.BRIDGED_TRIANGLES_FREE_EDGE,
                          pins=spec.constraints())
        cert = third_order_certificate(cs, bridged_merge.critical_config,
                                       window=0.1)
        assert cert.a3 == pytest.approx(bridged_merge.certificate.a3,
                                        rel=1e-2)


class TestPitchforkMerge:
    """Mirror-symmetric family: the critical point is a symmetry-breaking
    (pitchfork) bifurcation, not a generic two-extrema merge.  The solver
    must still find it (via the central-extremum fallback) and must refuse
    to certify third-order rigidity there, since the cubic coefficient
    vanishes by symmetry."""

    def test_agrees_with_two_angle_oracle(self, pitchfork_merge):
        coords = mirror_symmetric_family(2.26)
        seed_len = float(np.linalg.norm(coords[1] - coords[4]))
        mu_star, _ = two_angle_merge_oracle(coords, obj_pair=(1, 4),
                                            con_pair=(2, 5), seed_mu=2.26,
                                            seed_len=seed_len)
        assert pitchfork_merge.tuned_length == pytest.approx(mu_star,
                                                             abs=1e-6)

    def test_fallback_path_taken(self, pitchfork_merge):
        assert pitchfork_merge.polish_path == "central-fallback"

    def test_honestly_inconclusive(self, pitchfork_merge):
        c = pitchfork_merge.certificate
        assert c.verdict == "inconclusive"
        assert not pitchfork_merge.certified
        assert "a3" in (c.reason or "") or "cubic" in (c.reason or "")
        assert abs(c.a3) < 1e-6          # the cubic term really is absent
        assert abs(c.f1_prime) < 1e-8
        assert abs(c.f1_second) < 1e-8
        assert c.dim_kernel == 1

    def test_critical_configuration_is_mirror_symmetric(self, pitchfork_merge):
        p = pitchfork_merge.critical_config.reshape(6, 2)
        mu = pitchfork_merge.tuned_length
        assert abs(p[1, 0] + p[4, 0] - mu) < 1e-6
        assert abs(p[1, 1] - p[4, 1]) < 1e-6


class TestDegenerateInputs:
    def test_certificate_refuses_noncritical_point(self, bridged_merge,
                                                   tuned_chart):
        spec, chart = tuned_chart
        cs = build_system(chart, free_edge=fx.BRIDGED_TRIANGLES_FREE_EDGE,
                          pins=spec.constraints())
        cert = third_order_certificate(cs, bridged_merge.trace.configs[5])
        assert cert.verdict == "inconclusive"
        assert "first derivative" in cert.reason

    def test_bracket_without_merge_rejected(self):
        with pytest.raises(BracketInvalid):
            merge_search(fx.bridged_triangles(), 0, 1, bracket=(0.45, 0.47),
                         anchors=(0, 3), alpha_pair=(0, 2))
