"""First-order analysis: rigidity matrix, flex/stress spaces, prestress test.

The frozen counts below come from hand counts on the fixtures (edge counts
vs. nd - d(d+1)/2) plus the combinatorial identity

    #stresses - #flexes = m - n d + d(d+1)/2,

which holds for every framework whose vertices affinely span R^d.
"""

import numpy as np
import numpy.testing as npt
import pytest
from hypothesis import given, strategies as st

import rigidopt as r
from rigidopt import fixtures as fx
from rigidopt.framework import build_system
from rigidopt.rigidity import (
    FIRST_ORDER_RIGID,
    NOT_CERTIFIED,
    PRESTRESS_STABLE,
    rigidity_matrix,
    second_order_stress_test,
    trivial_flex_basis,
)


def random_framework(seed):
    """Random spanning framework, 2D or 3D, 4 <= n <= 12."""
    rng = np.random.default_rng(seed)
    d = int(rng.integers(2, 4))
    n = int(rng.integers(4, 13))
    coords = rng.uniform(-1, 1, size=(n, d))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    k = int(rng.integers(n - 1, min(len(pairs), 3 * n) + 1))
    idx = rng.choice(len(pairs), size=k, replace=False)
    return r.Framework(coords, [pairs[i] for i in idx])


class TestRigidityMatrix:
    def test_rows_are_squared_length_gradients(self):
        fw = fx.linked_triangles()
        R = rigidity_matrix(fw)
        assert R.shape == (fw.m, fw.n * fw.dim)
        cs = build_system(fw)
        npt.assert_allclose(R, cs.jacobian(fw.flat)[:fw.m])

    def test_trivial_flexes_annihilated(self):
        for fw in (fx.braced_hexagon(), fx.double_triangular_prism()):
            R = rigidity_matrix(fw)
            T = trivial_flex_basis(fw)
            assert T.shape[0] == fw.dim * (fw.dim + 1) // 2
            npt.assert_allclose(R @ T.T, 0.0, atol=1e-10)

    def test_trivial_basis_orthonormal(self):
        T = trivial_flex_basis(fx.double_triangular_prism())
        npt.assert_allclose(T @ T.T, np.eye(T.shape[0]), atol=1e-12)


class TestCountingIdentity:
    @given(st.integers(0, 2 ** 31 - 1))
    def test_rank_nullity_ledger(self, seed):
        fw = random_framework(seed)
        rep = r.analyze(fw)
        D = fw.dim * (fw.dim + 1) // 2
        assert rep.n_stresses - rep.n_flexes == fw.m - fw.n * fw.dim + D
        # consistency of the counts with the reported rank
        assert rep.n_stresses == fw.m - rep.rank
        assert rep.n_flexes == fw.n * fw.dim - rep.trivial_dim - rep.rank

    @given(st.integers(0, 2 ** 31 - 1))
    def test_spaces_in_the_right_kernels(self, seed):
        fw = random_framework(seed)
        rep = r.analyze(fw)
        R = rigidity_matrix(fw)
        T = trivial_flex_basis(fw)
        if rep.n_flexes:
            V = rep.nontrivial_flexes
            npt.assert_allclose(R @ V.T, 0.0, atol=1e-8)
            npt.assert_allclose(T @ V.T, 0.0, atol=1e-8)
        if rep.n_stresses:
            npt.assert_allclose(rep.self_stresses @ R, 0.0, atol=1e-8)


class TestAnalyzeFixtures:
    def test_generic_hexagon_is_first_order_rigid(self):
        rep = r.analyze(fx.braced_hexagon())
        assert rep.classification == "isostatic"
        assert rep.first_order_rigid
        assert (rep.n_flexes, rep.n_stresses) == (0, 0)

    def test_maximized_hexagon_is_prestress_stable(self):
        # coordinates are printed to 5 digits, so the near-zero singular
        # value sits around 1e-5 and needs a matching rank cutoff
        rep = r.analyze(fx.braced_hexagon_maximized(), rank_tol=1e-4)
        assert (rep.n_flexes, rep.n_stresses) == (1, 1)
        assert rep.prestress.verdict == PRESTRESS_STABLE
        assert rep.prestress.mu_min > 0
        assert rep.prestress.stress is not None

    def test_rank_tol_controls_the_cutoff(self):
        # same configuration under the default (tight) cutoff: the 1e-5
        # singular value counts as nonzero and the framework looks generic
        rep = r.analyze(fx.braced_hexagon_maximized())
        assert rep.prestress.verdict == FIRST_ORDER_RIGID

    def test_four_bar_with_diagonal_is_isostatic(self):
        rep = r.analyze(fx.four_bar())
        assert rep.classification == "isostatic"
        assert rep.first_order_rigid

    def test_crossed_square_overbraced(self):
        rep = r.analyze(fx.crossed_square())
        assert rep.classification == "over-constrained"
        assert (rep.n_flexes, rep.n_stresses) == (0, 1)
        # the stress balances: opposite signs on boundary vs. diagonals
        w = rep.self_stresses[0]
        assert np.all(np.sign(w[:4]) == -np.sign(w[4]))

    def test_path_graph_flexible(self):
        rep = r.analyze(fx.path_graph(3))
        assert rep.classification == "under-constrained"
        assert not rep.first_order_rigid
        assert rep.prestress.verdict == NOT_CERTIFIED

    def test_prism_3d(self):
        rep = r.analyze(fx.double_triangular_prism())
        assert rep.trivial_dim == 6
        assert rep.classification == "isostatic"
        assert rep.first_order_rigid

    def test_summary_mentions_counts(self):
        s = r.analyze(fx.crossed_square()).summary()
        assert "flexes=0" in s and "stresses=1" in s


class TestPinnedAnalysis:
    def test_pinned_chart_reproduces_counts(self):
        fw = fx.braced_hexagon_maximized()
        spec, chart = r.make_pinning(fw, anchors=fx.BRACED_HEXAGON_ANCHORS)
        rep = r.analyze(chart, pins=spec.constraints(), rank_tol=1e-4)
        assert rep.pinned
        # trivial_dim stays the ambient d(d+1)/2; the pins absorb those
        # motions inside the stacked Jacobian instead
        assert rep.trivial_dim == 3
        assert (rep.n_flexes, rep.n_stresses) == (1, 1)
        assert rep.prestress.verdict == PRESTRESS_STABLE


class TestStressForm:
    def test_matches_weighted_hessian_quadratic(self):
        # the stress form is sum_k w_k |v_a - v_b|^2; the constraint
        # Hessians carry the extra factor 2 from d^2(|.|^2)
        fw = fx.linked_triangles()
        cs = build_system(fw)
        rng = np.random.default_rng(8)
        for _ in range(10):
            w = rng.normal(size=fw.m)
            v = rng.normal(size=fw.n * fw.dim)
            assert second_order_stress_test(fw, w, v) == pytest.approx(
                0.5 * cs.stress_quadratic(w, v))

    def test_positive_on_the_flex_at_a_certified_point(self):
        rep = r.analyze(fx.braced_hexagon_maximized(), rank_tol=1e-4)
        w = rep.prestress.stress
        v = rep.nontrivial_flexes[0]
        assert second_order_stress_test(fx.braced_hexagon_maximized(), w, v) > 0
