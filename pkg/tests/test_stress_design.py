"""Prescribed-stress design and the force-density solver."""

import numpy as np
import numpy.testing as npt
import pytest

import rigidopt as r
from rigidopt import fixtures as fx
from rigidopt.errors import SingularSystem
from rigidopt.rigidity import rigidity_matrix
from rigidopt.stress_design import (
    force_density_solve,
    solve_stress_design,
    stress_design_problem,
)


@pytest.fixture(scope="module")
def tower_design():
    prob = stress_design_problem(fx.braced_tower(), fx.tower_designed_edges(),
                                 anchors=fx.BRACED_TOWER_ANCHORS, eta=0.05)
    return solve_stress_design(prob)


class TestSingleTargetEquivalence:
    def test_negative_target_is_length_maximization(self):
        fw = fx.braced_hexagon()
        sd = solve_stress_design(stress_design_problem(fw, {8: -1.0},
                                                       anchors=(0, 5)))
        lp = r.solve(r.length_problem(fw, 8, "max", anchors=(0, 5)))
        assert sd.certified and lp.certified
        rmsd, _ = r.align(lp.framework, sd.framework)
        assert rmsd < 1e-10
        # the designed stress is exactly -1 on the designed edge and equals
        # the length run's certifying stress elsewhere
        npt.assert_allclose(sd.designed_stress, lp.certifying_stress[:fw.m],
                            atol=1e-8)

    def test_positive_target_is_length_minimization(self):
        fw = fx.linked_triangles()
        sd = solve_stress_design(stress_design_problem(fw, {8: 1.0},
                                                       anchors=(0, 3)))
        lp = r.solve(r.length_problem(fw, 8, "min", anchors=(0, 3)))
        assert sd.certified
        rmsd, _ = r.align(lp.framework, sd.framework)
        assert rmsd < 1e-10


class TestTowerDesign:
    def test_converges_certified(self, tower_design):
        assert tower_design.status == "converged"
        assert tower_design.certified
        assert tower_design.stress_residual < 1e-8

    def test_designed_components_hit_targets(self, tower_design):
        w = tower_design.designed_stress
        for edge, target in fx.tower_designed_edges().items():
            assert w[edge] == pytest.approx(target, rel=1e-8), f"edge {edge}"

    def test_designed_stress_is_a_self_stress(self, tower_design):
        R = rigidity_matrix(tower_design.framework)
        w = tower_design.designed_stress
        assert np.linalg.norm(w @ R) / np.linalg.norm(w) < 1e-8

    def test_independent_stress_basis_restriction(self, tower_design):
        # analyze() finds the self-stress space from scratch at p*; the
        # designed ratios must be reproducible inside that space
        rep = r.analyze(tower_design.framework)
        assert rep.n_stresses >= 1
        edges = sorted(fx.tower_designed_edges())
        targets = np.array([fx.tower_designed_edges()[e] for e in edges])
        S = rep.self_stresses[:, edges]        # (n_stresses, 8)
        coef, *_ = np.linalg.lstsq(S.T, targets, rcond=None)
        rel = np.abs(S.T @ coef - targets) / np.abs(targets)
        assert rel.max() < 1e-4


class TestForceDensity:
    def test_uniform_weights_place_center_at_centroid(self):
        fw = fx.crossed_square()
        placed = force_density_solve(fw, np.ones(fw.m), pinned=[0, 1, 2, 3])
        npt.assert_allclose(placed.coords[4], fw.coords[:4].mean(axis=0),
                            atol=1e-12)

    def test_reproduces_equilibrium_of_own_self_stress(self):
        fw = fx.crossed_square()
        w = r.analyze(fw).self_stresses[0]
        placed = force_density_solve(fw, w, pinned=[0, 1, 2])
        npt.assert_allclose(placed.coords, fw.coords, atol=1e-10)

    def test_affine_kernel_needs_three_pinned_vertices(self):
        # mixed-sign self-stress weights: equilibria are affine-invariant,
        # so two fully pinned vertices leave a singular reduced system
        fw = fx.crossed_square()
        w = r.analyze(fw).self_stresses[0]
        with pytest.raises(SingularSystem):
            force_density_solve(fw, w, pinned=[0, 1])

    def test_zero_weights_rejected(self):
        fw = fx.crossed_square()
        with pytest.raises(SingularSystem):
            force_density_solve(fw, np.zeros(fw.m), pinned=[0])

    def test_pin_forms(self):
        # vertex list, (vertex, axis) pairs and a PinningSpec all describe
        # the same fixed set here and must agree
        from rigidopt.pinning import PinningSpec
        fw = fx.crossed_square()
        w = np.ones(fw.m)
        a = force_density_solve(fw, w, pinned=[0, 1])
        b = force_density_solve(fw, w, pinned=[(0, 0), (0, 1), (1, 0), (1, 1)])
        spec = PinningSpec(pinned=((0, 0), (0, 1), (1, 0), (1, 1)),
                           anchors=(0, 1))
        c = force_density_solve(fw, w, pinned=spec)
        npt.assert_allclose(a.coords, b.coords, atol=1e-12)
        npt.assert_allclose(a.coords, c.coords, atol=1e-12)

    def test_weight_count_validated(self):
        with pytest.raises(ValueError, match="weight"):
            force_density_solve(fx.crossed_square(), [1.0, 2.0], pinned=[0])

    def test_out_of_range_pin_rejected(self):
        fw = fx.crossed_square()
        with pytest.raises(ValueError, match="out of range"):
            force_density_solve(fw, np.ones(fw.m), pinned=[12])
