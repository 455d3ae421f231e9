"""rigidopt: rigidity analysis and constrained-optimization design of bar
frameworks.

The package works with frameworks (straight bars joining points in the
plane or in space) through squared-length constraint systems:

* :mod:`rigidopt.framework` — frameworks, constraints, small geometry utils;
* :mod:`rigidopt.rigidity` — rigidity matrix, flexes, self-stresses and the
  prestress-stability (second-order) test;
* :mod:`rigidopt.pinning` — charts that remove the ambient rigid motions;
* :mod:`rigidopt.optimize` — projected gradient descent for extremizing a
  single edge length over the configurations of the rest, with KKT and
  second-order certificates;
* :mod:`rigidopt.stress_design` — realizing prescribed stress ratios on a
  designed edge subset, and the linear force-density placement;
* :mod:`rigidopt.bifurcation` — tracing one-dimensional flexes, locating
  extrema of an edge length along them, and tuning a second edge until two
  extrema merge into a third-order-rigid critical point;
* :mod:`rigidopt.io` — JSON framework documents and packing ingestion;
* :mod:`rigidopt.fixtures` — the reference frameworks used in the tests
  and demos.
"""

from .errors import (BracketInvalid, DegenerateAnchors, DegenerateSpan,
                     DegenerateSpanWarning, DocumentError, LICQFailure,
                     PairTrackingLost, ProjectionFailed, RigidoptError,
                     SingularSystem, StressVanishes)
from .framework import (Constraint, ConstraintSystem, EdgeLength, Framework,
                        Linear, PinCoordinate, align, build_system,
                        edge_length_sq, midpoint_constraints, perturb,
                        span_dimension, stress_bilinear, stress_quadratic)
from .rigidity import (FIRST_ORDER_RIGID, INCONCLUSIVE, ISOSTATIC,
                       NOT_CERTIFIED, OVER_CONSTRAINED, PRESTRESS_STABLE,
                       UNDER_CONSTRAINED, PrestressResult, RigidityReport,
                       analyze, prestress_test, rigidity_matrix,
                       second_order_stress_test, trivial_flex_basis)
from .pinning import PinningSpec, make_pinning, pinning_condition
from .optimize import (CONVERGED, CONVERGED_DEGENERATE, MAX, MAX_ITERS, MIN,
                       CrossEdgeResult, OptimizationProblem,
                       OptimizationResult, SecondOrderResult,
                       cross_edge_optimality, lagrange_multiplier,
                       length_problem, licq_check, project,
                       second_order_check, solve)
from .stress_design import (StressDesignProblem, StressDesignResult,
                            force_density_solve, solve_stress_design,
                            stress_design_problem)
from .bifurcation import (THIRD_ORDER, BifurcationResult, Extremum,
                          ManifoldTrace, ThirdOrderCertificate, find_extrema,
                          manifold_derivatives, merge_search,
                          third_order_certificate, trace_manifold)
from .io import FrameworkDocument, ingest_packing, load, save

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "RigidoptError", "DegenerateSpan", "DegenerateSpanWarning",
    "DegenerateAnchors", "ProjectionFailed", "SingularSystem", "LICQFailure",
    "BracketInvalid", "PairTrackingLost", "StressVanishes", "DocumentError",
    # framework
    "Framework", "EdgeLength", "PinCoordinate", "Linear", "Constraint",
    "ConstraintSystem", "build_system", "midpoint_constraints",
    "edge_length_sq", "stress_quadratic", "stress_bilinear", "perturb",
    "align", "span_dimension",
    # rigidity
    "rigidity_matrix", "trivial_flex_basis", "analyze", "RigidityReport",
    "PrestressResult", "prestress_test", "second_order_stress_test",
    "UNDER_CONSTRAINED", "ISOSTATIC", "OVER_CONSTRAINED",
    "FIRST_ORDER_RIGID", "PRESTRESS_STABLE", "NOT_CERTIFIED", "INCONCLUSIVE",
    # pinning
    "PinningSpec", "make_pinning", "pinning_condition",
    # optimize
    "MIN", "MAX", "CONVERGED", "CONVERGED_DEGENERATE", "MAX_ITERS",
    "OptimizationProblem", "OptimizationResult", "SecondOrderResult",
    "CrossEdgeResult", "length_problem", "solve", "project",
    "lagrange_multiplier", "licq_check", "second_order_check",
    "cross_edge_optimality",
    # stress design / force density
    "StressDesignProblem", "StressDesignResult", "stress_design_problem",
    "solve_stress_design", "force_density_solve",
    # bifurcation
    "THIRD_ORDER", "ManifoldTrace", "Extremum", "ThirdOrderCertificate",
    "BifurcationResult", "trace_manifold", "find_extrema",
    "manifold_derivatives", "third_order_certificate", "merge_search",
    # io
    "FrameworkDocument", "load", "save", "ingest_packing",
]
