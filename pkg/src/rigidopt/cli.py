"""Command-line front end.

Subcommands::

    rigidopt analyze FILE          counting, flexes, stresses, prestress test
    rigidopt optimize FILE         min/maximize one edge length on the manifold
    rigidopt stress-design FILE    realize prescribed stress ratios on a subset
    rigidopt force-density FILE    linear equilibrium placement from densities
    rigidopt perturb FILE          write a jittered copy of a framework
    rigidopt trace FILE            walk the one-dimensional constraint manifold
    rigidopt bifurcate FILE        tune one edge until two extrema merge

Exit codes: 0 success/certified, 2 finished but not certified (or partial
trace), 3 solver failure, 1 bad usage or unreadable input.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import json
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import io as fio
from .bifurcation import find_extrema, merge_search, trace_manifold
from .errors import RigidoptError, DocumentError
from .framework import Framework, build_system, perturb as perturb_coords
from .optimize import (MAX, MIN, CONVERGED, CONVERGED_DEGENERATE, MAX_ITERS,
                       OptimizationResult, length_problem, project, solve)
from .pinning import make_pinning
from .rigidity import analyze
from .stress_design import (force_density_solve, solve_stress_design,
                            stress_design_problem)

__all__ = ["main"]

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_UNCERTIFIED = 2
EXIT_SOLVER = 3


def _fail(msg: str) -> int:
    print(f"error: {msg}", file=sys.stderr)
    return EXIT_USAGE


def _load_doc(path: str) -> fio.FrameworkDocument:
    return fio.load(path)


def _parse_pair(text: str, what: str) -> tuple[int, int]:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"{what} must be 'i,j', got {text!r}")
    return int(parts[0]), int(parts[1])


def _parse_floats(text: str) -> list[float]:
    return [float(tok) for tok in text.replace(",", " ").split()]


def _anchors(doc: fio.FrameworkDocument, override: Optional[str]):
    if override:
        return tuple(int(tok) for tok in override.split(","))
    if doc.pins:
        spec = doc.pinning_spec()
        if spec is not None and len(spec.anchors) >= doc.dim:
            return spec.anchors[:doc.dim]
    return None


def _guard_out(path: str, force: bool) -> Optional[int]:
    if Path(path).exists() and not force:
        print(f"error: {path} exists; pass --force to overwrite",
              file=sys.stderr)
        return EXIT_USAGE
    return None


def _write_doc(doc: fio.FrameworkDocument, fw: Framework, out: str,
               force: bool, note: Optional[dict] = None) -> Optional[int]:
    rc = _guard_out(out, force)
    if rc is not None:
        return rc
    new = dataclasses.replace(
        doc,
        vertices=[[float(x) for x in row] for row in fw.coords],
        metadata={**doc.metadata, **(note or {})},
    )
    fio.save(new, out)
    return None


def _emit(args, payload: dict) -> None:
    if getattr(args, "emit", None) == "summary":
        print(json.dumps(payload, sort_keys=True))


# -- analyze -------------------------------------------------------------------


def _cmd_analyze(args) -> int:
    doc = _load_doc(args.file)
    fw = doc.framework()
    pins = doc.pin_constraints() or None
    extras = doc.extra_constraints()
    report = analyze(fw, pins=pins, extras=tuple(extras),
                     rank_tol=args.rank_tol, pd_tol=args.pd_tol)

    if args.emit != "summary":
        print(f"vertices: {fw.n}  edges: {fw.m}  dim: {fw.dim}"
              + (f"  pins: {len(doc.pins)}" if doc.pins else "")
              + (f"  extra rows: {len(extras)}" if extras else ""))
        print(f"rank: {report.rank}  counting: {report.classification}")
        print(f"nontrivial flexes: {report.n_flexes}   "
              f"self-stresses: {report.n_stresses}")
        print(f"verdict: {report.summary()}")
        if args.show in ("stresses", "all") and report.n_stresses:
            for k, w in enumerate(report.self_stresses):
                terms = "  ".join(f"{a}-{b}:{w[j]:+.4f}"
                                  for j, (a, b) in enumerate(fw.edges))
                print(f"stress[{k}]: {terms}")
        if args.show in ("flexes", "all") and report.n_flexes:
            for k, v in enumerate(report.nontrivial_flexes):
                rows = v.reshape(fw.n, fw.dim)
                terms = "  ".join(
                    f"{i}:({', '.join(f'{x:+.4f}' for x in rows[i])})"
                    for i in range(fw.n))
                print(f"flex[{k}]: {terms}")

    _emit(args, {
        "command": "analyze", "n": fw.n, "m": fw.m, "dim": fw.dim,
        "rank": report.rank, "classification": report.classification,
        "flexes": report.n_flexes, "stresses": report.n_stresses,
        "first_order_rigid": report.first_order_rigid,
        "verdict": report.prestress.verdict if report.prestress else None,
    })
    return EXIT_OK


# -- optimize ------------------------------------------------------------------


def _run_one(doc, fw, args, seed: Optional[int]) -> OptimizationResult:
    start = fw
    if seed is not None:
        start = perturb_coords(fw, magnitude=args.perturb, seed=seed)
    prob = length_problem(
        start, args.edge, args.dir,
        anchors=_anchors(doc, args.anchors),
        extras=tuple(doc.extra_constraints()),
        targets=doc.target_lengths(),
        eta=args.eta, feas_tol=args.feas_tol, kkt_tol=args.kkt_tol,
        step_tol=args.step_tol, max_iters=args.max_iters,
    )
    return solve(prob)


def _better(a: OptimizationResult, b: OptimizationResult, direction) -> bool:
    """True if a beats b."""
    if a.certified != b.certified:
        return a.certified
    ok_a = a.status in (CONVERGED, CONVERGED_DEGENERATE)
    ok_b = b.status in (CONVERGED, CONVERGED_DEGENERATE)
    if ok_a != ok_b:
        return ok_a
    if direction == MIN:
        return a.objective < b.objective
    return a.objective > b.objective


def _cmd_optimize(args) -> int:
    doc = _load_doc(args.file)
    fw = doc.framework()
    if not (0 <= args.edge < fw.m):
        return _fail(f"--edge {args.edge} out of range (m={fw.m})")

    seeds: list[Optional[int]] = [None]
    if args.restarts > 1:
        seeds += [args.seed + k for k in range(args.restarts - 1)]

    runs: list[OptimizationResult] = []
    failures: list[str] = []
    if len(seeds) == 1:
        try:
            runs.append(_run_one(doc, fw, args, None))
        except RigidoptError as exc:
            print(f"solver failure: {exc}", file=sys.stderr)
            return EXIT_SOLVER
    else:
        with concurrent.futures.ThreadPoolExecutor(
                max_workers=min(len(seeds), 8)) as pool:
            futs = {pool.submit(_run_one, doc, fw, args, s): s for s in seeds}
            for fut in concurrent.futures.as_completed(futs):
                try:
                    runs.append(fut.result())
                except RigidoptError as exc:
                    failures.append(f"seed {futs[fut]}: {exc}")
        if not runs:
            for msg in failures:
                print(f"solver failure: {msg}", file=sys.stderr)
            return EXIT_SOLVER

    best = runs[0]
    for r in runs[1:]:
        if _better(r, best, args.dir):
            best = r

    length = float(np.sqrt(max(best.objective, 0.0)))
    if args.emit != "summary":
        print(f"status: {best.status}   iterations: {best.iters}")
        print(f"edge {args.edge} length: {length:.6f} "
              f"(squared: {best.objective:.6f})")
        print(f"kkt residual: {best.kkt_residual:.3e}   "
              f"licq: {'ok' if best.licq_ok else 'FAILED'}")
        so = best.second_order
        if so is not None:
            print(f"second-order: certified={so.certified} "
                  f"eig=[{so.eig_min:.3e}, {so.eig_max:.3e}] "
                  f"cone dim={so.cone_dim}")
        print(f"certified: {best.certified}")
        if len(runs) > 1:
            n_cert = sum(r.certified for r in runs)
            print(f"restarts: {len(runs)} run(s), {n_cert} certified, "
                  f"{len(failures)} failed")

    if args.out:
        rc = _write_doc(doc, best.framework, args.out, args.force,
                        note={"optimized_edge": args.edge,
                              "direction": args.dir,
                              "length": length})
        if rc is not None:
            return rc

    _emit(args, {
        "command": "optimize", "edge": args.edge, "direction": args.dir,
        "status": best.status, "objective": best.objective, "length": length,
        "kkt_residual": best.kkt_residual, "certified": best.certified,
        "iterations": best.iters, "runs": len(runs),
        "out": args.out,
    })
    if best.status == MAX_ITERS:
        return EXIT_SOLVER
    return EXIT_OK if best.certified else EXIT_UNCERTIFIED


# -- stress design -------------------------------------------------------------


def _parse_targets(text: str) -> dict[int, float]:
    out: dict[int, float] = {}
    for tok in text.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if "=" not in tok:
            raise ValueError(f"target {tok!r} must look like EDGE=VALUE")
        k, v = tok.split("=", 1)
        out[int(k)] = float(v)
    if not out:
        raise ValueError("no stress targets given")
    return out


def _cmd_stress_design(args) -> int:
    doc = _load_doc(args.file)
    fw = doc.framework()
    try:
        targets = _parse_targets(args.targets)
    except ValueError as exc:
        return _fail(str(exc))
    if any(not (0 <= k < fw.m) for k in targets):
        return _fail(f"stress target edge out of range (m={fw.m})")

    try:
        prob = stress_design_problem(
            fw, targets, anchors=_anchors(doc, args.anchors),
            eta=args.eta, feas_tol=args.feas_tol, kkt_tol=args.kkt_tol,
            step_tol=args.step_tol, max_iters=args.max_iters)
        result = solve_stress_design(prob)
    except RigidoptError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    if args.emit != "summary":
        print(f"status: {result.status}   iterations: {result.iters}")
        print(f"objective: {result.objective:.6f}   "
              f"kkt residual: {result.kkt_residual:.3e}")
        print(f"stress residual: {result.stress_residual:.3e}   "
              f"certified: {result.certified}")
        w = result.designed_stress
        terms = "  ".join(f"{k}:{w[k]:+.4f}" for k in sorted(targets))
        print(f"designed stress on targets: {terms}")

    if args.out:
        rc = _write_doc(doc, result.framework, args.out, args.force,
                        note={"stress_design": {str(k): v
                                                for k, v in targets.items()}})
        if rc is not None:
            return rc

    _emit(args, {
        "command": "stress-design", "status": result.status,
        "objective": result.objective, "kkt_residual": result.kkt_residual,
        "stress_residual": result.stress_residual,
        "certified": result.certified, "out": args.out,
    })
    if result.status == MAX_ITERS:
        return EXIT_SOLVER
    return EXIT_OK if result.certified else EXIT_UNCERTIFIED


# -- force density ---------------------------------------------------------------


def _cmd_force_density(args) -> int:
    doc = _load_doc(args.file)
    fw = doc.framework()

    if args.weights:
        try:
            weights = _parse_floats(args.weights)
        except ValueError:
            return _fail(f"could not parse --weights {args.weights!r}")
        if len(weights) != fw.m:
            return _fail(f"--weights needs {fw.m} values, got {len(weights)}")
    else:
        weights = [args.uniform] * fw.m

    if args.fix:
        try:
            pinned = [int(tok) for tok in args.fix.split(",")]
        except ValueError:
            return _fail(f"could not parse --fix {args.fix!r}")
        if any(not (0 <= v < fw.n) for v in pinned):
            return _fail("--fix vertex out of range")
        pinned_arg = pinned
    elif doc.pins:
        pinned_arg = [tuple(p) for p in doc.pins]
    else:
        return _fail("no vertices to fix: pass --fix or pin some in the file")

    try:
        placed = force_density_solve(fw, weights, pinned_arg)
    except (RigidoptError, ValueError) as exc:
        # e.g. all-positive densities with one pin collapse every vertex
        # onto it, and the degenerate placement has zero-length edges
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    lengths = placed.edge_lengths()
    if args.emit != "summary":
        print(f"placed {fw.n} vertices; edge lengths "
              f"[{lengths.min():.4f}, {lengths.max():.4f}]")

    if args.out:
        rc = _write_doc(doc, placed, args.out, args.force,
                        note={"force_density": True})
        if rc is not None:
            return rc

    _emit(args, {
        "command": "force-density", "n": fw.n, "m": fw.m,
        "min_length": float(lengths.min()), "max_length": float(lengths.max()),
        "out": args.out,
    })
    return EXIT_OK


# -- perturb -------------------------------------------------------------------


def _cmd_perturb(args) -> int:
    doc = _load_doc(args.file)
    fw = doc.framework()
    jittered = perturb_coords(fw, magnitude=args.magnitude, seed=args.seed)
    rc = _write_doc(doc, jittered, args.out, args.force,
                    note={"perturbed": {"magnitude": args.magnitude,
                                        "seed": args.seed}})
    if rc is not None:
        return rc
    _emit(args, {"command": "perturb", "magnitude": args.magnitude,
                 "seed": args.seed, "out": args.out})
    return EXIT_OK


# -- trace ---------------------------------------------------------------------


def _trace_system(doc, fw, edge: int, anchors_opt):
    spec, chart = make_pinning(fw, anchors=_anchors(doc, anchors_opt))
    cs = build_system(chart, free_edge=edge, pins=spec.constraints(),
                      extras=tuple(doc.extra_constraints()),
                      targets=doc.target_lengths())
    return chart, cs


def _cmd_trace(args) -> int:
    doc = _load_doc(args.file)
    fw = doc.framework()
    if not (0 <= args.edge < fw.m):
        return _fail(f"--edge {args.edge} out of range (m={fw.m})")
    alpha_pair = None
    if args.alpha:
        try:
            alpha_pair = _parse_pair(args.alpha, "--alpha")
        except ValueError as exc:
            return _fail(str(exc))

    rc = _guard_out(args.out, args.force)
    if rc is not None:
        return rc

    try:
        chart, cs = _trace_system(doc, fw, args.edge, args.anchors)
        p0 = chart.flat
        if np.linalg.norm(cs.fixed_residual(p0)) > args.feas_tol:
            p0 = project(cs, p0, feas_tol=args.feas_tol,
                         refresh_jacobian=True)
        trace = trace_manifold(cs, p0, h=args.step, max_steps=args.max_steps,
                               alpha_pair=alpha_pair, feas_tol=args.feas_tol)
    except RigidoptError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    lengths = trace.lengths
    lines = ["X,Y"]
    for a, y in zip(trace.alpha, lengths):
        x = a if np.isfinite(a) else np.nan
        lines.append(f"{x:.12g},{y:.12g}")
    Path(args.out).write_text("\n".join(lines) + "\n")

    extrema = find_extrema(cs, trace, feas_tol=args.feas_tol)
    partial = trace.failure is not None or not trace.closed
    if args.emit != "summary":
        print(f"samples: {len(trace)}   closed: {trace.closed}   "
              f"max residual: {trace.max_residual:.3e}")
        if trace.failure:
            print(f"trace stopped early: {trace.failure}")
        elif not trace.closed:
            print("trace did not close within --max-steps")
        for ex in extrema:
            print(f"extremum: {ex.kind} length={np.sqrt(ex.f1):.6f} "
                  f"alpha={ex.alpha:.6f}")
        print(f"wrote {args.out}")

    _emit(args, {
        "command": "trace", "samples": len(trace), "closed": trace.closed,
        "failure": trace.failure,
        "extrema": [{"kind": e.kind, "length": float(np.sqrt(e.f1)),
                     "alpha": e.alpha} for e in extrema],
        "out": args.out,
    })
    return EXIT_UNCERTIFIED if partial else EXIT_OK


# -- bifurcate -----------------------------------------------------------------


def _cmd_bifurcate(args) -> int:
    doc = _load_doc(args.file)
    fw = doc.framework()
    for name, k in (("--edge", args.edge), ("--tune", args.tune)):
        if not (0 <= k < fw.m):
            return _fail(f"{name} {k} out of range (m={fw.m})")
    try:
        lo, hi = (float(tok) for tok in args.bracket.split(","))
    except ValueError:
        return _fail(f"--bracket must be 'lo,hi', got {args.bracket!r}")
    alpha_pair = None
    if args.alpha:
        try:
            alpha_pair = _parse_pair(args.alpha, "--alpha")
        except ValueError as exc:
            return _fail(str(exc))

    try:
        result = merge_search(
            fw, args.edge, args.tune, (lo, hi),
            anchors=_anchors(doc, args.anchors), h=args.step,
            alpha_pair=alpha_pair, feas_tol=args.feas_tol,
            merge_tol=args.merge_tol, a3_tol=args.a3_tol)
    except RigidoptError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER

    cert = result.certificate
    if args.emit != "summary":
        print(f"tuned length (edge {args.tune}): {result.tuned_length:.6f}")
        print(f"critical length (edge {args.edge}): "
              f"{result.critical_length:.6f}   "
              f"alpha: {result.alpha_critical:.6f}")
        print(f"verdict: {cert.verdict}"
              + (f" ({cert.reason})" if cert.reason else ""))
        print(f"derivatives along kernel: f'={cert.f1_prime:.3e} "
              f"f''={cert.f1_second:.3e}   a3={cert.a3:.4e}")
        print(f"kernel dim: {cert.dim_kernel}   "
              f"polish: {result.polish_path}")

    if args.out:
        critical = result.framework.with_coords(
            result.critical_config.reshape(fw.n, fw.dim))
        rc = _write_doc(doc, critical, args.out, args.force,
                        note={"bifurcation": {
                            "tuned_edge": args.tune,
                            "tuned_length": result.tuned_length,
                            "free_edge": args.edge,
                            "critical_length": result.critical_length,
                        }})
        if rc is not None:
            return rc

    _emit(args, {
        "command": "bifurcate", "tuned_length": result.tuned_length,
        "critical_length": result.critical_length,
        "alpha": result.alpha_critical, "verdict": cert.verdict,
        "a3": cert.a3, "f1_prime": cert.f1_prime,
        "f1_second": cert.f1_second, "dim_kernel": cert.dim_kernel,
        "polish": result.polish_path, "certified": result.certified,
        "out": args.out,
    })
    return EXIT_OK if result.certified else EXIT_UNCERTIFIED


# -- parser --------------------------------------------------------------------


def _add_common_solver(p: argparse.ArgumentParser) -> None:
    p.add_argument("--eta", type=float, default=1e-2,
                   help="gradient step size (default 1e-2)")
    p.add_argument("--feas-tol", type=float, default=1e-10)
    p.add_argument("--kkt-tol", type=float, default=1e-7)
    p.add_argument("--step-tol", type=float, default=1e-10)
    p.add_argument("--max-iters", type=int, default=200_000)


def _add_out(p: argparse.ArgumentParser, required: bool = False) -> None:
    p.add_argument("--out", required=required,
                   help="write the resulting framework/trace here")
    p.add_argument("--force", action="store_true",
                   help="overwrite --out if it exists")


def _add_emit(p: argparse.ArgumentParser) -> None:
    p.add_argument("--emit", choices=["summary"],
                   help="print a one-line JSON summary instead of text")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="rigidopt",
        description="Rigidity analysis and optimization of bar frameworks.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="rank, flexes, stresses, prestress test")
    p.add_argument("file")
    p.add_argument("--rank-tol", type=float, default=1e-9)
    p.add_argument("--pd-tol", type=float, default=1e-8)
    p.add_argument("--show", choices=["stresses", "flexes", "all"])
    _add_emit(p)
    p.set_defaults(func=_cmd_analyze)

    p = sub.add_parser("optimize", help="extremize one edge length")
    p.add_argument("file")
    p.add_argument("--edge", type=int, required=True)
    p.add_argument("--dir", choices=[MIN, MAX], required=True)
    p.add_argument("--anchors", help="comma-separated gauge vertices")
    p.add_argument("--restarts", type=int, default=1,
                   help="number of starts (first unperturbed)")
    p.add_argument("--perturb", type=float, default=0.05,
                   help="jitter magnitude for restarts")
    p.add_argument("--seed", type=int, default=0)
    _add_common_solver(p)
    _add_out(p)
    _add_emit(p)
    p.set_defaults(func=_cmd_optimize)

    p = sub.add_parser("stress-design",
                       help="fix some lengths, design the rest for a stress")
    p.add_argument("file")
    p.add_argument("--targets", required=True,
                   help="comma-separated EDGE=STRESS pairs, e.g. '2=8,5=4'")
    p.add_argument("--anchors", help="comma-separated gauge vertices")
    _add_common_solver(p)
    _add_out(p)
    _add_emit(p)
    p.set_defaults(func=_cmd_stress_design)

    p = sub.add_parser("force-density",
                       help="place vertices from force densities (linear)")
    p.add_argument("file")
    p.add_argument("--weights", help="comma-separated density per edge")
    p.add_argument("--uniform", type=float, default=1.0,
                   help="uniform density when --weights is absent")
    p.add_argument("--fix", help="comma-separated vertices to pin fully")
    _add_out(p)
    _add_emit(p)
    p.set_defaults(func=_cmd_force_density)

    p = sub.add_parser("perturb", help="write a jittered copy")
    p.add_argument("file")
    p.add_argument("--magnitude", type=float, default=1e-2)
    p.add_argument("--seed", type=int, default=0)
    _add_out(p, required=True)
    _add_emit(p)
    p.set_defaults(func=_cmd_perturb)

    p = sub.add_parser("trace", help="sample the constraint manifold to CSV")
    p.add_argument("file")
    p.add_argument("--edge", type=int, required=True,
                   help="edge whose length is reported (left unconstrained)")
    p.add_argument("--step", type=float, default=1e-2)
    p.add_argument("--max-steps", type=int, default=200_000)
    p.add_argument("--alpha", help="vertex pair i,j defining the angle")
    p.add_argument("--anchors", help="comma-separated gauge vertices")
    p.add_argument("--feas-tol", type=float, default=1e-10)
    _add_out(p, required=True)
    _add_emit(p)
    p.set_defaults(func=_cmd_trace)

    p = sub.add_parser("bifurcate",
                       help="tune an edge until two extrema of another merge")
    p.add_argument("file")
    p.add_argument("--edge", type=int, required=True,
                   help="free edge whose extrema are tracked")
    p.add_argument("--tune", type=int, required=True,
                   help="edge whose target length is tuned")
    p.add_argument("--bracket", required=True, help="'lo,hi' tuning lengths")
    p.add_argument("--step", type=float, default=1e-2)
    p.add_argument("--alpha", help="vertex pair i,j defining the angle")
    p.add_argument("--anchors", help="comma-separated gauge vertices")
    p.add_argument("--feas-tol", type=float, default=1e-10)
    p.add_argument("--merge-tol", type=float, default=1e-8)
    p.add_argument("--a3-tol", type=float, default=1e-6)
    _add_out(p)
    _add_emit(p)
    p.set_defaults(func=_cmd_bifurcate)

    return ap


def main(argv: Optional[Sequence[str]] = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors; fold into our usage code
        return EXIT_USAGE if exc.code else EXIT_OK
    # fail on an existing --out before the solve, not after
    out = getattr(args, "out", None)
    if out:
        rc = _guard_out(out, getattr(args, "force", False))
        if rc is not None:
            return rc
    try:
        return args.func(args)
    except DocumentError as exc:
        for line in exc.errors:
            print(f"error: {line}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
