# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import argparse
import json
import logging
import os
import sys

import torch

from cechcollapse.architecture.config import ScenarioConfig
from cechcollapse.architecture.figure import FIGURE_KINDS, emit_figure
from cechcollapse.architecture.pipeline import run_pipeline
from cechcollapse.architecture.utils import canonical_json, read_complex, read_json, write_complex, write_json
from cechcollapse.component.alpha_hull import cap_height
from cechcollapse.component.builders import PointCloud, build_cech, build_restricted_cech, build_rips
from cechcollapse.component.collapse.evolving import build_evolving_family, evolving_collapse
from cechcollapse.component.collapse.sweep import RestrictionSweep, check_sampling_conditions
from cechcollapse.component.collapse_trace import CollapseTrace, verify_trace
from cechcollapse.component.errors import CechCollapseError
from cechcollapse.component.probes import monte_carlo_ball_inclusion, monte_carlo_hull_bound, monte_carlo_reach
from cechcollapse.component.robustness import (
    check_nice_triangulation,
    check_robust_covering_direct,
    check_robust_covering_sufficient,
    match_vertices_to_samples,
)
from cechcollapse.component.shapes import SHAPES, SampleSpec, build_shape
from cechcollapse.model.templates import TEMPLATES, build_template
from cechcollapse.model.triangulation import build_star_covering

logger = logging.getLogger(__name__)

CHECKS = ("conditions", "sufficient", "nice", "robust", "lemma", "hull", "reach")

# scenario fields settable from `run` flags
RUN_OPTIONS = (
    "shape",
    "n_points",
    "target_epsilon",
    "seed",
    "alpha",
    "force",
    "dim_cap",
    "template",
    "template_n",
    "steps",
    "max_depth",
    "delta",
    "probe_density",
    "output_dir",
)


def _alpha(value):
    return value if value == "auto" else float(value)


def _params(pairs):
    out = {}
    for pair in pairs or ():
        key, _, value = pair.partition("=")
        try:
            out[key] = json.loads(value)
        except json.JSONDecodeError:
            out[key] = value
    return out


def _shape(args):
    return build_shape(args.shape, **_params(args.param))


def _sidecar_epsilon(path):
    sidecar = f"{path}.json"
    if os.path.exists(sidecar):
        return read_json(sidecar).get("epsilon")
    return None


def _emit(obj, path=None):
    if path:
        write_json(path, obj)
    print(canonical_json(obj, indent=2))


def _write_complex(path, K, comment=None):
    if path.endswith(".json"):
        write_json(path, K.to_dict())
    else:
        write_complex(path, K, comment)


def _bundle(args, shape=None):
    bundle = build_template(args.template, args.n, shape=shape)
    build_star_covering(bundle, args.samples_per_cell)
    return bundle


def cmd_shape_sample(args):
    shape = _shape(args)
    spec = SampleSpec(target_epsilon=args.target_epsilon, mode=args.mode, seed=args.seed, n=args.n, noise=args.noise)
    points, epsilon = shape.sample(spec)
    PointCloud(points).save(args.out, epsilon, shape.reach())
    print(canonical_json({"points": len(points), "epsilon": epsilon, "reach": shape.reach()}))
    return 0


def cmd_build(args):
    P = PointCloud.load(args.points)
    if args.kind == "rips":
        K = build_rips(P, args.alpha, args.dim_cap, args.tol)
    elif args.kind == "cech":
        K = build_cech(P, args.alpha, args.dim_cap, args.tol)
    else:
        K = build_restricted_cech(_shape(args), P, args.alpha, args.dim_cap, args.solver_tol)
    _write_complex(args.out, K, f"{args.kind} complex at alpha={args.alpha!r}")
    print(canonical_json({"kind": args.kind, "f_vector": K.f_vector()}))
    return 0


def cmd_collapse_sweep(args):
    P = PointCloud.load(args.points)
    epsilon = args.epsilon if args.epsilon is not None else _sidecar_epsilon(args.points)
    sweep = RestrictionSweep(
        _shape(args), P, args.alpha, tol=args.solver_tol, epsilon=epsilon, dim_cap=args.dim_cap, force=args.force
    )
    K, trace, report = sweep.run()
    _write_complex(args.out, K, "restricted Cech complex")
    write_json(args.trace, dict(trace.to_dict(), digest=trace.digest()))
    if args.start:
        _write_complex(args.start, sweep.cech, "Cech complex")
    _emit(report, args.report)
    return 0


def cmd_collapse_evolve(args):
    shape = _shape(args)
    P = PointCloud.load(args.points)
    epsilon = args.epsilon if args.epsilon is not None else _sidecar_epsilon(args.points)
    bundle = _bundle(args, shape)
    f = match_vertices_to_samples(bundle, P, args.alpha, epsilon, force=getattr(args, "force", False))
    family = build_evolving_family(shape, bundle.covering, P, args.alpha, f, dirs=args.directions)
    K, trace, engine = evolving_collapse(
        family, args.steps, args.solver_tol, args.max_depth, args.dim_cap, return_report=True
    )
    _write_complex(args.out, K, "image of the covering nerve")
    write_json(args.trace, dict(trace.to_dict(), digest=trace.digest()))
    if args.start:
        _write_complex(args.start, engine.start, "nerve of the evolving family at t = 0")
    _emit(dict(engine.report.to_dict(), vertex_map=f), args.report)
    return 0


def cmd_triangulate(args):
    shape = _shape(args) if args.shape else None
    bundle = _bundle(args, shape)
    _write_complex(args.out, bundle.T, f"{args.template}(n={args.n})")
    if args.covering:
        write_json(args.covering, bundle.covering_to_dict())
    print(canonical_json({"template": args.template, "n": args.n, "f_vector": bundle.T.f_vector(), "rho": bundle.rho}))
    return 0


def cmd_check(args):
    if args.what in CHECKS[:4] and args.alpha is None:
        sys.exit(f"check {args.what} needs --alpha")
    if args.what == "conditions":
        if args.epsilon is None:
            sys.exit("check conditions needs --epsilon")
        report = check_sampling_conditions(args.epsilon, args.alpha, args.r)
        _emit(report, args.report)
        return 0 if report.passed else 1
    if args.what == "sufficient":
        passed = check_robust_covering_sufficient(args.rho, args.delta, args.alpha)
        _emit({"passed": passed, "cap_height": cap_height(args.alpha, min(args.rho, args.alpha))}, args.report)
        return 0 if passed else 1
    if args.what in ("nice", "robust"):
        shape = _shape(args)
        bundle = _bundle(args, shape)
        if args.what == "robust":
            report = check_robust_covering_direct(bundle.covering, shape, args.alpha, probe_density=args.probe_density)
            _emit(report, args.report)
            return 0 if report.robust else 1
        rho = args.rho if args.rho is not None else bundle.rho * (1 + 1e-9) + 1e-12
        delta = args.delta if args.delta is not None else cap_height(args.alpha, min(rho, args.alpha))
        report = check_nice_triangulation(bundle, shape, rho, delta, args.probe_density)
        _emit(report, args.report)
        return 0 if report.passed else 1
    if args.what == "lemma":
        report = monte_carlo_ball_inclusion(args.trials, args.dim, args.seed)
    elif args.what == "hull":
        report = monte_carlo_hull_bound(args.trials, args.dim, args.seed)
    else:
        report = monte_carlo_reach(args.trials, args.seed)
    _emit(report, args.report)
    return 0 if report.passed else 1


def cmd_verify(args):
    start = read_complex(args.start)
    trace = CollapseTrace.from_dict(read_json(args.trace))
    end = read_complex(args.end) if args.end else None
    report = verify_trace(start, trace, expected_end=end)
    _emit(dict(report.to_dict(), digest=trace.digest()), args.report)
    return 0 if report.ok else 1


def cmd_run(args):
    if args.config:
        config = ScenarioConfig.from_file(args.config)
        config.override(args)
    else:
        kwargs = {k: getattr(args, k) for k in RUN_OPTIONS if getattr(args, k) is not None}
        solver = {"solver_tol": args.solver_tol} if args.solver_tol is not None else {}
        config = ScenarioConfig(solver=solver, **kwargs)
    report = run_pipeline(config)
    print(canonical_json({"ok": report.ok, "failed_stage": report.failed_stage, "checks": report.checks}, indent=2))
    return report.exit_code


def cmd_fig(args):
    for path in emit_figure(args.run, args.kind, args.out, args.complex):
        print(path)
    return 0


def _scene(p, alpha=True):
    p.add_argument("--shape", choices=sorted(SHAPES), default="circle")
    p.add_argument("--param", action="append", metavar="KEY=VALUE", help="shape parameter (JSON value)")
    if alpha:
        p.add_argument("--alpha", type=float, required=True)
    p.add_argument("--dim-cap", type=int, default=None)
    p.add_argument("--solver-tol", type=float, default=1e-7)


def _template(p):
    p.add_argument("--template", choices=sorted(TEMPLATES), required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--samples-per-cell", type=int, default=4)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cechcollapse", description="Cech complexes simplified by collapses")
    parser.add_argument("--threads", type=int, default=None, help="cap on torch intra-op threads")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    sub = parser.add_subparsers(dest="command", required=True)

    shape = sub.add_parser("shape", help="shape oracles").add_subparsers(dest="action", required=True)
    p = shape.add_parser("sample", help="certified epsilon-sample of a shape")
    _scene(p, alpha=False)
    p.add_argument("--n", type=int, default=None)
    p.add_argument("--target-epsilon", type=float, default=None)
    p.add_argument("--mode", choices=["on-shape", "noisy-tube"], default="on-shape")
    p.add_argument("--noise", type=float, default=0.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_shape_sample)

    p = sub.add_parser("build", help="Rips, Cech or restricted Cech complex")
    _scene(p)
    p.add_argument("--points", required=True)
    p.add_argument("--kind", choices=["rips", "cech", "restricted"], default="cech")
    p.add_argument("--tol", type=float, default=1e-9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_build)

    collapse = sub.add_parser("collapse", help="collapse procedures").add_subparsers(dest="action", required=True)
    for name, func in (("sweep", cmd_collapse_sweep), ("evolve", cmd_collapse_evolve)):
        p = collapse.add_parser(name)
        _scene(p)
        p.add_argument("--points", required=True)
        p.add_argument("--epsilon", type=float, default=None, help="defaults to the sample sidecar")
        p.add_argument("--out", required=True)
        p.add_argument("--trace", required=True)
        p.add_argument("--start", default=None, help="also write the start complex")
        p.add_argument("--report", default=None)
        p.set_defaults(func=func)
        if name == "sweep":
            p.add_argument("--force", action="store_true")
        else:
            _template(p)
            p.add_argument("--steps", type=int, default=64)
            p.add_argument("--max-depth", type=int, default=6)
            p.add_argument("--directions", type=int, default=None)

    p = sub.add_parser("triangulate", help="triangulation template and star covering")
    _template(p)
    p.add_argument("--shape", choices=sorted(SHAPES), default=None)
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--out", required=True)
    p.add_argument("--covering", default=None)
    p.set_defaults(func=cmd_triangulate)

    p = sub.add_parser("check", help="sampling, niceness, robustness and Monte-Carlo checks")
    p.add_argument("what", choices=CHECKS)
    p.add_argument("--shape", choices=sorted(SHAPES), default="circle")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--template", choices=sorted(TEMPLATES), default="polygon")
    p.add_argument("--n", type=int, default=12)
    p.add_argument("--samples-per-cell", type=int, default=4)
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--r", type=float, default=1.0)
    p.add_argument("--rho", type=float, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--probe-density", type=int, default=None)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--dim", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("verify", help="replay a collapse trace")
    p.add_argument("--start", required=True)
    p.add_argument("--trace", required=True)
    p.add_argument("--end", default=None)
    p.add_argument("--report", default=None)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("run", help="full pipeline from a scenario config")
    p.add_argument("--config", default=None, help="TOML or JSON scenario")
    p.add_argument("--shape", choices=sorted(SHAPES), default=None)
    p.add_argument("--n-points", dest="n_points", type=int, default=None)
    p.add_argument("--target-epsilon", dest="target_epsilon", type=float, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--alpha", type=_alpha, default=None)
    p.add_argument("--force", action="store_true", default=None)
    p.add_argument("--dim-cap", dest="dim_cap", type=int, default=None)
    p.add_argument("--template", choices=sorted(TEMPLATES), default=None)
    p.add_argument("--template-n", dest="template_n", type=int, default=None)
    p.add_argument("--steps", type=int, default=None)
    p.add_argument("--max-depth", dest="max_depth", type=int, default=None)
    p.add_argument("--delta", type=float, default=None)
    p.add_argument("--probe-density", dest="probe_density", type=int, default=None)
    p.add_argument("--output-dir", dest="output_dir", default=None)
    p.add_argument("--solver-tol", dest="solver_tol", type=float, default=None)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("fig", help="SVG figures of a run directory")
    p.add_argument("--run", required=True)
    p.add_argument("--kind", required=True, choices=FIGURE_KINDS)
    p.add_argument("--out", default=None)
    p.add_argument("--complex", default="restricted")
    p.set_defaults(func=cmd_fig)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, args.log_level), format="%(levelname)s %(name)s: %(message)s")
    if args.threads:
        torch.set_num_threads(args.threads)
    try:
        return args.func(args)
    except CechCollapseError as e:
        logger.error(str(e))
        print(canonical_json(e.to_dict(), indent=2), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
