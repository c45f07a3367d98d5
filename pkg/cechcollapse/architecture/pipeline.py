# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import logging
import math
from contextlib import contextmanager
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import cechcollapse
from cechcollapse.architecture.config import ScenarioConfig
from cechcollapse.architecture.utils import RunDirectory
from cechcollapse.component.alpha_hull import cap_height
from cechcollapse.component.builders import PointCloud, build_cech, check_cech_in_rips
from cechcollapse.component.collapse.evolving import (
    EvolvingCollapse,
    build_evolving_family,
    check_final_coverage,
    covering_nerve_image,
)
from cechcollapse.component.collapse.sweep import CANONICAL_ALPHA_FACTOR, RestrictionSweep, check_sampling_conditions
from cechcollapse.component.collapse_trace import verify_trace
from cechcollapse.component.errors import CechCollapseError, ComplexDomain, PreconditionViolated, StepTooCoarse
from cechcollapse.component.homology import betti_numbers_mod2, same_betti
from cechcollapse.component.robustness import (
    check_nice_triangulation,
    check_robust_covering_direct,
    check_robust_covering_sufficient,
    match_vertices_to_samples,
)
from cechcollapse.component.shapes import SampleSpec, build_shape
from cechcollapse.component.simplicial_complex import are_isomorphic_under_map, is_closed_surface, is_cycle_graph
from cechcollapse.model.templates import build_template
from cechcollapse.model.triangulation import build_star_covering

logger = logging.getLogger(__name__)

STAGES = (
    "sample",
    "conditions",
    "cech",
    "sweep",
    "triangulate",
    "niceness",
    "robust",
    "match",
    "evolve",
    "verify",
    "homology",
)

# Betti checks per verified trace
VERIFY_BETTI_CHECKS = 64


@dataclass
class RunReport:
    version: str
    config_digest: str
    config: dict
    completed: List[str] = field(default_factory=list)
    stages: Dict[str, dict] = field(default_factory=dict)
    checks: Dict[str, bool] = field(default_factory=dict)
    failed_stage: Optional[str] = None
    error: Optional[dict] = None

    @property
    def ok(self) -> bool:
        return self.failed_stage is None and all(self.checks.values())

    @property
    def exit_code(self) -> int:
        return 0 if self.ok else 1

    def to_dict(self):
        out = dict(self.__dict__)
        out.update(ok=self.ok, exit_code=self.exit_code)
        return out


class Pipeline(object):
    """Cech(P, alpha) to restricted Cech to the image of a triangulation nerve.

    Every stage records its numbers in the run report and writes its
    artifacts to the run directory before the next one starts, so a failed
    run still leaves everything computed up to the failing stage.
    """

    def __init__(self, config: ScenarioConfig, out: Optional[RunDirectory] = None):
        self.config = config
        self.solver = config.solver
        self.out = out or RunDirectory(config.output_dir)
        self.report = RunReport(
            version=cechcollapse.__version__,
            config_digest=config.digest(),
            config=config.to_dict(),
        )

    @contextmanager
    def stage(self, name):
        logger.info(f"stage {name}")
        self.report.stages[name] = {}
        try:
            yield self.report.stages[name]
        except CechCollapseError as e:
            self.report.failed_stage = name
            self.report.error = dict(e.to_dict(), stage=name)
            logger.error(f"stage {name} failed: {e}")
            raise
        self.report.completed.append(name)

    def check(self, name, passed):
        self.report.checks[name] = bool(passed)
        if not passed:
            logger.warning(f"check {name} failed")

    def run(self) -> RunReport:
        try:
            for name in STAGES:
                with self.stage(name) as record:
                    getattr(self, "_" + name)(record)
        except CechCollapseError:
            pass
        finally:
            self.out.json("report.json", self.report)
            self.out.manifest(config_digest=self.report.config_digest, version=self.report.version)
        logger.info(f"run finished with exit code {self.report.exit_code}")
        return self.report

    def _sample(self, record):
        cfg = self.config
        self.shape = build_shape(cfg.shape, **cfg.shape_params)
        spec = SampleSpec(
            target_epsilon=cfg.target_epsilon, mode=cfg.sample_mode, seed=cfg.seed, n=cfg.n_points, noise=cfg.noise
        )
        self.P, self.epsilon = self.shape.sample(spec)
        if cfg.alpha == "auto":
            self.alpha = CANONICAL_ALPHA_FACTOR * self.epsilon
        else:
            self.alpha = float(cfg.alpha)
        record.update(points=len(self.P), epsilon=self.epsilon, alpha=self.alpha, reach=self.shape.reach())
        self.out.points("points.csv", PointCloud(self.P), self.epsilon, self.shape.reach())

    def _conditions(self, record):
        try:
            cond = check_sampling_conditions(self.epsilon, self.alpha, self.shape.reach())
        except ComplexDomain as e:
            if not self.config.force:
                raise
            record.update(domain_error=str(e))
            self.beta = None
            return
        record.update(cond.to_dict())
        self.beta = cond.beta
        if not cond.passed:
            if not self.config.force:
                raise PreconditionViolated(
                    "sampling conditions fail: " + "; ".join(cond.violated()), **cond.to_dict()
                )
            logger.warning("sampling conditions fail; forced run")

    def _cech(self, record):
        self.cech_result = build_cech(self.P, self.alpha, self.config.dim_cap, self.solver.tol, return_result=True)
        self.cech = self.cech_result.complex
        record.update(
            f_vector=self.cech.f_vector(),
            betti=betti_numbers_mod2(self.cech),
            ties=len(self.cech_result.ties),
        )
        self.check("cech_in_rips", check_cech_in_rips(self.P, self.alpha, self.config.dim_cap, self.solver.tol))
        self.out.complex("cech.cplx", self.cech, f"Cech complex at alpha={self.alpha!r}")

    def _sweep(self, record):
        sweep = RestrictionSweep(
            self.shape,
            self.P,
            self.alpha,
            tol=self.solver.solver_tol,
            epsilon=self.epsilon,
            dim_cap=self.config.dim_cap,
            force=self.config.force,
            event_tol=self.solver.event_tol,
            max_iter=self.solver.max_iter,
            cech_result=self.cech_result,
        )
        self.restricted, self.sweep_trace, sweep_report = sweep.run()
        record.update(sweep_report.to_dict(), trace_digest=self.sweep_trace.digest(), steps=len(self.sweep_trace))
        self.out.complex("restricted.cplx", self.restricted, f"restricted Cech complex at alpha={self.alpha!r}")
        self.out.json("sweep_trace.json", dict(self.sweep_trace.to_dict(), digest=self.sweep_trace.digest()))

    def _triangulate(self, record):
        cfg = self.config
        self.bundle = build_template(cfg.template, cfg.template_n, shape=self.shape)
        build_star_covering(self.bundle, cfg.samples_per_cell)
        record.update(
            template=cfg.template,
            n=cfg.template_n,
            f_vector=self.bundle.T.f_vector(),
            betti=betti_numbers_mod2(self.bundle.T),
            rho=self.bundle.rho,
        )
        self.out.complex("T.cplx", self.bundle.T, f"{cfg.template}(n={cfg.template_n})")
        self.out.json("covering.json", self.bundle.covering_to_dict())

    def _niceness(self, record):
        rho = self.bundle.rho
        if rho >= self.alpha:
            raise PreconditionViolated(
                f"cell radius {rho:.6g} is not below alpha {self.alpha:.6g}", rho=rho, alpha=self.alpha
            )
        delta = self.config.delta if self.config.delta is not None else cap_height(self.alpha, rho)
        # claimed bound just above the measured radius
        claimed = rho * (1 + 1e-9) + 1e-12
        record.update(rho=claimed, delta=delta)
        self.check("robust_sufficient", check_robust_covering_sufficient(claimed, delta, self.alpha))
        if not self.config.check_niceness:
            return
        nice = check_nice_triangulation(self.bundle, self.shape, claimed, delta, self.config.probe_density)
        record.update(nice.to_dict())
        self.check("nice_triangulation", nice.passed)

    def _robust(self, record):
        direct = check_robust_covering_direct(self.bundle.covering, self.shape, self.alpha, self.solver.tol)
        record.update(direct.to_dict())
        if not direct.robust:
            raise PreconditionViolated(
                f"covering is {direct.verdict} at alpha={self.alpha:.6g}", verdict=str(direct.verdict)
            )

    def _match(self, record):
        self.vertex_map = match_vertices_to_samples(
            self.bundle, self.P, self.alpha, self.epsilon, force=self.config.force
        )
        record.update(vertices=len(self.vertex_map))
        self.out.json("vertex_map.json", self.vertex_map)

    def _evolve(self, record):
        cfg = self.config
        self.family = build_evolving_family(
            self.shape,
            self.bundle.covering,
            self.P,
            self.alpha,
            self.vertex_map,
            dirs=cfg.directions,
            margin=cfg.split_margin,
            tol=self.solver.tol,
        )
        expected = covering_nerve_image(self.family, self.solver.tol)
        steps = cfg.steps
        try:
            engine, (self.final, self.evolve_trace) = self._evolving(steps, expected)
        except StepTooCoarse as e:
            steps = e.suggested_steps
            logger.warning(f"retrying the evolving collapse with {steps} steps")
            engine, (self.final, self.evolve_trace) = self._evolving(steps, expected)
        self.evolve_start = engine.start
        record.update(engine.report.to_dict(), steps=steps, trace_digest=self.evolve_trace.digest())
        self.check("evolve_start_is_restricted", self.evolve_start == self.restricted)
        coverage = check_final_coverage(self.family, self.shape.grid(cfg.probe_density), self.solver.tol)
        record.update(coverage=coverage.to_dict())
        self.check("final_coverage", coverage.passed)
        self.out.complex("final.cplx", self.final, "image of the covering nerve")
        self.out.json("evolve_trace.json", dict(self.evolve_trace.to_dict(), digest=self.evolve_trace.digest()))

    def _evolving(self, steps, expected):
        engine = EvolvingCollapse(
            self.family,
            steps,
            tol=self.solver.solver_tol,
            max_depth=self.config.max_depth,
            dim_cap=self.config.dim_cap,
            expected=expected,
        )
        return engine, engine.run()

    def _verify(self, record):
        for name, start, trace, end in (
            ("sweep", self.cech, self.sweep_trace, self.restricted),
            ("evolve", self.evolve_start, self.evolve_trace, self.final),
        ):
            every = max(1, math.ceil(len(trace) / VERIFY_BETTI_CHECKS))
            verdict = verify_trace(start, trace, expected_end=end, betti_every=every)
            record[name] = verdict.to_dict()
            self.check(f"{name}_trace", verdict.ok)

    def _homology(self, record):
        betti = {
            "cech": betti_numbers_mod2(self.cech),
            "restricted": betti_numbers_mod2(self.restricted),
            "final": betti_numbers_mod2(self.final),
            "T": betti_numbers_mod2(self.bundle.T),
        }
        record.update(betti=betti)
        self.check("betti_preserved", all(same_betti(b, betti["T"]) for b in betti.values()))
        self.check("isomorphic_to_T", are_isomorphic_under_map(self.bundle.T, self.final, self.vertex_map))
        if self.bundle.T.dimension == 1:
            self.check("cycle_graph", is_cycle_graph(self.final))
        elif self.bundle.T.dimension == 2 and self.config.template != "grid":
            self.check("closed_surface", is_closed_surface(self.final))


def run_pipeline(config: ScenarioConfig) -> RunReport:
    """Run every stage of a scenario; the report's exit_code is 0 iff all checks pass."""
    return Pipeline(config).run()
