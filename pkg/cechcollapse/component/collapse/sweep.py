# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, FrozenSet, List, Optional, Tuple

import numpy as np

from cechcollapse.component.builders import as_cloud, build_cech, build_restricted_cech
from cechcollapse.component.collapse_trace import CollapseTrace
from cechcollapse.component.errors import (
    CollapseViolation,
    ComplexDomain,
    PreconditionViolated,
    ToleranceNotMet,
)
from cechcollapse.component.homology import betti_numbers_mod2
from cechcollapse.component.minimax import ball_intersection_distance
from cechcollapse.component.shapes import as_tensor
from cechcollapse.component.simplicial_complex import Simplex, SimplicialComplex, boundary, simplex_key

logger = logging.getLogger(__name__)

# canonical sampling constant: epsilon < (3 - sqrt 8) r with alpha = (2 + sqrt 2) epsilon
CANONICAL_EPSILON_FACTOR = 3 - math.sqrt(8)
CANONICAL_ALPHA_FACTOR = 2 + math.sqrt(2)

# projected starts per simplex besides the miniball centre
EVENT_STARTS = 4


@dataclass
class SamplingReport:
    epsilon: float
    alpha: float
    r: float
    condition_i: bool
    margin_i: float
    condition_ii: bool
    margin_ii: float
    beta: float
    canonical_epsilon: bool
    canonical_alpha: bool

    @property
    def passed(self) -> bool:
        return self.condition_i and self.condition_ii

    def violated(self) -> List[str]:
        out = []
        if not self.condition_i:
            out.append(f"sqrt(2) alpha < r - epsilon fails by {-self.margin_i:.6g}")
        if not self.condition_ii:
            out.append(
                f"r - sqrt((r - epsilon)^2 - alpha^2) < alpha - epsilon fails by {-self.margin_ii:.6g}"
            )
        return out

    def to_dict(self):
        out = dict(self.__dict__)
        out["passed"] = self.passed
        return out


def check_sampling_conditions(epsilon: float, alpha: float, r: float) -> SamplingReport:
    """Conditions under which Cech(P, alpha) collapses to its restricted complex.

    (i) sqrt(2) alpha < r - epsilon and (ii) beta < alpha - epsilon with
    beta = r - sqrt((r - epsilon)^2 - alpha^2).
    """
    if min(epsilon, alpha, r) < 0:
        raise ValueError("epsilon, alpha and r must be non-negative")
    margin_i = (r - epsilon) - math.sqrt(2) * alpha
    if (r - epsilon) ** 2 < alpha ** 2 or r < epsilon:
        raise ComplexDomain(
            f"(r - epsilon)^2 < alpha^2: beta undefined (r={r}, epsilon={epsilon}, alpha={alpha})",
            margin_i=margin_i,
        )
    if math.isinf(r):
        # flat shapes: beta tends to epsilon as r grows
        beta = epsilon
    else:
        beta = r - math.sqrt((r - epsilon) ** 2 - alpha ** 2)
    margin_ii = (alpha - epsilon) - beta
    return SamplingReport(
        epsilon=epsilon,
        alpha=alpha,
        r=r,
        condition_i=margin_i > 0,
        margin_i=margin_i,
        condition_ii=margin_ii > 0,
        margin_ii=margin_ii,
        beta=beta,
        canonical_epsilon=epsilon < CANONICAL_EPSILON_FACTOR * r,
        canonical_alpha=abs(alpha - CANONICAL_ALPHA_FACTOR * epsilon) <= 1e-12 * max(1.0, alpha),
    )


@dataclass
class SweepEvent:
    t: float
    delta: FrozenSet[Simplex]
    sigma_min: Simplex
    sigma_max: Simplex
    witness: np.ndarray
    foot: np.ndarray
    group_minimal: int = 1

    def to_dict(self):
        return {
            "t": self.t,
            "sigma_min": list(self.sigma_min),
            "sigma_max": list(self.sigma_max),
            "delta": [list(s) for s in sorted(self.delta, key=simplex_key)],
            "witness": self.witness.tolist(),
            "foot": self.foot.tolist(),
            "group_minimal": self.group_minimal,
        }


@dataclass
class SweepReport:
    alpha: float
    beta: Optional[float]
    cech_f_vector: List[int]
    restricted_f_vector: List[int]
    events: List[SweepEvent] = field(default_factory=list)
    max_event_value: float = 0.0
    stage_a_margin: Optional[float] = None
    min_event_gap: Optional[float] = None
    conjunctions: int = 0
    sigma0_agreements: int = 0
    worst_boundary_residual: float = 0.0
    interior_margin: Optional[float] = None
    revalidation_error: float = 0.0
    betti_start: List[int] = field(default_factory=list)
    betti_end: List[int] = field(default_factory=list)
    snapshots: Dict[str, List[int]] = field(default_factory=dict)
    end_matches: bool = False
    ties: int = 0

    def to_dict(self):
        out = dict(self.__dict__)
        out["events"] = len(self.events)
        return out


def sweep_snapshot(start: SimplicialComplex, trace: CollapseTrace, t: float) -> SimplicialComplex:
    """K_t: the start complex after every step with event value above t."""
    K = start.copy()
    for step in trace:
        if step.event_value > t:
            K.collapse(step.sigma_min, step.event_value, step.witness)
    return K


def _event_values(shape, P, simplices, alpha, centers, tol, max_iter):
    """t_sigma = d(A, intersection of B(p, alpha)) with witnesses, batched by size."""
    by_size = defaultdict(list)
    for s in simplices:
        by_size[len(s)].append(s)
    out = {}
    for size in sorted(by_size):
        group = by_size[size]
        pts = np.stack([P.coords(s) for s in group])  # (B, k, d)
        projected = shape._project(as_tensor(pts[:, :EVENT_STARTS])).numpy()
        starts = np.concatenate([np.stack([centers[s] for s in group])[:, None], projected], axis=1)
        res = ball_intersection_distance(shape, pts, alpha, starts, tol=tol, max_iter=max_iter)
        for i, s in enumerate(group):
            out[s] = (
                float(res.distance[i]),
                res.point[i].numpy(),
                res.foot[i].numpy(),
                float(res.spread[i]),
                float(res.margin[i]),
            )
    return out


class RestrictionSweep(object):
    """Collapse Cech(P, alpha) onto the restricted Cech complex by sweeping t.

    Simplices disappear in decreasing order of t_sigma; each group of
    simplices sharing an event value is fired as elementary collapses,
    inclusion-minimal faces first in lexicographic order.
    """

    def __init__(
        self,
        shape,
        P,
        alpha: float,
        tol: float = 1e-7,
        epsilon: Optional[float] = None,
        dim_cap: Optional[int] = None,
        force: bool = False,
        event_tol: float = 1e-10,
        max_iter: int = 2000,
        revalidate: bool = True,
        cech_result=None,
    ):
        self.shape = shape
        self.P = as_cloud(P)
        self.alpha = alpha
        self.tol = tol
        self.epsilon = epsilon
        self.dim_cap = dim_cap
        self.force = force
        self.event_tol = event_tol
        self.max_iter = max_iter
        self.revalidate = revalidate
        self.cech_result = cech_result

    def _conditions(self) -> Optional[SamplingReport]:
        if self.epsilon is None:
            if not self.force:
                raise PreconditionViolated(
                    "no certified sampling epsilon: the sampling conditions cannot be checked", alpha=self.alpha
                )
            logger.warning("no sampling epsilon; forced run without the beta bound")
            return None
        try:
            cond = check_sampling_conditions(self.epsilon, self.alpha, self.shape.reach())
        except ComplexDomain:
            if self.force:
                logger.warning("sampling conditions outside their domain; forced run")
                return None
            raise
        if not cond.passed:
            if not self.force:
                raise PreconditionViolated(
                    "sampling conditions fail: " + "; ".join(cond.violated()), **cond.to_dict()
                )
            logger.warning("sampling conditions fail; forced run: " + "; ".join(cond.violated()))
        return cond

    def run(self) -> Tuple[SimplicialComplex, CollapseTrace, SweepReport]:
        cond = self._conditions()
        beta = None if cond is None else cond.beta
        alpha, tol, P = self.alpha, self.tol, self.P

        cech_result = self.cech_result or build_cech(P, alpha, self.dim_cap, return_result=True)
        cech = cech_result.complex
        simplices = cech.sorted_simplices()
        restricted = build_restricted_cech(self.shape, P, alpha, self.dim_cap, tol, cech=cech)

        report = SweepReport(
            alpha=alpha,
            beta=beta,
            cech_f_vector=cech.f_vector(),
            restricted_f_vector=restricted.f_vector(),
            ties=len(cech_result.ties),
        )
        vanishing = [s for s in simplices if s not in restricted]
        values = _event_values(
            self.shape, P, vanishing, alpha, cech_result.witnesses, self.event_tol, self.max_iter
        )
        for s, (t, x, _, spread, margin) in values.items():
            if spread > tol:
                raise ToleranceNotMet(
                    f"event value of {s} disagrees across starts by {spread:.3g}", simplex=s, spread=spread
                )
            if t <= tol:
                raise ToleranceNotMet(
                    f"{s} is outside the restricted complex but its balls meet the shape",
                    simplex=s,
                    t=t,
                )
        t_of = {s: values[s][0] for s in vanishing}
        report.max_event_value = max(t_of.values(), default=0.0)
        if beta is not None:
            report.stage_a_margin = beta + tol - report.max_event_value
            if report.stage_a_margin < 0:
                worst = max(t_of, key=t_of.get)
                raise CollapseViolation(
                    f"event value {t_of[worst]:.6g} of {worst} exceeds beta={beta:.6g}",
                    simplex=worst,
                    t=t_of[worst],
                    beta=beta,
                )

        K = cech.copy()
        report.betti_start = betti_numbers_mod2(K)
        trace = CollapseTrace()
        order = sorted(vanishing, key=lambda s: (-t_of[s], simplex_key(s)))
        pending = set(vanishing)
        cursor = 0
        while pending:
            while order[cursor] not in pending:
                cursor += 1
            t_cur = t_of[order[cursor]]
            group = set()
            for s in order[cursor:]:
                if t_of[s] < t_cur - tol:
                    break
                if s in pending:
                    group.add(s)
            minimal = sorted(
                (s for s in group if not any(f in group for f in boundary(s))), key=simplex_key
            )
            if len(minimal) > 1:
                report.conjunctions += 1
            fired = None
            for sigma_min in minimal:
                delta = K.cofaces(sigma_min)
                if not delta <= group or K.free_coface(sigma_min) is None:
                    continue
                fired = self._fire(K, sigma_min, t_of[sigma_min], values[sigma_min], report, len(minimal))
                break
            if fired is None:
                raise CollapseViolation(
                    f"no free pair among {len(minimal)} minimal simplices vanishing at t={t_cur:.6g}",
                    t=t_cur,
                    minimal=minimal,
                    group=sorted(group, key=simplex_key),
                )
            trace.append(fired)
            pending -= fired.removed

        report.min_event_gap = trace.min_event_gap()
        report.betti_end = betti_numbers_mod2(K)
        report.end_matches = K == restricted
        if not report.end_matches:
            raise CollapseViolation(
                "sweep ended on a complex different from the restricted Cech complex",
                extra=sorted(set(K.simplices) - set(restricted.simplices), key=simplex_key),
                missing=sorted(set(restricted.simplices) - set(K.simplices), key=simplex_key),
            )
        report.snapshots = self.snapshots(cech, trace, beta)
        logger.info(
            f"sweep: {len(trace)} collapses, {report.conjunctions} conjunctions, "
            f"max event {report.max_event_value:.6g}, min gap {report.min_event_gap}"
        )
        self.cech = cech
        return K, trace, report

    def _fire(self, K, sigma_min, t, solved, report, group_minimal=1):
        _, x, foot, _, _ = solved
        alpha, tol = self.alpha, self.tol
        if self.revalidate:
            again = ball_intersection_distance(
                self.shape,
                self.P.coords(sigma_min)[None],
                alpha,
                x[None, None],
                tol=self.event_tol,
                max_iter=self.max_iter,
            )
            drift = abs(float(again.distance[0]) - t)
            report.revalidation_error = max(report.revalidation_error, drift)
            if drift > tol:
                raise ToleranceNotMet(
                    f"event value of {sigma_min} moved by {drift:.3g} on re-solve",
                    simplex=sigma_min,
                    t=t,
                )
        dists = np.linalg.norm(self.P.points - x, axis=1)
        band = 1e-6 * max(1.0, alpha)
        residual = float(np.abs(dists[list(sigma_min)] - alpha).max())
        report.worst_boundary_residual = max(report.worst_boundary_residual, residual)
        if residual > band:
            raise CollapseViolation(
                f"witness of {sigma_min} is off the boundary spheres by {residual:.3g}",
                simplex=sigma_min,
                witness=x,
            )
        sigma0 = tuple(int(i) for i in np.flatnonzero(np.abs(dists - alpha) <= band))
        if sigma0 == sigma_min:
            report.sigma0_agreements += 1
        interior = alpha - float(dists.min())
        report.interior_margin = (
            interior if report.interior_margin is None else min(report.interior_margin, interior)
        )
        if interior <= 0:
            raise CollapseViolation(
                f"witness of {sigma_min} is interior to no ball", simplex=sigma_min, witness=x
            )
        top = K.free_coface(sigma_min)
        certain = set(int(i) for i in np.flatnonzero(dists <= alpha - band))
        possible = set(int(i) for i in np.flatnonzero(dists <= alpha + band))
        if not certain <= set(top) <= possible:
            if self.dim_cap is not None and len(possible) > self.dim_cap + 1:
                raise CollapseViolation(
                    f"interval of {sigma_min} truncated by dim_cap={self.dim_cap}",
                    simplex=sigma_min,
                    dim_cap=self.dim_cap,
                )
            raise CollapseViolation(
                f"free coface {top} of {sigma_min} disagrees with the balls holding the witness",
                simplex=sigma_min,
                witness=x,
            )
        step = K.collapse(sigma_min, event_value=t, witness=x)
        report.events.append(
            SweepEvent(t, step.removed, step.sigma_min, step.sigma_max, x, foot, group_minimal)
        )
        logger.debug(f"fired {sigma_min} -> {top} at t={t:.9g}")
        return step

    def snapshots(self, cech, trace, beta) -> Dict[str, List[int]]:
        marks = {"0+": 0.0}
        if beta is not None:
            marks = {"beta": beta, "beta/2": beta / 2, "0+": 0.0}
        return {
            name: betti_numbers_mod2(sweep_snapshot(cech, trace, t)) for name, t in marks.items()
        }


def sweep_restrict_cech(
    shape,
    P,
    alpha: float,
    tol: float = 1e-7,
    epsilon: Optional[float] = None,
    dim_cap: Optional[int] = None,
    force: bool = False,
):
    """Collapse Cech(P, alpha) to the restricted Cech complex of the shape.

    Returns the end complex, the collapse trace and the sweep report.
    """
    return RestrictionSweep(shape, P, alpha, tol, epsilon, dim_cap, force).run()
