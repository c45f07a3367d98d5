# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.spatial import cKDTree

from cechcollapse.component.alpha_hull import (
    HullVerdict,
    cap_height,
    check_lemma_ball_inclusion,
    distance_to_hull,
    hull_membership_sandwich,
    ray_extreme_clenchers,
    separating_clencher,
    sphere_directions,
)
from cechcollapse.component.miniball import miniball

logger = logging.getLogger(__name__)

# witnesses kept per report
MAX_WITNESSES = 10

# medial points of an arc closer than this to it count as a reach violation
REACH_THRESHOLD = 1 - 1e-3


@dataclass
class ProbeReport:
    name: str
    trials: int
    seed: int
    hits: Dict[str, int] = field(default_factory=dict)
    violations: int = 0
    witnesses: List[dict] = field(default_factory=list)
    extreme: Optional[float] = None

    @property
    def passed(self) -> bool:
        return self.violations == 0

    def record(self, witness: dict):
        self.violations += 1
        if len(self.witnesses) < MAX_WITNESSES:
            self.witnesses.append(witness)

    def hit(self, key: str):
        self.hits[key] = self.hits.get(key, 0) + 1

    def to_dict(self):
        out = dict(self.__dict__)
        out["passed"] = self.passed
        return out


def _unit_ball(rng, count, dim):
    g = rng.normal(size=(count, dim))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    return g * rng.uniform(0.0, 1.0, size=(count, 1)) ** (1.0 / dim)


def _configuration(rng, dim):
    X = _unit_ball(rng, int(rng.integers(2, 7)), dim)
    ball = miniball(X)
    alpha = rng.uniform(ball.radius, 3 * ball.radius)
    return X, ball, alpha


def monte_carlo_ball_inclusion(trials: int, dim: int, seed: int = 0, tol: float = 1e-9) -> ProbeReport:
    """Random X, alpha and z; neither ball-inclusion implication may fail.

    Half of the centres are drawn from B(c, alpha - rho) so that the first
    antecedent is exercised, the rest from B(c, alpha).
    """
    rng = np.random.default_rng(seed)
    report = ProbeReport("ball-inclusion", trials, seed)
    for trial in range(trials):
        X, ball, alpha = _configuration(rng, dim)
        if ball.radius <= 0:
            continue
        reach = alpha - ball.radius if trial % 2 == 0 else alpha
        z = ball.center + reach * _unit_ball(rng, 1, dim)[0]
        check = check_lemma_ball_inclusion(X, z, alpha, tol)
        if check.antecedent_i:
            report.hit("i")
        if check.antecedent_ii:
            report.hit("ii")
        held_i, held_ii = check.holds
        if not (held_i and held_ii):
            report.record({"X": X.tolist(), "z": z.tolist(), "alpha": alpha, "holds": [held_i, held_ii]})
    logger.info(f"ball inclusion in R^{dim}: {trials} trials, {report.violations} violations")
    return report


def monte_carlo_hull_bound(
    trials: int, dim: int, seed: int = 0, queries: int = 4, tol: float = 1e-9
) -> ProbeReport:
    """Outside verdicts of the hull sandwich must come with a separating clencher.

    A query certified Outside by the cap bound is separated by the
    ray-extreme clencher opposite to the outward hull normal, or by a
    searched one; an Inside query must not be separated by any sampled
    clencher.
    """
    rng = np.random.default_rng(seed)
    report = ProbeReport("hull-bound", trials, seed)
    directions = sphere_directions(dim, 16 * dim)
    for _ in range(trials):
        X, ball, alpha = _configuration(rng, dim)
        if ball.radius <= 0 or alpha <= ball.radius * (1 + 1e-9):
            continue
        delta = cap_height(alpha, ball.radius)
        radii = rng.uniform(0.0, ball.radius + 2 * delta, size=queries)
        for q in ball.center + radii[:, None] * _unit_ball(rng, queries, dim):
            verdict = hull_membership_sandwich(X, alpha, q, tol)
            report.hit(str(verdict))
            if verdict is HullVerdict.INSIDE:
                Z = ray_extreme_clenchers(X, alpha, directions)
                if np.any(np.linalg.norm(Z - q, axis=1) > alpha + 1e-7):
                    report.record({"X": X.tolist(), "q": q.tolist(), "alpha": alpha, "verdict": "Inside"})
                continue
            dist, nearest = distance_to_hull(X, q)
            if verdict is not HullVerdict.OUTSIDE or dist <= delta + tol:
                continue
            report.hit("outer-bound")
            normal = (q - nearest) / dist
            z = ray_extreme_clenchers(X, alpha, -normal[None], base=ball.center)[0]
            if np.linalg.norm(q - z) > alpha:
                report.hit("ray-separated")
                continue
            if separating_clencher(X, alpha, q, tol) is None:
                report.record(
                    {"X": X.tolist(), "q": q.tolist(), "alpha": alpha, "hull_distance": dist}
                )
    logger.info(f"hull bound in R^{dim}: {trials} trials, {report.violations} violations")
    return report


@dataclass
class ArcProbe:
    center: List[float]
    alpha: float
    arc_points: int
    medial_points: List[List[float]] = field(default_factory=list)
    min_distance: float = math.inf

    def to_dict(self):
        return dict(self.__dict__)


def reach_probe_circle_arc(
    z, alpha: float, grid_step: float = 0.02, arc_samples: int = 4096, refine: int = 40, window: float = 2.0
) -> ArcProbe:
    """Medial points of the arc A cap B(z, alpha) of the unit circle.

    The nearest-point map of the discretized arc is evaluated on a grid;
    neighbouring grid points whose nearest arc points are far apart bracket
    the medial axis, and each bracket is bisected down to a medial point.
    """
    z = np.asarray(z, dtype=float)
    theta = 2 * math.pi * np.arange(arc_samples) / arc_samples
    circle = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    arc = circle[np.linalg.norm(circle - z, axis=1) <= alpha]
    probe = ArcProbe(z.tolist(), alpha, len(arc))
    if len(arc) < 2:
        return probe
    tree = cKDTree(arc)
    spacing = 2 * math.sin(math.pi / arc_samples)
    jump = max(8 * spacing, 4 * grid_step)

    axis = np.arange(-window, window + grid_step / 2, grid_step)
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    grid = np.stack([gx, gy], axis=-1)
    _, nearest = tree.query(grid.reshape(-1, 2))
    nearest = nearest.reshape(gx.shape)

    pairs = []
    for shift in ((1, 0), (0, 1)):
        a = nearest[: nearest.shape[0] - shift[0], : nearest.shape[1] - shift[1]]
        b = nearest[shift[0] :, shift[1] :]
        far = np.linalg.norm(arc[a] - arc[b], axis=-1) > jump
        for i, j in zip(*np.nonzero(far)):
            pairs.append((grid[i, j], grid[i + shift[0], j + shift[1]]))

    for lo, hi in pairs:
        anchor = arc[tree.query(lo)[1]]
        for _ in range(refine):
            mid = 0.5 * (lo + hi)
            if np.linalg.norm(arc[tree.query(mid)[1]] - anchor) <= jump:
                lo = mid
            else:
                hi = mid
        # a fast but continuous turn of the nearest point closes up under bisection
        if np.linalg.norm(arc[tree.query(lo)[1]] - arc[tree.query(hi)[1]]) <= jump:
            continue
        m = 0.5 * (lo + hi)
        d, _ = tree.query(m)
        probe.medial_points.append(m.tolist())
        probe.min_distance = min(probe.min_distance, float(d))
    return probe


def monte_carlo_reach(
    trials: int, seed: int = 0, grid_step: float = 0.02, threshold: float = REACH_THRESHOLD
) -> ProbeReport:
    """Random balls meeting the unit circle; their arcs keep the circle's reach."""
    rng = np.random.default_rng(seed)
    report = ProbeReport("reach", trials, seed)
    for _ in range(trials):
        alpha = rng.uniform(0.0, 0.95)
        phi = rng.uniform(0.0, 2 * math.pi)
        r = 1.0 + rng.uniform(-alpha, alpha)
        z = r * np.array([math.cos(phi), math.sin(phi)])
        probe = reach_probe_circle_arc(z, alpha, grid_step)
        if probe.medial_points:
            report.hit("medial")
        report.extreme = probe.min_distance if report.extreme is None else min(report.extreme, probe.min_distance)
        if probe.min_distance < threshold:
            report.record(probe.to_dict())
    logger.info(f"reach probe: {trials} arcs, closest medial point {report.extreme}")
    return report
