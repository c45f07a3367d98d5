# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import enum
import logging
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np
from scipy.spatial import ConvexHull, cKDTree
from scipy.spatial.distance import pdist

try:
    from scipy.spatial import QhullError
except ImportError:
    from scipy.spatial.qhull import QhullError

from cechcollapse.component.alpha_hull import HullVerdict, cap_height, distance_to_hull, hull_membership_sandwich
from cechcollapse.component.builders import as_cloud, build_nerve
from cechcollapse.component.errors import ContainmentFail, MatchCollision, PreconditionViolated, ProbeTooCoarse
from cechcollapse.component.miniball import miniball
from cechcollapse.component.simplicial_complex import SimplicialComplex, simplex_key

logger = logging.getLogger(__name__)

# lattice depth of the probes on every simplex of T for condition (i)
FACE_PROBE_DEPTH = 6

# probes of A used by condition (iii) when no density is given
DEFAULT_PROBE_DENSITY = 4000


def hull_vertices(X: np.ndarray) -> np.ndarray:
    """Vertices of Conv X, or X itself when the hull is degenerate."""
    X = np.atleast_2d(X)
    if len(X) <= X.shape[1] + 1:
        return X
    try:
        return X[ConvexHull(X).vertices]
    except (QhullError, ValueError):
        return X


@dataclass
class NicenessReport:
    rho: float
    rho_measured: float
    delta_tested: float
    condition_i: bool
    condition_ii: bool
    condition_iii: bool
    margin_ii: float
    delta_max: float
    resolution: float
    failures_i: List[dict] = field(default_factory=list)
    failures_ii: List[dict] = field(default_factory=list)
    failures_iii: List[dict] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.condition_i and self.condition_ii and self.condition_iii

    @property
    def margin_iii(self) -> float:
        return self.delta_max - self.delta_tested

    @property
    def eta0(self) -> float:
        return self.delta_tested / self.rho_measured if self.rho_measured > 0 else math.inf

    def to_dict(self):
        out = dict(self.__dict__)
        out.update(passed=self.passed, margin_iii=self.margin_iii, eta0=self.eta0)
        return out


def check_nice_triangulation(
    bundle,
    shape,
    rho: float,
    delta: float,
    probe_density: Optional[int] = None,
    tol: float = 1e-9,
) -> NicenessReport:
    """Probe the three niceness conditions of a triangulation bundle.

    (i) h(sigma) is covered by the cells of its vertices, (ii) every cell
    sits in the open ball B(h(v), rho) and (iii) points of A within delta of
    Conv C_v lie in h(Star(v, T)). Condition (iii) also yields the largest
    admissible delta seen by the probes.
    """
    if not bundle.covering:
        raise ValueError("bundle has no covering; run build_star_covering first")
    cells = {c.id: c for c in bundle.covering}

    failures_i = []
    for s in bundle.T.sorted_simplices():
        pts = bundle.face_points(s, FACE_PROBE_DEPTH)
        covered = np.zeros(len(pts), dtype=bool)
        for v in s:
            covered |= bundle.star_membership(v, pts, tol)
        for y in pts[~covered]:
            failures_i.append({"simplex": list(s), "point": y.tolist()})

    failures_ii = []
    rho_measured = 0.0
    for v, cell in sorted(cells.items()):
        radius = float(np.linalg.norm(cell.samples - bundle.vertex_positions[v], axis=1).max())
        rho_measured = max(rho_measured, radius)
        if radius >= rho:
            failures_ii.append({"vertex": v, "radius": radius, "margin": rho - radius})

    probes = shape.grid(probe_density or DEFAULT_PROBE_DENSITY)
    tree = cKDTree(probes)
    gaps, _ = tree.query(probes, k=2)
    resolution = float(gaps[:, 1].max())
    interior = bundle.params.get("interior_vertices", bundle.T.vertices)
    failures_iii = []
    delta_max = math.inf
    for v in interior:
        X = hull_vertices(cells[v].samples)
        hv = bundle.vertex_positions[v]
        R = float(np.linalg.norm(X - hv, axis=1).max())
        near = np.array(tree.query_ball_point(hv, R + max(delta, R) + tol), dtype=int)
        if not len(near):
            continue
        Y = probes[near]
        in_star = bundle.in_vertex_star(v, Y, tol)
        for y in Y[~in_star]:
            d, _ = distance_to_hull(X, y)
            delta_max = min(delta_max, d)
            if d <= delta:
                failures_iii.append({"vertex": v, "point": y.tolist(), "hull_distance": d})

    report = NicenessReport(
        rho=rho,
        rho_measured=rho_measured,
        delta_tested=delta,
        condition_i=not failures_i,
        condition_ii=not failures_ii,
        condition_iii=not failures_iii,
        margin_ii=rho - rho_measured,
        delta_max=delta_max,
        resolution=resolution,
        failures_i=failures_i,
        failures_ii=failures_ii,
        failures_iii=failures_iii,
    )
    if report.condition_iii and report.margin_iii < resolution:
        raise ProbeTooCoarse(
            f"condition (iii) margin {report.margin_iii:.3g} below probe spacing {resolution:.3g}",
            margin=report.margin_iii,
            resolution=resolution,
        )
    logger.info(
        f"niceness of {bundle.name}(n={bundle.n}): (i) {report.condition_i}, (ii) {report.condition_ii}, "
        f"(iii) {report.condition_iii}; rho {rho_measured:.6g}, delta_max {delta_max:.6g}"
    )
    return report


def check_robust_covering_sufficient(rho: float, delta: float, alpha: float) -> bool:
    """rho <= alpha and alpha - sqrt(alpha^2 - rho^2) <= delta."""
    if min(rho, delta, alpha) < 0:
        raise ValueError("rho, delta and alpha must be non-negative")
    if rho > alpha:
        return False
    return cap_height(alpha, rho) <= delta


class RobustVerdict(enum.Enum):
    ROBUST = "Robust"
    NOT_ROBUST = "NotRobust"
    INDETERMINATE = "Indeterminate"

    def __str__(self):
        return self.value


@dataclass
class RobustCoveringReport:
    verdict: RobustVerdict
    radii_ok: bool
    worst_radius_margin: float
    cell_nerve: List[int]
    hull_nerve_certain: List[int]
    hull_nerve_possible: List[int]
    witnesses: List[dict] = field(default_factory=list)
    undecided: List[List[int]] = field(default_factory=list)

    @property
    def robust(self) -> bool:
        return self.verdict is RobustVerdict.ROBUST

    def to_dict(self):
        out = dict(self.__dict__)
        out["verdict"] = str(self.verdict)
        return out


def check_robust_covering_direct(
    covering,
    shape,
    alpha: float,
    tol: float = 1e-9,
    probe_density: Optional[int] = None,
) -> RobustCoveringReport:
    """Compare Nerve(C) with the nerve of {A cap Hull_alpha(C_v)} on probes of A.

    Probes are the cell samples plus an optional grid of the shape. Each
    hull membership is sandwiched, giving a certain and a possible hull
    nerve; the covering is robust when the possible nerve adds nothing to
    Nerve(C), and not robust when the certain one does.
    """
    cells = list(covering)
    X = [hull_vertices(c.samples) for c in cells]
    radii = np.array([miniball(x).radius for x in X])
    margins = alpha - radii
    radii_ok = bool(np.all(margins > tol * max(1.0, alpha)))
    nerve = build_nerve(cells, tol)
    if not radii_ok:
        logger.warning(f"{int((margins <= 0).sum())} cells do not fit in an open ball of radius alpha")

    probes = [(y, i) for i, c in enumerate(cells) for y in c.samples]
    if probe_density:
        probes += [(y, None) for y in shape.grid(probe_density)]
    anchors = np.stack([c.anchor for c in cells])
    reach = max(
        float(np.linalg.norm(c.samples - c.anchor, axis=1).max()) + cap_height(alpha, min(r, alpha))
        for c, r in zip(cells, radii)
    )
    tree = cKDTree(anchors)
    ids = [c.id for c in cells]

    certain = SimplicialComplex()
    possible = SimplicialComplex()
    for s in nerve.maximal_simplices:
        certain.insert_closure(s)
        possible.insert_closure(s)
    witnesses = []
    for y, own in probes:
        sure, maybe = set(), set()
        if own is not None:
            sure.add(ids[own])
        for j in tree.query_ball_point(y, reach + tol):
            # oversized cells have no alpha-hull; radii_ok already fails them
            if j == own or margins[j] <= 0:
                continue
            verdict = hull_membership_sandwich(X[j], alpha, y, tol)
            if verdict is HullVerdict.INSIDE:
                sure.add(ids[j])
            elif verdict is HullVerdict.UNKNOWN:
                maybe.add(ids[j])
        if not sure:
            continue
        s = tuple(sorted(sure))
        if s not in nerve:
            witnesses.append({"simplex": list(s), "point": np.asarray(y).tolist()})
        certain.insert_closure(s)
        possible.insert_closure(tuple(sorted(sure | maybe)))

    extra = set(possible.simplices) - set(nerve.simplices)
    if witnesses or not radii_ok:
        verdict = RobustVerdict.NOT_ROBUST
    elif extra:
        verdict = RobustVerdict.INDETERMINATE
    else:
        verdict = RobustVerdict.ROBUST
    report = RobustCoveringReport(
        verdict=verdict,
        radii_ok=radii_ok,
        worst_radius_margin=float(margins.min()),
        cell_nerve=nerve.f_vector(),
        hull_nerve_certain=certain.f_vector(),
        hull_nerve_possible=possible.f_vector(),
        witnesses=witnesses,
        undecided=[list(s) for s in sorted(extra, key=simplex_key)],
    )
    logger.info(f"robust covering check at alpha={alpha:.6g}: {verdict}")
    return report


def vertex_separation(bundle) -> float:
    """e(T, h) = half the smallest distance between vertex images."""
    return 0.5 * float(pdist(bundle.vertex_positions).min())


def matching_margin(bundle, alpha: float, rho: Optional[float] = None) -> float:
    """epsilon_0 = min(e(T, h), alpha - rho); samples need epsilon below it."""
    rho = bundle.rho if rho is None else rho
    assert rho is not None, "rho is measured by build_star_covering"
    return min(vertex_separation(bundle), alpha - rho)


def match_vertices_to_samples(
    bundle, P, alpha: float, epsilon: Optional[float] = None, force: bool = False
) -> Dict[int, int]:
    """Map each vertex v to a sample point closest to h(v).

    The map must be injective and every cell C_v must lie in the open ball
    B(f(v), alpha). A sampling epsilon at or above the matching margin is
    refused unless `force` is set.
    """
    P = as_cloud(P)
    if epsilon is not None and bundle.rho is not None:
        eps0 = matching_margin(bundle, alpha)
        if epsilon >= eps0:
            if not force:
                raise PreconditionViolated(
                    f"epsilon {epsilon:.6g} is not below the matching margin {eps0:.6g}",
                    epsilon=epsilon,
                    matching_margin=eps0,
                )
            logger.warning(f"epsilon {epsilon:.6g} is not below the matching margin {eps0:.6g}; forced")
    vertices = bundle.T.vertices
    _, idx = cKDTree(P.points).query(bundle.vertex_positions[vertices])
    f = {int(v): int(p) for v, p in zip(vertices, idx)}

    owners: Dict[int, List[int]] = {}
    for v, p in f.items():
        owners.setdefault(p, []).append(v)
    collisions = {p: vs for p, vs in owners.items() if len(vs) > 1}
    if collisions:
        raise MatchCollision(
            f"{len(collisions)} sample points are closest to several vertices",
            collisions=collisions,
        )

    margins = {}
    for cell in bundle.covering:
        far = float(np.linalg.norm(cell.samples - P[f[cell.id]], axis=1).max())
        margins[cell.id] = alpha - far
    failing = {v: m for v, m in margins.items() if m <= 0}
    if failing:
        raise ContainmentFail(
            f"{len(failing)} cells are not inside the open ball of radius alpha around their match",
            margins=failing,
        )
    logger.info(
        f"matched {len(f)} vertices; worst containment margin {min(margins.values(), default=math.inf):.6g}"
    )
    return f
