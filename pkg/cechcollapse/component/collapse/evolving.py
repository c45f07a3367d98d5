# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import logging
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from cechcollapse.component.alpha_hull import DIRECTIONS_PER_DIM, ray_extreme_clenchers, sphere_directions
from cechcollapse.component.builders import Cell, _expand, as_cloud, build_nerve, neighbourhood_graph
from cechcollapse.component.collapse.greedy import serialize_removal
from cechcollapse.component.collapse_trace import CollapseTrace
from cechcollapse.component.errors import (
    CollapseViolation,
    NonCollapseTransition,
    PreconditionViolated,
    StepTooCoarse,
    ToleranceNotMet,
)
from cechcollapse.component.homology import betti_numbers_mod2, same_betti
from cechcollapse.component.minimax import ShapeMinimax
from cechcollapse.component.simplicial_complex import Simplex, SimplicialComplex, simplex_key

logger = logging.getLogger(__name__)

# largest centers x batch product handed to one minimax call
CENTER_BUDGET = 1 << 18


@dataclass
class EvolvingFamily:
    """D_p(t) = A cap the balls B((1 - t) p + t z, alpha) over z in Z(p).

    Matched points p = f(v) move their balls toward the clenchers of C_v;
    unmatched points split into two balls drifting apart along e_1 until
    they no longer meet.
    """

    shape: object
    points: np.ndarray
    alpha: float
    vertex_map: Dict[int, int]
    schedules: Dict[int, np.ndarray]
    cells: Dict[int, Cell] = field(default_factory=dict)
    containment: Dict[int, float] = field(default_factory=dict)
    split_margin: float = 0.0

    @property
    def matched(self) -> Dict[int, int]:
        return {p: v for v, p in self.vertex_map.items()}

    def centers(self, p: int, t: float) -> np.ndarray:
        return (1.0 - t) * self.points[p] + t * self.schedules[p]

    def simplex_centers(self, simplex, t: float) -> np.ndarray:
        return np.concatenate([self.centers(p, t) for p in simplex])

    def contains(self, p: int, x, t: float, tol: float = 0.0) -> np.ndarray:
        """Membership of shape points x in D_p(t)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        c = self.centers(p, t)
        d = np.linalg.norm(x[:, None, :] - c[None], axis=-1).max(-1)
        return d <= self.alpha + tol

    def vanishing_time(self, p: int) -> Optional[float]:
        """t at which the two balls of an unmatched point stop meeting."""
        if p in self.matched:
            return None
        return self.alpha / (self.alpha + self.split_margin)

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "vertex_map": {str(v): int(p) for v, p in sorted(self.vertex_map.items())},
            "schedule_sizes": {str(p): len(z) for p, z in sorted(self.schedules.items())},
            "containment": {str(v): m for v, m in sorted(self.containment.items())},
            "split_margin": self.split_margin,
        }


def build_evolving_family(
    shape,
    covering: List[Cell],
    P,
    alpha: float,
    f: Dict[int, int],
    dirs: Optional[int] = None,
    margin: Optional[float] = None,
    tol: float = 1e-9,
) -> EvolvingFamily:
    """Center schedules Z(p) for every sample point.

    Z(p) for p = f(v) is the boundary of the clencher set of C_v sampled by
    `dirs` rays from p; p lies in that set because C_v is inside B(p, alpha).
    Every other point gets p +- (alpha + margin) e_1.
    """
    P = as_cloud(P)
    d = P.ambient_dim
    dirs = dirs or DIRECTIONS_PER_DIM * d
    margin = 0.5 * alpha if margin is None else margin
    assert margin > 0, "unmatched balls must end disjoint"
    images = list(f.values())
    if len(set(images)) != len(images):
        raise PreconditionViolated("vertex map is not injective", vertex_map=f)
    cells = {c.id: c for c in covering}
    missing = [v for v in f if v not in cells]
    if missing:
        raise PreconditionViolated(f"vertex map references unknown cells {missing}", missing=missing)

    containment = {}
    for v, p in f.items():
        far = float(np.linalg.norm(cells[v].samples - P[p], axis=1).max())
        containment[v] = alpha - far
    offending = sorted((v, m) for v, m in containment.items() if m <= tol * max(1.0, alpha))
    if offending:
        raise PreconditionViolated(
            f"{len(offending)} cells are not inside the open ball B(f(v), alpha)",
            offending=offending,
        )

    directions = sphere_directions(d, dirs)
    schedules = {}
    for v, p in f.items():
        schedules[p] = ray_extreme_clenchers(cells[v].samples, alpha, directions, base=P[p])
    e1 = np.zeros(d)
    e1[0] = alpha + margin
    for p in range(len(P)):
        if p not in schedules:
            schedules[p] = np.stack([P[p] + e1, P[p] - e1])
    logger.info(
        f"evolving family: {len(f)} matched of {len(P)} points, {len(directions)} clencher rays, "
        f"worst containment margin {min(containment.values(), default=math.inf):.6g}"
    )
    return EvolvingFamily(shape, P.points, alpha, dict(f), schedules, cells, containment, margin)


@dataclass
class EvolvingReport:
    steps: int
    refinements: int = 0
    max_depth_used: int = 0
    collapses: int = 0
    resolves: int = 0
    monotonicity_margin: Optional[float] = None
    betti: Dict[str, List[int]] = field(default_factory=dict)
    start_f_vector: List[int] = field(default_factory=list)
    end_f_vector: List[int] = field(default_factory=list)
    end_matches_nerve: Optional[bool] = None

    def to_dict(self):
        return dict(self.__dict__)


class EvolvingCollapse(object):
    """Track Nerve({D_p(t)}) from t = 0 to t = 1 as a sequence of collapses.

    The nerve is never recomputed between the end points: each simplex
    keeps a witness a in A with every moving center within alpha, and only
    simplices whose witness fails are re-solved, warm-started from it.
    Simplices lost over one step must form a serializable set of free-pair
    intervals; otherwise the step is bisected. Every `recheck_every` grid
    values the nerve is searched for simplices outside the tracked complex,
    over candidate pairs taken from the current centers; a birth means the
    family is not monotone and raises NonCollapseTransition.

    Args:
        family: the evolving family.
        steps: uniform t grid size.
        tol: membership slack on alpha.
        max_depth: bisection depth before StepTooCoarse.
        dim_cap: optional truncation of the tracked nerve.
        solver_tol: bracket width of the minimax solver.
        check_betti: compare Betti numbers at every changed grid value.
        expected: complex the final nerve must equal, usually f(Nerve(C)).
        recheck_every: grid stride of the search for appearing simplices.
    """

    def __init__(
        self,
        family: EvolvingFamily,
        steps: int = 64,
        tol: float = 1e-7,
        max_depth: int = 6,
        dim_cap: Optional[int] = None,
        solver_tol: float = 1e-8,
        check_betti: bool = True,
        expected: Optional[SimplicialComplex] = None,
        recheck_every: int = 1,
    ):
        assert steps >= 1, "at least one step"
        assert recheck_every >= 1
        self.family = family
        self.steps = steps
        self.tol = tol
        self.max_depth = max_depth
        self.dim_cap = dim_cap
        self.check_betti = check_betti
        self.expected = expected
        self.recheck_every = recheck_every
        self.solver = ShapeMinimax(family.shape, tol=solver_tol)
        self.report = EvolvingReport(steps=steps)
        self._stack: Dict[Simplex, Tuple[np.ndarray, np.ndarray]] = {}

    def _arrays(self, s):
        # base (M, d) and clencher (M, d) rows of every center of s
        if s not in self._stack:
            fam = self.family
            base = np.concatenate([np.repeat(fam.points[[p]], len(fam.schedules[p]), 0) for p in s])
            Z = np.concatenate([fam.schedules[p] for p in s])
            self._stack[s] = (base, Z)
        return self._stack[s]

    def _centers(self, s, t):
        base, Z = self._arrays(s)
        return (1.0 - t) * base + t * Z

    def _decide(self, simplices, t, warm=None) -> Dict[Simplex, Optional[np.ndarray]]:
        """Witness of each simplex at t, or None when the cells do not meet."""
        alpha, tol = self.family.alpha, self.tol
        by_size = defaultdict(list)
        for s in simplices:
            by_size[len(self._arrays(s)[0])].append(s)
        out = {}
        for M in sorted(by_size):
            group = by_size[M]
            d = self.family.points.shape[1]
            chunk = max(1, CENTER_BUDGET // (M * d))
            for start in range(0, len(group), chunk):
                part = group[start : start + chunk]
                centers = np.stack([self._centers(s, t) for s in part])
                w = None
                if warm is not None:
                    w = np.stack([warm.get(s, centers[i].mean(0)) for i, s in enumerate(part)])
                res = self.solver(centers, threshold=alpha + tol, warm=w)
                self.report.resolves += len(part)
                for i, s in enumerate(part):
                    upper, lower, witness = res[i]
                    if upper <= alpha + tol:
                        out[s] = witness
                    elif lower > alpha + tol:
                        out[s] = None
                    else:
                        raise ToleranceNotMet(
                            f"nerve membership of {s} at t={t:.6g} undecided",
                            simplex=s,
                            t=t,
                            lower=lower,
                            upper=upper,
                        )
        return out

    def _candidate_graph(self, t: float):
        # a point within alpha of every center of p is within alpha of their mean
        fam = self.family
        centroids = np.stack([fam.centers(p, t).mean(0) for p in range(len(fam.points))])
        return neighbourhood_graph(centroids, 2 * fam.alpha + self.tol * max(1.0, fam.alpha))

    def nerve_at(self, t: float) -> Tuple[SimplicialComplex, Dict[Simplex, np.ndarray]]:
        """Nerve({D_p(t)}) from scratch by level-wise clique expansion."""
        fam = self.family
        alive = self._decide([(p,) for p in range(len(fam.points))], t)
        G = self._candidate_graph(t)
        G.remove_nodes_from([p for (p,), w in alive.items() if w is None])
        witnesses = {s: w for s, w in alive.items() if w is not None}

        def keep(candidates):
            decided = self._decide(candidates, t)
            kept = [s for s in candidates if decided[s] is not None]
            witnesses.update((s, decided[s]) for s in kept)
            return kept

        K = SimplicialComplex()
        for level in _expand(G, self.dim_cap, keep):
            for s in level:
                K.insert_closure(s)
        return K, witnesses

    def appearing(self, K: SimplicialComplex, t: float) -> List[Simplex]:
        """Simplices of Nerve({D_p(t)}) missing from the tracked complex K.

        Members of K are taken as alive without a solve; only candidates
        outside K are decided.
        """
        born = []

        def keep(candidates):
            fresh = [s for s in candidates if s not in K]
            decided = self._decide(fresh, t) if fresh else {}
            new = [s for s in fresh if decided[s] is not None]
            born.extend(new)
            return [s for s in candidates if s in K] + new

        G = self._candidate_graph(t)
        outside = [(p,) for p in G if (p,) not in K]
        if outside:
            decided = self._decide(outside, t)
            dead = [s for s in outside if decided[s] is None]
            born.extend(s for s in outside if decided[s] is not None)
            G.remove_nodes_from([p for (p,) in dead])
        _expand(G, self.dim_cap, keep)
        return sorted(born, key=simplex_key)

    def _dying(self, K, witnesses, t_lo, t):
        alpha, tol = self.family.alpha, self.tol
        stale = []
        for s in K.simplices:
            w = witnesses[s]
            if np.linalg.norm(self._centers(s, t) - w, axis=1).max() > alpha + tol:
                stale.append(s)
        fresh = self._decide(stale, t, warm=witnesses) if stale else {}
        dead = set()
        for s, w in fresh.items():
            if w is None:
                dead.add(s)
                continue
            # a witness at t must sit strictly inside the cells at t_lo
            margin = alpha - float(np.linalg.norm(self._centers(s, t_lo) - w, axis=1).max())
            rep = self.report
            rep.monotonicity_margin = (
                margin if rep.monotonicity_margin is None else min(rep.monotonicity_margin, margin)
            )
            if margin < -tol:
                raise NonCollapseTransition(
                    f"witness of {s} at t={t:.6g} lies outside the cells at t={t_lo:.6g}",
                    simplex=s,
                    margin=margin,
                )
        for s in list(dead):
            dead.update(K.cofaces(s))
        return dead, {s: w for s, w in fresh.items() if w is not None}

    def _advance(self, K, witnesses, trace, t_lo, t_hi, depth):
        dead, fresh = self._dying(K, witnesses, t_lo, t_hi)
        if not dead:
            witnesses.update(fresh)
            return
        steps = serialize_removal(K, dead, event_value=t_hi, witnesses=witnesses)
        if steps is not None:
            for step in steps:
                trace.append(step)
            for s in dead:
                witnesses.pop(s, None)
            witnesses.update((s, w) for s, w in fresh.items() if s in K)
            self.report.collapses += len(steps)
            self.report.max_depth_used = max(self.report.max_depth_used, depth)
            logger.debug(f"t={t_hi:.6g}: {len(steps)} collapses removing {len(dead)} simplices")
            return
        if depth >= self.max_depth:
            suggested = self.steps * 2 ** (depth + 1)
            raise StepTooCoarse(
                f"{len(dead)} simplices vanish on [{t_lo:.6g}, {t_hi:.6g}] without a free-pair order",
                suggested_steps=suggested,
                dead=sorted(dead, key=simplex_key),
            )
        self.report.refinements += 1
        mid = 0.5 * (t_lo + t_hi)
        self._advance(K, witnesses, trace, t_lo, mid, depth + 1)
        self._advance(K, witnesses, trace, mid, t_hi, depth + 1)

    def run(self) -> Tuple[SimplicialComplex, CollapseTrace]:
        K, witnesses = self.nerve_at(0.0)
        self.start = K.copy()
        self.report.start_f_vector = K.f_vector()
        betti0 = betti_numbers_mod2(K)
        self.report.betti["0"] = betti0
        trace = CollapseTrace()
        grid = np.linspace(0.0, 1.0, self.steps + 1)
        for i, (t_lo, t_hi) in enumerate(zip(grid[:-1], grid[1:]), start=1):
            before = len(trace)
            self._advance(K, witnesses, trace, float(t_lo), float(t_hi), 0)
            # t = 1 is settled by the fresh solve below
            if i < self.steps and i % self.recheck_every == 0:
                born = self.appearing(K, float(t_hi))
                if born:
                    raise NonCollapseTransition(
                        f"{len(born)} simplices appear at t={t_hi:.6g}", t=float(t_hi), appeared=born
                    )
            if self.check_betti and len(trace) > before:
                betti = betti_numbers_mod2(K)
                self.report.betti[f"{t_hi:.6g}"] = betti
                if not same_betti(betti, betti0):
                    raise CollapseViolation(
                        f"Betti numbers changed to {betti} at t={t_hi:.6g}", t=float(t_hi), betti=betti
                    )

        scratch, _ = self.nerve_at(1.0)
        appeared = sorted(set(scratch.simplices) - set(K.simplices), key=simplex_key)
        if appeared:
            raise NonCollapseTransition(
                f"{len(appeared)} simplices of the t = 1 nerve were never tracked", appeared=appeared
            )
        lost = sorted(set(K.simplices) - set(scratch.simplices), key=simplex_key)
        if lost:
            raise CollapseViolation(
                f"{len(lost)} tracked simplices are rejected by a fresh solve at t = 1", lost=lost
            )
        self.report.end_f_vector = K.f_vector()
        if self.expected is not None:
            self.report.end_matches_nerve = K == self.expected
            if not self.report.end_matches_nerve:
                raise CollapseViolation(
                    "final nerve differs from the image of the covering nerve",
                    extra=sorted(set(K.simplices) - set(self.expected.simplices), key=simplex_key),
                    missing=sorted(set(self.expected.simplices) - set(K.simplices), key=simplex_key),
                )
        logger.info(
            f"evolving collapse: {len(trace)} collapses over {self.steps} steps, "
            f"{self.report.refinements} refinements, end f-vector {K.f_vector()}"
        )
        return K, trace


def covering_nerve_image(family: EvolvingFamily, tol: float = 1e-9) -> SimplicialComplex:
    """f(Nerve(C)) on the point indices of the family."""
    nerve = build_nerve(list(family.cells.values()), tol)
    return nerve.relabel(family.vertex_map)


def evolving_collapse(
    family: EvolvingFamily,
    steps: int = 64,
    tol: float = 1e-7,
    max_depth: int = 6,
    dim_cap: Optional[int] = None,
    return_report: bool = False,
):
    """Collapse Nerve({D_p(0)}) onto f(Nerve(C)).

    Returns the final complex and the trace; the start complex is the
    restricted Cech complex of the points at alpha.
    """
    engine = EvolvingCollapse(
        family, steps, tol, max_depth, dim_cap, expected=covering_nerve_image(family)
    )
    K, trace = engine.run()
    if return_report:
        return K, trace, engine
    return K, trace


@dataclass
class CoverageReport:
    probes: int
    covered: int
    worst_margin: float
    uncovered: List[List[float]] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.covered == self.probes

    def to_dict(self):
        out = dict(self.__dict__)
        out["passed"] = self.passed
        return out


def check_final_coverage(family: EvolvingFamily, probes, tol: float = 1e-9) -> CoverageReport:
    """Every probe point of A lies in some D_p(1)."""
    probes = np.atleast_2d(np.asarray(probes, dtype=float))
    best = np.full(len(probes), -np.inf)
    for p in family.matched:
        c = family.centers(p, 1.0)
        far = np.linalg.norm(probes[:, None, :] - c[None], axis=-1).max(-1)
        best = np.maximum(best, family.alpha - far)
    ok = best >= -tol
    report = CoverageReport(
        probes=len(probes),
        covered=int(ok.sum()),
        worst_margin=float(best.min()) if len(best) else math.inf,
        uncovered=probes[~ok].tolist(),
    )
    if not report.passed:
        logger.warning(f"{report.probes - report.covered} probes lie in no final cell")
    return report
