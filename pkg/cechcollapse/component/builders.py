# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import networkx as nx
import numpy as np
from scipy import ndimage
from scipy.spatial import cKDTree

from cechcollapse.component.errors import BoundaryTie, ToleranceNotMet
from cechcollapse.component.miniball import miniball
from cechcollapse.component.minimax import ShapeMinimax
from cechcollapse.component.simplicial_complex import Simplex, SimplicialComplex, boundary

logger = logging.getLogger(__name__)

# simplices per batched solver call
SOLVER_BATCH = 4096


@dataclass
class PointCloud:
    points: np.ndarray

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        if not np.all(np.isfinite(self.points)):
            raise ValueError("point cloud has non-finite coordinates")

    def __len__(self):
        return len(self.points)

    def __getitem__(self, idx):
        return self.points[idx]

    @property
    def ambient_dim(self) -> int:
        return self.points.shape[1]

    def coords(self, simplex) -> np.ndarray:
        return self.points[list(simplex)]

    def save(self, path, epsilon=None, reach=None):
        np.savetxt(path, self.points, delimiter=",", fmt="%.17g")
        if epsilon is not None or reach is not None:
            with open(f"{path}.json", "w") as f:
                json.dump({"epsilon": epsilon, "reach": reach}, f, indent=2, sort_keys=True)

    @classmethod
    def load(cls, path) -> "PointCloud":
        return cls(np.loadtxt(path, delimiter=",", ndmin=2))


def as_cloud(P) -> PointCloud:
    return P if isinstance(P, PointCloud) else PointCloud(P)


@dataclass
class Cell:
    """A compact subset of the shape given by dense samples and a predicate.

    `membership(points, tol)` maps an (N, d) array to an (N,) boolean mask.
    """

    id: int
    samples: np.ndarray
    membership: Callable[[np.ndarray, float], np.ndarray]
    center: Optional[np.ndarray] = None
    star: Tuple[Simplex, ...] = ()

    def contains(self, points, tol: float = 1e-9) -> np.ndarray:
        return np.asarray(self.membership(np.atleast_2d(points), tol), dtype=bool)

    @property
    def anchor(self) -> np.ndarray:
        return self.samples.mean(0) if self.center is None else self.center

    @property
    def radius(self) -> float:
        return float(np.linalg.norm(self.samples - self.anchor, axis=1).max())

    def to_dict(self):
        return {
            "id": self.id,
            "samples": self.samples.tolist(),
            "star": [list(s) for s in self.star],
        }


@dataclass
class BuildResult:
    complex: SimplicialComplex
    values: Dict[Simplex, float] = field(default_factory=dict)
    witnesses: Dict[Simplex, np.ndarray] = field(default_factory=dict)
    ties: List[BoundaryTie] = field(default_factory=list)

    def to_dict(self):
        return {
            "f_vector": self.complex.f_vector(),
            "ties": [t.to_dict() for t in self.ties],
        }


def _slack(alpha: float, tol: float) -> float:
    return tol * max(1.0, alpha)


def neighbourhood_graph(P, radius: float) -> nx.Graph:
    P = as_cloud(P)
    G = nx.Graph()
    G.add_nodes_from(range(len(P)))
    G.add_edges_from(cKDTree(P.points).query_pairs(radius))
    return G


def _expand(G: nx.Graph, dim_cap: Optional[int], keep=None):
    """Level-wise clique expansion; `keep(level)` filters each new level."""
    upper = {v: {u for u in G[v] if u > v} for v in G}
    level = [(v,) for v in sorted(G)]
    levels = [level]
    while level and (dim_cap is None or len(level[0]) <= dim_cap):
        present = set(level)
        candidates = []
        for s in level:
            common = set.intersection(*(upper[v] for v in s))
            for v in sorted(common):
                t = s + (v,)
                if all(f in present for f in boundary(t)):
                    candidates.append(t)
        level = keep(candidates) if keep is not None else candidates
        if level:
            levels.append(level)
    return levels


def build_rips(P, alpha: float, dim_cap: Optional[int] = None, tol: float = 1e-9) -> SimplicialComplex:
    """Flag complex of the graph {||p - q|| <= 2 alpha}."""
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    G = neighbourhood_graph(P, 2 * alpha + _slack(alpha, tol))
    K = SimplicialComplex()
    if dim_cap is None:
        for clique in nx.find_cliques(G):
            K.insert_closure(clique)
    else:
        for level in _expand(G, dim_cap):
            for s in level:
                K.insert_closure(s)
    logger.info(f"Rips complex at alpha={alpha:.6g}: f-vector {K.f_vector()}")
    return K


def build_cech(
    P, alpha: float, dim_cap: Optional[int] = None, tol: float = 1e-9, return_result: bool = False
):
    """sigma is included iff its miniball radius is at most alpha (+ tol).

    Candidates are Rips cliques at the same scale, expanded level by level;
    radii within tol of alpha are recorded as ties and included.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    P = as_cloud(P)
    slack = _slack(alpha, tol)
    result = BuildResult(SimplicialComplex())
    G = neighbourhood_graph(P, 2 * alpha + slack)

    def keep(candidates):
        kept = []
        for s in candidates:
            ball = miniball(P.coords(s))
            if ball.radius <= alpha + slack:
                kept.append(s)
                result.values[s] = ball.radius
                result.witnesses[s] = ball.center
                if abs(ball.radius - alpha) < slack:
                    result.ties.append(BoundaryTie(s, ball.radius, alpha))
        return kept

    for level in _expand(G, dim_cap, keep):
        for s in level:
            result.complex.insert_closure(s)
            if len(s) == 1:
                result.values[s] = 0.0
                result.witnesses[s] = P.points[s[0]]
    if result.ties:
        logger.warning(f"{len(result.ties)} Cech simplices within tolerance of alpha={alpha:.6g}")
    logger.info(f"Cech complex at alpha={alpha:.6g}: f-vector {result.complex.f_vector()}")
    return result if return_result else result.complex


def check_cech_in_rips(P, alpha: float, dim_cap: Optional[int] = None, tol: float = 1e-9) -> bool:
    cech = build_cech(P, alpha, dim_cap, tol)
    rips = build_rips(P, alpha, dim_cap, tol)
    return all(s in rips for s in cech)


def solve_restricted(shape, P, simplices, alpha: float, tol: float = 1e-7, solver=None):
    """Certified t_star and witness for each simplex, batched by size."""
    P = as_cloud(P)
    solver = solver or ShapeMinimax(shape, tol=tol)
    by_size = defaultdict(list)
    for s in simplices:
        by_size[len(s)].append(s)
    out = {}
    for size in sorted(by_size):
        group = by_size[size]
        for start in range(0, len(group), SOLVER_BATCH):
            chunk = group[start : start + SOLVER_BATCH]
            centers = np.stack([P.coords(s) for s in chunk])
            res = solver(centers, threshold=alpha + tol)
            for i, s in enumerate(chunk):
                out[s] = res[i]
    return out


def build_restricted_cech(
    shape,
    P,
    alpha: float,
    dim_cap: Optional[int] = None,
    tol: float = 1e-7,
    cech=None,
    return_result: bool = False,
):
    """sigma is included iff min over a in A of max_p ||a - p|| <= alpha (+ tol).

    Evaluated on the Cech complex, which contains the restricted one.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be non-negative, got {alpha}")
    P = as_cloud(P)
    if cech is None:
        cech = build_cech(P, alpha, dim_cap, tol)
    solved = solve_restricted(shape, P, cech.sorted_simplices(), alpha, tol)
    result = BuildResult(SimplicialComplex())
    for s in cech.sorted_simplices():
        upper, lower, witness = solved[s]
        if upper <= alpha + tol:
            include = True
        elif lower > alpha + tol:
            include = False
        else:
            raise ToleranceNotMet(
                f"restricted membership of {s} undecided: bracket [{lower:.3g}, {upper:.3g}] "
                f"around alpha={alpha:.6g}",
                simplex=s,
                lower=lower,
                upper=upper,
            )
        if not include:
            continue
        if len(s) > 1 and not all(f in result.complex for f in boundary(s)):
            logger.warning(f"{s} passes the minimax test but a facet does not; dropped")
            continue
        result.complex.insert_closure(s)
        result.values[s] = upper
        result.witnesses[s] = witness
        if abs(upper - alpha) < tol:
            result.ties.append(BoundaryTie(s, upper, alpha))
    if result.ties:
        logger.warning(f"{len(result.ties)} restricted simplices within tolerance of alpha")
    logger.info(f"restricted Cech complex: f-vector {result.complex.f_vector()}")
    return result if return_result else result.complex


def build_nerve(cells: List[Cell], tol: float = 1e-9, return_result: bool = False):
    """sigma is included iff a sample of one of its cells lies in every cell of sigma."""
    result = BuildResult(SimplicialComplex())
    if not cells:
        return result if return_result else result.complex
    anchors = np.stack([c.anchor for c in cells])
    reach = max(c.radius for c in cells)
    tree = cKDTree(anchors)
    ids = [c.id for c in cells]

    for cell in cells:
        samples = cell.samples
        # cells whose anchor ball can hold a sample of this cell
        near = tree.query_ball_point(cell.anchor, cell.radius + reach + tol)
        inside = np.zeros((len(samples), len(cells)), dtype=bool)
        for j in near:
            inside[:, j] = cells[j].contains(samples, tol)
        inside[:, cells.index(cell)] = True
        for row, y in zip(inside, samples):
            s = tuple(sorted(ids[j] for j in np.flatnonzero(row)))
            if s not in result.complex:
                result.complex.insert_closure(s)
                result.witnesses.setdefault(s, y)
    for s in result.complex.sorted_simplices():
        if s not in result.witnesses:
            top = next(t for t in result.complex.cofaces(s) if t in result.witnesses)
            result.witnesses[s] = result.witnesses[top]
    logger.info(f"nerve of {len(cells)} cells: f-vector {result.complex.f_vector()}")
    return result if return_result else result.complex


def offset_betti_grid(P, alpha: float, resolution: int = 400, window=None) -> Tuple[int, int]:
    """(b0, b1) of the union of balls B(p, alpha) rasterized on a 2-D grid."""
    P = as_cloud(P)
    if P.ambient_dim != 2:
        raise ValueError("offset_betti_grid works on planar point sets")
    if window is None:
        lo = P.points.min(0) - alpha
        hi = P.points.max(0) + alpha
        pad = 2 * (hi - lo) / resolution
        window = (lo[0] - pad[0], hi[0] + pad[0], lo[1] - pad[1], hi[1] + pad[1])
    xmin, xmax, ymin, ymax = window
    xs = np.linspace(xmin, xmax, resolution)
    ys = np.linspace(ymin, ymax, resolution)
    grid = np.stack(np.meshgrid(xs, ys, indexing="ij"), axis=-1).reshape(-1, 2)
    dist, _ = cKDTree(P.points).query(grid)
    inside = (dist <= alpha).reshape(resolution, resolution)
    _, b0 = ndimage.label(inside, structure=np.ones((3, 3), dtype=int))
    holes, count = ndimage.label(~inside)
    border = set(np.unique(np.concatenate([holes[0], holes[-1], holes[:, 0], holes[:, -1]])))
    b1 = sum(1 for lab in range(1, count + 1) if lab not in border)
    return int(b0), int(b1)
