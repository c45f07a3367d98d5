# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import itertools
import logging
import math
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.spatial import cKDTree

from cechcollapse.component.builders import Cell
from cechcollapse.component.simplicial_complex import Simplex, SimplicialComplex, simplex_key

logger = logging.getLogger(__name__)

# top simplices inspected per located point
LOCATE_CANDIDATES = 12

# default depth of the barycentric lattice sampling each cell
SAMPLES_PER_CELL = 4


class Chart(object):
    """Flat coordinates of a triangulation and their image h on the shape."""

    periodic = None

    def push(self, flat: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def pull(self, y: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def barycentric(self, q: np.ndarray, frames: np.ndarray) -> np.ndarray:
        """q (N, D) against frames (N, k, D) -> barycentric coordinates (N, k)."""
        raise NotImplementedError

    def tree_coords(self, flat: np.ndarray) -> np.ndarray:
        return flat


class RadialChart(Chart):
    """Inscribed polytope of the unit sphere, h(x) = x / ||x||."""

    def push(self, flat):
        return flat / np.linalg.norm(flat, axis=-1, keepdims=True)

    def pull(self, y):
        return self.push(y)

    def barycentric(self, q, frames):
        # the ray through q meets aff(frame) at sum w_i v_i / sum w_i
        w = np.linalg.solve(np.swapaxes(frames, -1, -2), q[..., None])[..., 0]
        total = w.sum(-1, keepdims=True)
        return np.where(total > 0, w / np.where(total > 0, total, 1.0), -np.inf)

    def tree_coords(self, flat):
        return self.push(flat)


class PeriodicChart(Chart):
    """H(s, t) = (cos s, sin s, cos t, sin t) on the 2 pi periodic plane."""

    periodic = 2 * math.pi

    def push(self, flat):
        s, t = flat[..., 0], flat[..., 1]
        return np.stack([np.cos(s), np.sin(s), np.cos(t), np.sin(t)], axis=-1)

    def pull(self, y):
        s = np.arctan2(y[..., 1], y[..., 0]) % self.periodic
        t = np.arctan2(y[..., 3], y[..., 2]) % self.periodic
        return np.stack([s, t], axis=-1)

    def barycentric(self, q, frames):
        shift = np.round((frames[..., 0, :] - q) / self.periodic) * self.periodic
        return _affine_barycentric(q + shift, frames)

    def tree_coords(self, flat):
        wrapped = np.mod(flat, self.periodic)
        return np.where(wrapped >= self.periodic, 0.0, wrapped)


class AffineChart(Chart):
    """R^m sitting in the first m coordinates of R^d."""

    def __init__(self, m: int, ambient_dim: int):
        self.m = m
        self.ambient_dim = ambient_dim

    def push(self, flat):
        pad = np.zeros(flat.shape[:-1] + (self.ambient_dim - self.m,))
        return np.concatenate([flat, pad], axis=-1)

    def pull(self, y):
        return y[..., : self.m]

    def barycentric(self, q, frames):
        return _affine_barycentric(q, frames)


def _affine_barycentric(q, frames):
    k = frames.shape[-2]
    A = np.concatenate([np.swapaxes(frames, -1, -2), np.ones(frames.shape[:-2] + (1, k))], axis=-2)
    b = np.concatenate([q, np.ones(q.shape[:-1] + (1,))], axis=-1)
    if A.shape[-2] == A.shape[-1]:
        return np.linalg.solve(A, b[..., None])[..., 0]
    return np.stack([np.linalg.lstsq(a, v, rcond=None)[0] for a, v in zip(A, b)])


class TriangulationBundle(object):
    """A triangulation T with its chart h, the star covering and measured rho.

    `frames` maps each top simplex of T to the flat coordinates of its
    vertices, unwrapped consistently for periodic charts.
    """

    def __init__(
        self,
        name: str,
        n: int,
        T: SimplicialComplex,
        frames: Dict[Simplex, np.ndarray],
        chart: Chart,
        vertex_flat: np.ndarray,
        params: Optional[dict] = None,
    ):
        self.name = name
        self.n = n
        self.T = T
        self.frames = frames
        self.chart = chart
        self.vertex_flat = np.asarray(vertex_flat, dtype=float)
        self.vertex_positions = chart.push(self.vertex_flat)
        self.params = params or {}
        self.covering: List[Cell] = []
        self.rho: Optional[float] = None
        self.top = sorted(frames, key=simplex_key)
        self._frame_array = np.stack([frames[s] for s in self.top])
        self._top_array = np.array(self.top)
        centroids = chart.tree_coords(self._frame_array.mean(1))
        box = chart.periodic
        self._tree = cKDTree(centroids, boxsize=box) if box else cKDTree(centroids)
        self._containing: Dict[Simplex, Simplex] = {}
        for s in self.top:
            for r in range(1, len(s) + 1):
                for face in itertools.combinations(s, r):
                    self._containing.setdefault(face, s)

    def __repr__(self):
        return f"TriangulationBundle({self.name}, n={self.n}, f={self.T.f_vector()})"

    @property
    def ambient_dim(self) -> int:
        return self.vertex_positions.shape[1]

    def frame_of(self, simplex) -> Tuple[Simplex, np.ndarray]:
        """Flat coordinates of `simplex` inside a top simplex containing it."""
        simplex = tuple(sorted(simplex))
        top = self._containing[simplex]
        frame = self.frames[top]
        return top, frame[[top.index(v) for v in simplex]]

    def h_oracle(self, simplex, bary) -> np.ndarray:
        _, coords = self.frame_of(simplex)
        bary = np.asarray(bary, dtype=float)
        return self.chart.push(bary @ coords)

    def face_points(self, simplex, depth: int) -> np.ndarray:
        """h of the barycentric lattice of depth `depth` on a simplex of T."""
        _, coords = self.frame_of(simplex)
        return self.chart.push(_lattice(len(coords) - 1, depth) @ coords)

    def locate(self, points) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Candidate top simplices and barycentric coordinates of shape points.

        Returns (top ids (N, c), barycentric (N, c, k), best column (N,)).
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        q = self.chart.pull(points)
        c = min(LOCATE_CANDIDATES, len(self.top))
        _, idx = self._tree.query(self.chart.tree_coords(q), k=c)
        idx = np.asarray(idx).reshape(len(points), c)
        frames = self._frame_array[idx]  # (N, c, k, D)
        qq = np.broadcast_to(q[:, None, :], frames.shape[:-2] + (q.shape[-1],))
        bary = self.chart.barycentric(qq.reshape(-1, q.shape[-1]), frames.reshape((-1,) + frames.shape[-2:]))
        bary = bary.reshape(frames.shape[:-1])
        best = bary.min(-1).argmax(-1)
        return idx, bary, best

    def star_membership(self, v: int, points, tol: float = 1e-9) -> np.ndarray:
        """y lies in C_v iff, in a top simplex containing y, v has a maximal coordinate."""
        idx, bary, _ = self.locate(points)
        tops = self._top_array[idx]  # (N, c, k)
        has_v = tops == v
        inside = bary.min(-1) >= -tol
        bv = np.where(has_v, bary, -np.inf).max(-1)
        ok = inside & has_v.any(-1) & (bv >= bary.max(-1) - tol)
        return ok.any(-1)

    def in_vertex_star(self, v: int, points, tol: float = 1e-9) -> np.ndarray:
        """y lies in h(Star(v, T)) iff a top simplex containing y has v as a vertex."""
        idx, bary, _ = self.locate(points)
        tops = self._top_array[idx]
        inside = bary.min(-1) >= -tol
        return (inside & (tops == v).any(-1)).any(-1)

    def covered(self, points, tol: float = 1e-9) -> np.ndarray:
        _, bary, best = self.locate(points)
        return bary[np.arange(len(bary)), best].min(-1) >= -tol

    def cell(self, v: int) -> Optional[Cell]:
        for c in self.covering:
            if c.id == v:
                return c
        return None

    def covering_to_dict(self) -> dict:
        return {
            "template": self.name,
            "n": self.n,
            "params": self.params,
            "rho": self.rho,
            "cells": [c.to_dict() for c in self.covering],
        }


def barycentric_labels(T: SimplicialComplex) -> List[Simplex]:
    """Vertex i of the barycentric subdivision is the simplex labels[i] of T."""
    return T.sorted_simplices()


def barycentric_subdivision(T: SimplicialComplex) -> SimplicialComplex:
    """Order complex of the face poset: one simplex per chain of faces."""
    labels = barycentric_labels(T)
    index = {s: i for i, s in enumerate(labels)}
    K = SimplicialComplex()
    for top in sorted(T.maximal_simplices, key=simplex_key):
        for perm in itertools.permutations(top):
            chain = [index[tuple(sorted(perm[: r + 1]))] for r in range(len(perm))]
            K.insert_closure(chain)
    return K


def _lattice(dim: int, depth: int) -> np.ndarray:
    """Barycentric lattice points of depth `depth` in a dim-simplex, (M, dim + 1)."""
    pts = [
        c + (depth - sum(c),)
        for c in itertools.product(range(depth + 1), repeat=dim)
        if sum(c) <= depth
    ]
    return np.array(pts, dtype=float) / max(depth, 1)


def build_star_covering(bundle: TriangulationBundle, samples_per_cell: int = SAMPLES_PER_CELL) -> List[Cell]:
    """C_v = union of h(tau) over the simplices tau of the barycentric star of v.

    Each star simplex is a chain v = tau_0 < tau_1 < ... < tau_d inside a
    top simplex; its vertices are the barycenters of the tau_i, and a
    barycentric lattice over it is pushed through h.
    """
    per_vertex: Dict[int, List[np.ndarray]] = {v: [] for v in bundle.T.vertices}
    stars: Dict[int, List[Simplex]] = {v: [] for v in bundle.T.vertices}
    for top in bundle.top:
        frame = bundle.frames[top]
        lattice = _lattice(len(top) - 1, samples_per_cell)
        for pos, v in enumerate(top):
            stars[v].append(top)
            others = [i for i in range(len(top)) if i != pos]
            for perm in itertools.permutations(others):
                chain = [pos] + list(perm)
                corners = np.stack([frame[chain[: r + 1]].mean(0) for r in range(len(chain))])
                per_vertex[v].append(lattice @ corners)

    cells = []
    rho = 0.0
    for v in bundle.T.vertices:
        flat = np.concatenate(per_vertex[v]) if per_vertex[v] else bundle.vertex_flat[[v]]
        samples = bundle.chart.push(flat)
        _, keep = np.unique(np.round(samples, 12), axis=0, return_index=True)
        samples = samples[np.sort(keep)]
        center = bundle.vertex_positions[v]

        def membership(points, tol, v=v):
            return bundle.star_membership(v, points, tol)

        cell = Cell(
            id=v,
            samples=samples,
            membership=membership,
            center=center,
            star=tuple(stars[v]),
        )
        rho = max(rho, cell.radius)
        cells.append(cell)
    bundle.covering = cells
    bundle.rho = rho
    logger.info(f"{bundle.name}(n={bundle.n}) star covering: {len(cells)} cells, rho {rho:.6g}")
    return cells


def convex_star_report(bundle: TriangulationBundle, tol: float = 1e-9) -> Dict[int, float]:
    """Volume defect |Conv(star) - star| / |star| at interior vertices (affine charts)."""
    from scipy.spatial import ConvexHull

    report = {}
    interior = bundle.params.get("interior_vertices", bundle.T.vertices)
    for v in interior:
        tops = [s for s in bundle.top if v in s]
        vol = 0.0
        pts = []
        for s in tops:
            frame = bundle.frames[s]
            edges = frame[1:] - frame[0]
            vol += abs(np.linalg.det(edges)) / math.factorial(len(edges))
            pts.append(frame)
        pts = np.unique(np.round(np.concatenate(pts), 12), axis=0)
        if pts.shape[1] == 1:
            hull = float(pts.max() - pts.min())
        else:
            hull = ConvexHull(pts).volume
        report[v] = abs(hull - vol) / max(vol, tol)
    return report
