# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import math
from functools import lru_cache
from typing import Tuple

import numpy as np

from cechcollapse.component.errors import ResourceCap
from cechcollapse.component.simplicial_complex import SimplicialComplex
from cechcollapse.model.triangulation import RadialChart, TriangulationBundle

# largest subdivision level of the icosphere template
MAX_ICOSPHERE_LEVEL = 6

# largest polygon of the circle template
MAX_POLYGON_SIDES = 100000


def icosahedron() -> Tuple[np.ndarray, np.ndarray]:
    t = (1.0 + 5 ** 0.5) / 2.0
    verts = np.array(
        [
            [-1, t, 0], [1, t, 0], [-1, -t, 0], [1, -t, 0],
            [0, -1, t], [0, 1, t], [0, -1, -t], [0, 1, -t],
            [t, 0, -1], [t, 0, 1], [-t, 0, -1], [-t, 0, 1],
        ],
        dtype=np.float64,
    )
    faces = np.array(
        [
            [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
            [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
            [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
            [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
        ],
        dtype=np.int64,
    )
    verts /= np.linalg.norm(verts, axis=1)[:, None]
    return verts, faces


def _subdivide(verts, faces):
    # flat midpoint split; the polytope stays a subdivided icosahedron
    vert_list = verts.tolist()
    cache = {}

    def midpoint(i, j):
        key = (min(i, j), max(i, j))
        if key not in cache:
            vert_list.append(((verts[i] + verts[j]) * 0.5).tolist())
            cache[key] = len(vert_list) - 1
        return cache[key]

    new_faces = []
    for a, b, c in faces:
        ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
        new_faces += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
    return np.array(vert_list, dtype=np.float64), np.array(new_faces, dtype=np.int64)


@lru_cache(maxsize=8)
def subdivided_icosahedron(level: int) -> Tuple[np.ndarray, np.ndarray]:
    """Flat vertices and faces after `level` rounds of 4-to-1 subdivision."""
    verts, faces = icosahedron()
    for _ in range(level):
        verts, faces = _subdivide(verts, faces)
    verts.setflags(write=False)
    faces.setflags(write=False)
    return verts, faces


def sphere_net(level: int) -> Tuple[np.ndarray, float]:
    """Icosphere vertices on S^2 with their certified covering radius.

    Every face is acute, so its spherical triangle lies in the cap around
    the normalized circumcenter through its three vertices.
    """
    verts, faces = subdivided_icosahedron(level)
    points = verts / np.linalg.norm(verts, axis=1, keepdims=True)
    A, B, C = points[faces[:, 0]], points[faces[:, 1]], points[faces[:, 2]]
    normal = np.cross(B - A, C - A)
    normal *= np.sign((normal * A).sum(1, keepdims=True))
    center = normal / np.linalg.norm(normal, axis=1, keepdims=True)
    epsilon = float(np.linalg.norm(center - A, axis=1).max())
    return points.copy(), epsilon


def _bundle_from_faces(name, n, flat, faces, params):
    T = SimplicialComplex()
    frames = {}
    for face in faces:
        s = tuple(sorted(int(v) for v in face))
        T.insert_closure(s)
        frames[s] = flat[list(s)]
    return TriangulationBundle(name, n, T, frames, RadialChart(), flat, params)


def icosphere(n: int) -> TriangulationBundle:
    """Icosahedron with each face cut into 4^n triangles, h(x) = x / ||x||."""
    if n < 0:
        raise ValueError(f"icosphere level must be non-negative, got {n}")
    if n > MAX_ICOSPHERE_LEVEL:
        raise ResourceCap(
            f"icosphere level {n} exceeds {MAX_ICOSPHERE_LEVEL}", n=n, cap=MAX_ICOSPHERE_LEVEL
        )
    flat, faces = subdivided_icosahedron(n)
    return _bundle_from_faces("icosphere", n, np.array(flat), faces, {"level": n})


def polygon(n: int) -> TriangulationBundle:
    """Regular n-gon inscribed in the unit circle, h(x) = x / ||x||."""
    if n < 3:
        raise ValueError(f"a polygon needs at least 3 sides, got {n}")
    if n > MAX_POLYGON_SIDES:
        raise ResourceCap(f"polygon with {n} sides", n=n, cap=MAX_POLYGON_SIDES)
    theta = 2 * math.pi * np.arange(n) / n
    flat = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    edges = [(i, (i + 1) % n) for i in range(n)]
    return _bundle_from_faces("polygon", n, flat, edges, {"sides": n})
