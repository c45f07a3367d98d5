# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import itertools
import logging
from typing import Dict, List, Optional, Tuple

import numpy as np

from cechcollapse.component.errors import ResourceCap
from cechcollapse.component.simplicial_complex import SimplicialComplex
from cechcollapse.model.triangulation import AffineChart, TriangulationBundle

logger = logging.getLogger(__name__)

# the grid template is built up to R^3
MAX_GRID_DIM = 3

# largest number of cubical cells
MAX_GRID_CELLS = 512


def _cubical_faces(m: int, cells: int) -> List[Tuple[int, ...]]:
    # doubled integer coordinates: even entries are fixed, odd entries span an interval
    return list(itertools.product(range(2 * cells + 1), repeat=m))


def _face_dim(face) -> int:
    return sum(c % 2 for c in face)


def _subfaces(face) -> List[Tuple[int, ...]]:
    """Codimension-one faces of a cubical face."""
    out = []
    for axis, c in enumerate(face):
        if c % 2:
            for delta in (-1, 1):
                out.append(face[:axis] + (c + delta,) + face[axis + 1 :])
    return out


def grid_barycentric(
    m: int, cells_per_axis: int, window: float = 1.0, ambient_dim: Optional[int] = None
) -> TriangulationBundle:
    """Barycentric subdivision of the cubical grid of [-window, window]^m.

    One vertex at the centroid of every cubical face; the simplices are the
    chains of faces ordered by inclusion, built by cones of ascending
    dimension.
    """
    if not 1 <= m <= MAX_GRID_DIM:
        raise ValueError(f"grid template supports 1 <= m <= {MAX_GRID_DIM}, got {m}")
    if cells_per_axis < 1:
        raise ValueError("cells_per_axis must be positive")
    if cells_per_axis ** m > MAX_GRID_CELLS:
        raise ResourceCap(
            f"{cells_per_axis}^{m} cubical cells", cells=cells_per_axis ** m, cap=MAX_GRID_CELLS
        )
    ambient_dim = ambient_dim or m
    h = 2.0 * window / cells_per_axis
    faces = _cubical_faces(m, cells_per_axis)
    index: Dict[Tuple[int, ...], int] = {f: i for i, f in enumerate(faces)}
    flat = np.array([[-window + 0.5 * c * h for c in f] for f in faces])

    def chains(face):
        # maximal chains ending at `face`, listed from the vertex up
        if _face_dim(face) == 0:
            return [[face]]
        return [c + [face] for sub in _subfaces(face) for c in chains(sub)]

    T = SimplicialComplex()
    frames = {}
    for top in (f for f in faces if _face_dim(f) == m):
        for chain in chains(top):
            ids = sorted(index[f] for f in chain)
            s = tuple(ids)
            T.insert_closure(s)
            frames[s] = flat[list(s)]

    # vertices whose star stays away from the window boundary
    interior = [
        index[f] for f in faces if all(1 < c < 2 * cells_per_axis - 1 for c in f)
    ]
    logger.info(f"grid template m={m}, {cells_per_axis} cells per axis: f-vector {T.f_vector()}")
    return TriangulationBundle(
        "grid",
        cells_per_axis,
        T,
        frames,
        AffineChart(m, ambient_dim),
        flat,
        {
            "m": m,
            "cells_per_axis": cells_per_axis,
            "window": window,
            "spacing": h,
            "interior_vertices": interior,
        },
    )
