# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import logging
import math

import numpy as np

from cechcollapse.component.errors import ResourceCap
from cechcollapse.component.simplicial_complex import SimplicialComplex
from cechcollapse.model.triangulation import PeriodicChart, TriangulationBundle

logger = logging.getLogger(__name__)

# largest number of rows of the flat torus template
MAX_TORUS_ROWS = 64


def torus_columns(n: int) -> int:
    return int(math.floor(math.sqrt(3) / 2 * n))


def shape_ratio(n: int) -> float:
    """a / b for n rows of height a = 2 pi / n and k bases b = 2 pi / k."""
    return torus_columns(n) / n


def flat_torus_triangulation(n: int) -> TriangulationBundle:
    """Periodic isosceles tiling of [0, 2 pi)^2 mapped through H.

    Vertex rows j = 0..n-1 sit at height j a with k = floor(sqrt(3)/2 n)
    vertices each, shifted by half a base on odd rows. Odd n closes the
    tiling with one strip whose rows share the same shift; that strip is
    cut into right triangles.
    """
    if n > MAX_TORUS_ROWS:
        raise ResourceCap(f"torus template with {n} rows", n=n, cap=MAX_TORUS_ROWS)
    k = torus_columns(n)
    if n < 3 or k < 3:
        raise ValueError(f"flat torus needs n >= 4 (k = {k} columns at n = {n})")
    a = 2 * math.pi / n
    b = 2 * math.pi / k

    def offset(j):
        return 0.5 * (j % n % 2)

    def vid(i, j):
        return (j % n) * k + (i % k)

    def coord(i, j):
        # unwrapped flat coordinate; rows past n reuse the shift of row j mod n
        return np.array([(i + offset(j)) * b, j * a])

    T = SimplicialComplex()
    frames = {}

    def add(tri):
        ids = [vid(i, j) for i, j in tri]
        order = np.argsort(ids)
        s = tuple(int(ids[o]) for o in order)
        T.insert_closure(s)
        frames[s] = np.stack([coord(*tri[o]) for o in order])

    for j in range(n):
        low, high = offset(j), offset(j + 1)
        for i in range(k):
            if low > high:
                add([(i, j), (i + 1, j), (i + 1, j + 1)])
                add([(i, j), (i + 1, j + 1), (i, j + 1)])
            else:
                add([(i, j), (i + 1, j), (i, j + 1)])
                add([(i + 1, j), (i + 1, j + 1), (i, j + 1)])

    flat = np.stack([coord(i, j) for j in range(n) for i in range(k)])
    ratio = shape_ratio(n)
    logger.info(f"flat torus n={n}, k={k}: a/b = {ratio:.4f}")
    return TriangulationBundle(
        "torus",
        n,
        T,
        frames,
        PeriodicChart(),
        flat,
        {"rows": n, "columns": k, "height": a, "base": b, "ratio": ratio},
    )
