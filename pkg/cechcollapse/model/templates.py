# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

from cechcollapse.model.flat_torus import flat_torus_triangulation
from cechcollapse.model.grid import grid_barycentric
from cechcollapse.model.icosphere import icosphere, polygon
from cechcollapse.model.triangulation import TriangulationBundle


def _grid(n, shape=None, **params):
    if shape is not None:
        params.setdefault("m", shape.params().get("m", 2))
        params.setdefault("window", shape.params().get("half_width", 1.0))
        params.setdefault("ambient_dim", shape.ambient_dim)
    m = params.pop("m", 2)
    return grid_barycentric(m, n, **params)


TEMPLATES = {
    "icosphere": lambda n, shape=None, **params: icosphere(n),
    "polygon": lambda n, shape=None, **params: polygon(n),
    "torus": lambda n, shape=None, **params: flat_torus_triangulation(n),
    "grid": _grid,
}


def build_template(name: str, n: int, shape=None, **params) -> TriangulationBundle:
    """Triangulation template by name; the grid reads its window from a box shape."""
    if name not in TEMPLATES:
        raise ValueError(f"unknown template {name!r}; valid templates: {sorted(TEMPLATES)}")
    return TEMPLATES[name](n, shape=shape, **params)
