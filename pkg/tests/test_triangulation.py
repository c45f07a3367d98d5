# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import math

import numpy as np
import pytest

from cechcollapse.component.builders import build_nerve
from cechcollapse.component.errors import ResourceCap
from cechcollapse.component.homology import betti_numbers_mod2
from cechcollapse.component.shapes import build_shape
from cechcollapse.component.simplicial_complex import SimplicialComplex, is_closed_surface, is_cycle_graph
from cechcollapse.model.flat_torus import flat_torus_triangulation, shape_ratio, torus_columns
from cechcollapse.model.grid import grid_barycentric
from cechcollapse.model.icosphere import icosphere, polygon, sphere_net
from cechcollapse.model.templates import build_template
from cechcollapse.model.triangulation import (
    barycentric_subdivision,
    build_star_covering,
    convex_star_report,
)

testcases = [
    (lambda: icosphere(0), [12, 30, 20], [1, 0, 1]),
    (lambda: icosphere(1), [42, 120, 80], [1, 0, 1]),
    (lambda: polygon(12), [12, 12], [1, 1]),
    (lambda: flat_torus_triangulation(8), [48, 144, 96], [1, 2, 1]),
    (lambda: flat_torus_triangulation(9), [63, 189, 126], [1, 2, 1]),
    (lambda: grid_barycentric(1, 4), [9, 8], [1, 0]),
    (lambda: grid_barycentric(2, 2), [25, 56, 32], [1, 0, 0]),
]


@pytest.mark.parametrize("args", testcases)
def test_template_counts(args):
    build, f_vector, betti = args
    bundle = build()
    assert bundle.T.f_vector() == f_vector
    assert betti_numbers_mod2(bundle.T) == betti


def test_template_limits():
    with pytest.raises(ResourceCap):
        icosphere(7)
    with pytest.raises(ValueError):
        icosphere(-1)
    with pytest.raises(ValueError):
        polygon(2)
    with pytest.raises(ValueError):
        flat_torus_triangulation(3)
    with pytest.raises(ResourceCap):
        flat_torus_triangulation(65)
    with pytest.raises(ValueError):
        grid_barycentric(4, 2)
    with pytest.raises(ValueError):
        grid_barycentric(2, 0)
    with pytest.raises(ResourceCap):
        grid_barycentric(2, 23)


def test_surfaces():
    assert is_closed_surface(icosphere(1).T)
    assert is_closed_surface(flat_torus_triangulation(8).T)
    assert is_cycle_graph(polygon(7).T)
    np.testing.assert_allclose(np.linalg.norm(icosphere(2).vertex_positions, axis=1), 1.0)


@pytest.mark.parametrize("n", [4, 5, 8, 16, 33, 64])
def test_torus_shape_ratio(n):
    c = math.sqrt(3) / 2
    assert abs(shape_ratio(n) - c) / c < 1 / (c * n)
    assert torus_columns(n) == math.floor(c * n)


def test_torus_columns_values():
    assert torus_columns(8) == 6
    assert torus_columns(16) == 13
    bundle = flat_torus_triangulation(8)
    assert bundle.params["columns"] == 6
    np.testing.assert_allclose(build_shape("torus").distance(bundle.vertex_positions), 0.0, atol=1e-12)


def test_barycentric_subdivision():
    triangle = barycentric_subdivision(SimplicialComplex([(0, 1, 2)]))
    assert triangle.f_vector() == [7, 12, 6]
    hexagon = barycentric_subdivision(SimplicialComplex([(0, 1), (1, 2), (0, 2)]))
    assert hexagon.f_vector() == [6, 6]
    assert is_cycle_graph(hexagon)


def test_polygon_star_covering():
    bundle = polygon(12)
    cells = build_star_covering(bundle)
    assert len(cells) == 12
    assert bundle.rho == pytest.approx(2 * math.sin(math.pi / 24))
    assert build_nerve(cells) == bundle.T
    circle = build_shape("circle")
    assert bundle.covered(circle.grid(500)).all()
    np.testing.assert_allclose(
        bundle.h_oracle((0, 1), [0.5, 0.5]), [math.cos(math.pi / 12), math.sin(math.pi / 12)]
    )
    data = bundle.covering_to_dict()
    assert data["template"] == "polygon"
    assert len(data["cells"]) == 12


def test_icosphere_star_covering():
    bundle = icosphere(1)
    cells = build_star_covering(bundle, samples_per_cell=3)
    assert build_nerve(cells) == bundle.T
    for cell in cells:
        assert cell.contains(cell.samples).all()
        np.testing.assert_allclose(np.linalg.norm(cell.samples, axis=1), 1.0)


def test_grid_star_is_convex():
    bundle = grid_barycentric(2, 2)
    report = convex_star_report(bundle)
    assert list(report) == bundle.params["interior_vertices"]
    assert all(defect == pytest.approx(0.0, abs=1e-9) for defect in report.values())


def test_sphere_net_radius():
    points, epsilon = sphere_net(1)
    assert len(points) == 42
    probes = build_shape("sphere").grid(3000)
    gaps = np.linalg.norm(probes[:, None, :] - points[None, :, :], axis=-1).min(axis=1)
    assert gaps.max() <= epsilon + 1e-12


def test_build_template():
    assert build_template("polygon", 12).T.f_vector() == [12, 12]
    box = build_shape("box", m=2, ambient_dim=3)
    bundle = build_template("grid", 2, shape=box)
    assert bundle.vertex_positions.shape == (25, 3)
    np.testing.assert_allclose(np.abs(bundle.vertex_positions[:, :2]).max(), 1.0)
    with pytest.raises(ValueError):
        build_template("klein", 3)
