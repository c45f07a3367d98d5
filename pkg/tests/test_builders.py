# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import math

import numpy as np
import pytest

from cechcollapse.component.builders import (
    Cell,
    PointCloud,
    build_cech,
    build_nerve,
    build_restricted_cech,
    build_rips,
    check_cech_in_rips,
    offset_betti_grid,
)
from cechcollapse.component.homology import betti_numbers_mod2
from cechcollapse.component.shapes import SampleSpec, build_shape
from cechcollapse.component.simplicial_complex import is_cycle_graph

SQUARE = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
TRIANGLE = np.array([(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)])

testcases = [
    (SQUARE, 0.4, [4, 0]),
    (SQUARE, 0.6, [1, 1]),
    (SQUARE, 0.75, [1, 0]),
    (TRIANGLE, 0.55, [1, 1]),
    (TRIANGLE, 0.6, [1, 0]),
]


@pytest.mark.parametrize("args", testcases)
def test_cech_betti(args):
    P, alpha, betti = args
    assert betti_numbers_mod2(build_cech(P, alpha)) == betti


def test_cech_vs_rips():
    cech = build_cech(TRIANGLE, 0.55)
    rips = build_rips(TRIANGLE, 0.55)
    assert (0, 1, 2) in rips
    assert (0, 1, 2) not in cech
    assert check_cech_in_rips(TRIANGLE, 0.55)
    assert is_cycle_graph(build_cech(SQUARE, 0.6))


def test_cech_boundary_ties():
    result = build_cech(SQUARE, 0.5, return_result=True)
    assert (0, 1) in result.complex
    assert len(result.ties) == 4
    assert result.values[(0, 1)] == pytest.approx(0.5)


def test_dim_cap():
    K = build_cech(SQUARE, 0.75, dim_cap=1)
    assert K.dimension == 1
    assert K.f_vector() == [4, 6]
    with pytest.raises(ValueError):
        build_cech(SQUARE, -1.0)


def test_restricted_cech_on_circle():
    circle = build_shape("circle")
    points, _ = circle.sample(SampleSpec(n=40))
    cech = build_cech(points, 0.5)
    result = build_restricted_cech(circle, points, 0.5, cech=cech, return_result=True)
    restricted = result.complex
    assert all(s in cech for s in restricted)
    assert betti_numbers_mod2(restricted) == [1, 1]
    assert betti_numbers_mod2(cech) == [1, 1]
    for s, value in result.values.items():
        assert value <= 0.5 + 1e-7
        np.testing.assert_allclose(np.linalg.norm(result.witnesses[s]), 1.0)


def test_point_cloud_files(tmp_path):
    cloud = PointCloud(SQUARE)
    path = str(tmp_path / "square.csv")
    cloud.save(path, epsilon=0.1, reach=1.0)
    again = PointCloud.load(path)
    np.testing.assert_array_equal(again.points, SQUARE)
    assert (tmp_path / "square.csv.json").exists()
    with pytest.raises(ValueError):
        PointCloud([(0.0, math.nan)])


def _arc(i, lo, hi):
    theta = np.radians(np.linspace(lo, hi, 60))
    samples = np.stack([np.cos(theta), np.sin(theta)], axis=1)

    def membership(points, tol):
        angle = np.degrees(np.arctan2(points[:, 1], points[:, 0]))
        shifted = (angle - lo) % 360.0
        return shifted <= (hi - lo) + tol

    return Cell(i, samples, membership)


def test_nerve_of_arcs():
    cells = [_arc(0, 0.0, 150.0), _arc(1, 120.0, 270.0), _arc(2, 240.0, 390.0)]
    result = build_nerve(cells, return_result=True)
    assert result.complex.f_vector() == [3, 3]
    assert betti_numbers_mod2(result.complex) == [1, 1]
    for s in result.complex:
        y = result.witnesses[s]
        assert all(cells[i].contains(y)[0] for i in s)
    assert build_nerve([]).f_vector() == []


def test_offset_betti_grid():
    points, _ = build_shape("circle").sample(SampleSpec(n=40))
    assert offset_betti_grid(points, 0.3) == (1, 1)
    assert offset_betti_grid(points, 1.2) == (1, 0)
    assert offset_betti_grid(points, 0.01) == (40, 0)
    with pytest.raises(ValueError):
        offset_betti_grid(np.zeros((3, 3)), 0.5)
