# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from cechcollapse.component.alpha_hull import cap_height
from cechcollapse.component.builders import Cell
from cechcollapse.component.errors import ContainmentFail, MatchCollision, PreconditionViolated, ProbeTooCoarse
from cechcollapse.component.robustness import (
    RobustVerdict,
    check_nice_triangulation,
    check_robust_covering_direct,
    check_robust_covering_sufficient,
    hull_vertices,
    match_vertices_to_samples,
    matching_margin,
    vertex_separation,
)
from cechcollapse.component.shapes import SampleSpec, build_shape
from cechcollapse.model.icosphere import icosphere, polygon
from cechcollapse.model.triangulation import build_star_covering

CIRCLE = build_shape("circle")

testcases = [
    ((0.1, 0.02, 0.3), True),
    ((0.1, 0.01, 0.3), False),
    ((0.3, 0.02, 0.3), False),
    ((0.4, 1.0, 0.3), False),
    ((0.0, 0.0, 0.3), True),
]


@pytest.mark.parametrize("args", testcases)
def test_robust_covering_sufficient(args):
    (rho, delta, alpha), expected = args
    assert check_robust_covering_sufficient(rho, delta, alpha) is expected


def test_sufficient_rejects_negative():
    with pytest.raises(ValueError):
        check_robust_covering_sufficient(-0.1, 0.02, 0.3)


def _polygon_bundle():
    bundle = polygon(12)
    build_star_covering(bundle)
    return bundle


def _point_cell(i, samples):
    tree = cKDTree(samples)

    def membership(points, tol):
        return tree.query(points)[0] <= tol

    return Cell(i, samples, membership)


def test_polygon_covering_is_robust():
    bundle = _polygon_bundle()
    report = check_robust_covering_direct(bundle.covering, CIRCLE, 0.5)
    assert report.verdict is RobustVerdict.ROBUST
    assert report.radii_ok
    assert report.cell_nerve == [12, 12]
    assert report.witnesses == []
    assert report.to_dict()["verdict"] == "Robust"


def test_cells_inside_a_hull_are_not_robust():
    # a C-shaped cell whose alpha-hull swallows a cluster it does not touch
    theta = np.radians(np.linspace(30.0, 330.0, 41))
    arc = 0.3 * np.stack([np.cos(theta), np.sin(theta)], axis=1)
    cluster = 0.02 * np.array([(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)])
    cells = [_point_cell(0, arc), _point_cell(1, cluster)]
    box = build_shape("box", m=2)
    report = check_robust_covering_direct(cells, box, 1.0)
    assert report.verdict is RobustVerdict.NOT_ROBUST
    assert report.cell_nerve == [2]
    assert any(w["simplex"] == [0, 1] for w in report.witnesses)


def test_oversized_cells_are_not_robust():
    bundle = _polygon_bundle()
    report = check_robust_covering_direct(bundle.covering, CIRCLE, 0.2)
    assert not report.radii_ok
    assert report.verdict is RobustVerdict.NOT_ROBUST
    assert report.worst_radius_margin < 0


def test_matching():
    bundle = _polygon_bundle()
    points, epsilon = CIRCLE.sample(SampleSpec(n=60))
    f = match_vertices_to_samples(bundle, points, 0.5, epsilon)
    assert f == {v: 5 * v for v in range(12)}
    assert vertex_separation(bundle) == pytest.approx(math.sin(math.pi / 12))
    assert matching_margin(bundle, 0.5) == pytest.approx(0.5 - 2 * math.sin(math.pi / 24))


def test_matching_failures():
    bundle = _polygon_bundle()
    coarse, _ = CIRCLE.sample(SampleSpec(n=6))
    with pytest.raises(MatchCollision):
        match_vertices_to_samples(bundle, coarse, 0.5)
    fine, _ = CIRCLE.sample(SampleSpec(n=60))
    with pytest.raises(ContainmentFail):
        match_vertices_to_samples(bundle, fine, 0.2)


def test_nice_polygon():
    bundle = _polygon_bundle()
    alpha = 0.5
    delta = cap_height(alpha, bundle.rho)
    report = check_nice_triangulation(bundle, CIRCLE, bundle.rho * (1 + 1e-9) + 1e-12, delta, probe_density=720)
    assert report.passed
    assert report.rho_measured == pytest.approx(bundle.rho)
    assert report.delta_max > delta
    assert report.to_dict()["passed"]


def test_nice_fails_small_rho():
    bundle = _polygon_bundle()
    report = check_nice_triangulation(bundle, CIRCLE, 0.0, 0.01, probe_density=720)
    assert not report.condition_ii
    assert len(report.failures_ii) == 12
    assert not report.passed


def test_hull_vertices():
    square = np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0), (0.5, 0.5)])
    assert len(hull_vertices(square)) == 4
    segment = np.array([(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0)])
    assert len(hull_vertices(segment)) == 4


def test_undecided_hull_nerve_is_indeterminate():
    pair = np.array([(-0.5, 0.0), (0.5, 0.0)])
    # (0, 0.10) lies in the sandwich gap of the pair's 1-hull
    cells = [_point_cell(0, pair), _point_cell(1, np.array([(0.0, 0.10)]))]
    report = check_robust_covering_direct(cells, CIRCLE, 1.0)
    assert report.verdict is RobustVerdict.INDETERMINATE
    assert not report.robust
    assert report.radii_ok
    assert report.witnesses == []
    assert report.undecided == [[0, 1]]
    assert report.hull_nerve_certain == [2]
    assert report.hull_nerve_possible == [2, 1]


def _nice(bundle, delta):
    return check_nice_triangulation(bundle, CIRCLE, bundle.rho * (1 + 1e-9) + 1e-12, delta, probe_density=720)


def test_nice_fails_large_delta():
    bundle = _polygon_bundle()
    report = _nice(bundle, 0.5)
    assert report.condition_i and report.condition_ii
    assert not report.condition_iii
    assert not report.passed
    assert report.failures_iii
    assert all(f["hull_distance"] <= 0.5 for f in report.failures_iii)
    # nearest grid point outside a star lies 15.5 degrees past the end of the cell
    assert report.delta_max == pytest.approx(2 * math.sin(math.radians(7.75)), abs=1e-6)
    assert report.margin_iii < 0


def test_nice_margin_below_grid_spacing():
    bundle = _polygon_bundle()
    delta_max = _nice(bundle, 0.5).delta_max
    resolution = 2 * math.sin(math.pi / 720)
    with pytest.raises(ProbeTooCoarse):
        _nice(bundle, delta_max - 0.25 * resolution)


def test_rho_decreases_with_resolution():
    rhos = []
    for n in (6, 12, 24, 48):
        bundle = polygon(n)
        build_star_covering(bundle)
        rhos.append(bundle.rho)
    assert all(a > b for a, b in zip(rhos, rhos[1:]))
    assert rhos[1] == pytest.approx(2 * math.sin(math.pi / 24))

    rhos = []
    for level in (0, 1, 2):
        bundle = icosphere(level)
        build_star_covering(bundle, samples_per_cell=3)
        rhos.append(bundle.rho)
    assert all(a > b for a, b in zip(rhos, rhos[1:]))


def test_matching_needs_epsilon_below_margin():
    bundle = _polygon_bundle()
    points, epsilon = CIRCLE.sample(SampleSpec(n=8))
    assert epsilon > matching_margin(bundle, 0.5)
    with pytest.raises(PreconditionViolated):
        match_vertices_to_samples(bundle, points, 0.5, epsilon)
    # forced through, 8 samples cannot serve 12 vertices
    with pytest.raises(MatchCollision):
        match_vertices_to_samples(bundle, points, 0.5, epsilon, force=True)
