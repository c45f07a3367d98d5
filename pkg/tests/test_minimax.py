# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import math

import numpy as np
import pytest
import torch

from cechcollapse.component.minimax import (
    BallIntersection,
    ShapeMinimax,
    distance_to_ball_intersection,
    min_max_distance_over_shape,
)
from cechcollapse.component.errors import ToleranceNotMet
from cechcollapse.component.shapes import build_shape

CIRCLE = build_shape("circle")

testcases = [
    # symmetric pair around (1, 0)
    ([(math.cos(0.3), math.sin(0.3)), (math.cos(0.3), -math.sin(0.3))], 2 * math.sin(0.15), (1.0, 0.0)),
    ([(1.0, 0.0)], 0.0, (1.0, 0.0)),
    ([(2.0, 0.0), (2.0, 0.0)], 1.0, (1.0, 0.0)),
]


@pytest.mark.parametrize("args", testcases)
def test_circle_minimax(args):
    sigma, value, witness = args
    t_star, a = min_max_distance_over_shape(CIRCLE, np.array(sigma))
    assert t_star == pytest.approx(value, abs=1e-6)
    np.testing.assert_allclose(a, witness, atol=1e-5)


def test_antipodal_pair():
    t_star, a = min_max_distance_over_shape(CIRCLE, np.array([(1.0, 0.0), (-1.0, 0.0)]))
    assert t_star == pytest.approx(math.sqrt(2), abs=1e-6)
    assert abs(a[0]) == pytest.approx(0.0, abs=1e-5)


def test_batched_brackets():
    rng = np.random.default_rng(0)
    angles = rng.uniform(0, 0.5, size=(16, 3))
    centers = np.stack([np.cos(angles), np.sin(angles)], axis=-1) * 1.05
    result = ShapeMinimax(CIRCLE)(torch.as_tensor(centers))
    assert result.upper.shape == (16,)
    assert bool((result.lower <= result.upper + 1e-12).all())
    np.testing.assert_allclose(result.witness.norm(dim=-1).numpy(), 1.0)


def test_finite_shape_enumerates():
    pair = build_shape("two-point")
    t_star, a = min_max_distance_over_shape(pair, np.array([(-1.0, 0.5), (-1.0, -0.5)]))
    assert t_star == pytest.approx(0.5)
    np.testing.assert_array_equal(a, (-1.0, 0.0))


def test_ball_intersection_projection():
    balls = BallIntersection(torch.tensor([[[-0.2, 0.0], [0.2, 0.0]]], dtype=torch.float64), 0.5)
    inside = torch.tensor([[0.0, 0.1]], dtype=torch.float64)
    torch.testing.assert_close(balls.project(inside), inside)
    out = balls.project(torch.tensor([[1.0, 0.0]], dtype=torch.float64))
    torch.testing.assert_close(out, torch.tensor([[0.3, 0.0]], dtype=torch.float64))
    top = balls.project(torch.tensor([[0.0, 2.0]], dtype=torch.float64))
    torch.testing.assert_close(top, torch.tensor([[0.0, math.sqrt(0.21)]], dtype=torch.float64))
    assert float(balls.margin(top)) == pytest.approx(0.0, abs=1e-12)


def test_distance_to_ball_intersection():
    sigma = np.array([(1.5, 0.2), (1.5, -0.2)])
    dist, x, foot = distance_to_ball_intersection(CIRCLE, sigma, 0.3)
    assert dist == pytest.approx(0.5 - math.sqrt(0.05), abs=1e-7)
    np.testing.assert_allclose(foot, (1.0, 0.0), atol=1e-7)
    assert np.linalg.norm(sigma - x, axis=1).max() <= 0.3 + 1e-9
    touching = np.array([(1.0, 0.1), (1.0, -0.1)])
    assert distance_to_ball_intersection(CIRCLE, touching, 0.5)[0] == pytest.approx(0.0, abs=1e-9)


def test_wide_bracket_is_refused():
    sigma = np.array([(1.5, 0.0), (0.0, 1.2), (0.3, 0.3)])
    # one dual step leaves the bracket about 0.1 wide
    starved = ShapeMinimax(CIRCLE, max_iter=1, descent_iter=1)
    with pytest.raises(ToleranceNotMet) as e:
        min_max_distance_over_shape(CIRCLE, sigma, solver=starved)
    assert e.value.evidence["upper"] - e.value.evidence["lower"] > 1e-3
