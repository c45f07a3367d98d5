# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import itertools
import math

import numpy as np
import pytest

from cechcollapse.component.miniball import diameter, miniball, miniball_radius

SQUARE = [(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]

testcases = [
    (SQUARE, math.sqrt(2) / 2, (0.5, 0.5)),
    ([(0.0, 0.0), (1.0, 0.0), (0.5, math.sqrt(3) / 2)], 1 / math.sqrt(3), (0.5, math.sqrt(3) / 6)),
    ([(0.0, 0.0), (2.0, 0.0), (1.0, 0.1)], 1.0, (1.0, 0.0)),
    ([(3.0, -1.0)], 0.0, (3.0, -1.0)),
    ([(1, 1, 1), (1, -1, -1), (-1, 1, -1), (-1, -1, 1)], math.sqrt(3), (0.0, 0.0, 0.0)),
]


@pytest.mark.parametrize("args", testcases)
def test_miniball(args):
    points, radius, center = args
    ball = miniball(points)
    assert ball.radius == pytest.approx(radius, abs=1e-12)
    np.testing.assert_allclose(ball.center, center, atol=1e-12)
    assert miniball_radius(points) == pytest.approx(radius, abs=1e-12)


def test_obtuse_support():
    ball = miniball([(0.0, 0.0), (2.0, 0.0), (1.0, 0.1)])
    assert ball.support == (0, 1)


@pytest.mark.parametrize("dim", [2, 3, 6])
def test_random_clouds(dim):
    rng = np.random.default_rng(dim)
    for _ in range(20):
        X = rng.normal(size=(int(rng.integers(2, 12)), dim))
        ball = miniball(X)
        assert np.linalg.norm(X - ball.center, axis=1).max() <= ball.radius * (1 + 1e-9) + 1e-12
        assert ball.radius >= diameter(X) / 2 - 1e-12
        support = X[list(ball.support)]
        np.testing.assert_allclose(np.linalg.norm(support - ball.center, axis=1), ball.radius, rtol=1e-7)


def test_diameter():
    assert diameter(SQUARE) == pytest.approx(math.sqrt(2))
    assert diameter([(1.0, 2.0)]) == 0.0


def test_empty():
    with pytest.raises(ValueError):
        miniball(np.zeros((0, 2)))


def _small_ball_radius(points):
    # closed form for at most three points in the plane
    if len(points) == 1:
        return 0.0
    if len(points) == 2:
        return float(np.linalg.norm(points[0] - points[1])) / 2
    a, b, c = sorted(np.linalg.norm(points[i] - points[j]) for i, j in ((0, 1), (1, 2), (0, 2)))
    if a * a + b * b <= c * c:
        return c / 2
    u, v = points[1] - points[0], points[2] - points[0]
    area = abs(u[0] * v[1] - u[1] * v[0]) / 2
    return a * b * c / (4 * area)


@pytest.mark.parametrize("seed", range(10))
def test_miniball_matches_support_search(seed):
    rng = np.random.default_rng(seed)
    X = rng.uniform(-1.0, 1.0, size=(7, 2))
    # the enclosing radius is the largest radius over supports of at most three points
    brute = max(
        _small_ball_radius(X[list(S)]) for k in (1, 2, 3) for S in itertools.combinations(range(len(X)), k)
    )
    assert miniball(X).radius == pytest.approx(brute, rel=1e-9)


@pytest.mark.parametrize("seed", range(5))
def test_miniball_subset_monotone(seed):
    rng = np.random.default_rng(100 + seed)
    X = rng.normal(size=(9, 3))
    full = miniball(X).radius
    for k in range(1, len(X)):
        subset = X[rng.choice(len(X), size=k, replace=False)]
        assert miniball(subset).radius <= full * (1 + 1e-9)
