# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import math

import numpy as np
import pytest
import torch

from cechcollapse.component.errors import DegeneratePoint, EpsilonUnreachable
from cechcollapse.component.shapes import SampleSpec, build_shape, shape_from_dict

testcases = [
    ("circle", {}, 2, 1.0),
    ("sphere", {}, 3, 1.0),
    ("torus", {}, 4, 1.0),
    ("box", {"m": 2, "ambient_dim": 3}, 3, math.inf),
    ("two-point", {}, 2, 1.0),
]


@pytest.mark.parametrize("args", testcases)
def test_shape_kinds(args):
    kind, params, dim, reach = args
    shape = build_shape(kind, **params)
    assert shape.ambient_dim == dim
    assert shape.reach() == reach
    again = shape_from_dict(shape.to_dict())
    assert again.to_dict() == shape.to_dict()


def test_unknown_shape():
    with pytest.raises(ValueError):
        build_shape("klein-bottle")


def test_circle_net():
    shape = build_shape("circle")
    points, epsilon = shape.sample(SampleSpec(n=40))
    assert points.shape == (40, 2)
    assert epsilon == pytest.approx(math.sin(math.pi / 40))
    np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0)
    points, epsilon = shape.sample(SampleSpec(target_epsilon=0.0785))
    assert len(points) == 40
    assert epsilon <= 0.0785


def test_circle_net_covering():
    shape = build_shape("circle")
    points, epsilon = shape.sample(SampleSpec(target_epsilon=0.2))
    assert len(points) == 16
    probes = shape.grid(2000)
    gaps = np.linalg.norm(probes[:, None, :] - points[None, :, :], axis=-1).min(axis=1)
    # half-chord convention: the arc midpoint sits 2 sin(pi / 2n) away
    assert gaps.max() <= 2 * math.sin(math.pi / 32) + 1e-12
    assert epsilon == pytest.approx(gaps.max(), rel=1e-2)


def test_epsilon_unreachable():
    shape = build_shape("circle")
    with pytest.raises(EpsilonUnreachable):
        shape.sample(SampleSpec(n=8, target_epsilon=0.1))
    with pytest.raises(EpsilonUnreachable):
        shape.sample(SampleSpec(target_epsilon=1e-9))


def test_noisy_tube():
    shape = build_shape("circle")
    spec = SampleSpec(n=40, mode="noisy-tube", noise=0.01, seed=3)
    points, epsilon = shape.sample(spec)
    assert epsilon == pytest.approx(math.sin(math.pi / 40) + 0.01)
    assert shape.distance(points).max() <= 0.01 + 1e-12
    np.testing.assert_array_equal(points, shape.sample(spec)[0])


def test_on_shape_ignores_noise():
    assert SampleSpec(n=4, noise=0.3).noise == 0.0


def test_sphere_net():
    shape = build_shape("sphere")
    points, epsilon = shape.sample(SampleSpec(target_epsilon=0.3))
    assert epsilon <= 0.3
    np.testing.assert_allclose(np.linalg.norm(points, axis=1), 1.0)


def test_projection_and_medial_axis():
    sphere = build_shape("sphere")
    np.testing.assert_allclose(sphere.project([0.0, 0.0, 2.0]), [0.0, 0.0, 1.0])
    assert sphere.distance([0.0, 0.0, 0.25]) == pytest.approx(0.75)
    with pytest.raises(DegeneratePoint):
        sphere.project([0.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        sphere.distance([1.0, 0.0])


def test_projection_keeps_tensors():
    circle = build_shape("circle")
    out = circle.project(torch.tensor([[3.0, 4.0]], dtype=torch.float64))
    assert isinstance(out, torch.Tensor)
    torch.testing.assert_close(out, torch.tensor([[0.6, 0.8]], dtype=torch.float64))


def test_torus():
    torus = build_shape("torus")
    assert torus.distance([2.0, 0.0, 1.0, 0.0]) == pytest.approx(1.0)
    assert torus.distance([2.0, 0.0, 0.0, 0.5]) == pytest.approx(math.sqrt(1.25))
    np.testing.assert_allclose(torus.project([0.0, 3.0, -2.0, 0.0]), [0.0, 1.0, -1.0, 0.0])
    with pytest.raises(DegeneratePoint):
        torus.distance([0.0, 0.0, 1.0, 0.0])
    points, epsilon = torus.sample(SampleSpec(n=8))
    assert points.shape == (64, 4)
    assert epsilon == pytest.approx(2 * math.sqrt(2) * math.sin(math.pi / 16))


def test_box():
    box = build_shape("box", m=2, ambient_dim=3)
    assert box.distance([2.0, 0.0, 1.0]) == pytest.approx(math.sqrt(2))
    np.testing.assert_allclose(box.project([0.5, 2.0, 3.0]), [0.5, 1.0, 0.0])
    points, epsilon = box.sample(SampleSpec(target_epsilon=0.1))
    assert epsilon <= 0.1
    assert np.all(points[:, 2] == 0.0)
    np.testing.assert_allclose(box.boundary_margin([[0.5, -0.25, 0.0]]), [0.5])


def test_two_point_set():
    pair = build_shape("two-point")
    assert pair.distance([0.0, 1.0]) == pytest.approx(math.sqrt(2))
    np.testing.assert_allclose(pair.project([0.5, 0.0]), [1.0, 0.0])
    with pytest.raises(DegeneratePoint):
        pair.project([0.0, 3.0])
