# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import pytest

from cechcollapse.component.homology import betti_numbers_mod2, boundary_ranks_mod2, euler_characteristic, same_betti
from cechcollapse.component.simplicial_complex import SimplicialComplex
from cechcollapse.model.flat_torus import flat_torus_triangulation

testcases = [
    ([(0,)], [1]),
    ([(0, 1, 2)], [1, 0, 0]),
    ([(0, 1), (1, 2), (0, 2)], [1, 1]),
    ([(0, 1), (2, 3)], [2, 0]),
    ([(0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3)], [1, 0, 1]),
    # Moebius strip: one hole over GF(2)
    ([(0, 1, 2), (1, 2, 3), (2, 3, 4), (3, 4, 0), (4, 0, 1)], [1, 1, 0]),
]


@pytest.mark.parametrize("args", testcases)
def test_betti_numbers(args):
    simplices, betti = args
    K = SimplicialComplex(simplices)
    assert betti_numbers_mod2(K) == betti
    assert euler_characteristic(K) == sum((-1) ** i * b for i, b in enumerate(betti))


def test_projective_plane_mod2():
    # 6-vertex RP^2: over GF(2) every Betti number is 1
    faces = [
        (0, 1, 2), (0, 2, 3), (0, 3, 4), (0, 4, 5), (0, 1, 5),
        (1, 2, 4), (2, 3, 5), (1, 3, 4), (2, 4, 5), (1, 3, 5),
    ]
    K = SimplicialComplex(faces)
    assert euler_characteristic(K) == 1
    assert betti_numbers_mod2(K) == [1, 1, 1]


def test_torus_template():
    T = flat_torus_triangulation(8).T
    assert betti_numbers_mod2(T) == [1, 2, 1]
    assert euler_characteristic(T) == 0


def test_boundary_ranks():
    K = SimplicialComplex([(0, 1, 2)])
    assert boundary_ranks_mod2(K)[:3] == [0, 2, 1]


def test_same_betti():
    assert same_betti([1, 0, 0], [1])
    assert same_betti([1, 1], [1, 1, 0])
    assert not same_betti([1, 1], [1, 0])
    assert betti_numbers_mod2(SimplicialComplex()) == []
