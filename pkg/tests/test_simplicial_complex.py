# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import numpy as np
import pytest

from cechcollapse.component.errors import InvalidSimplex, NotFreePair
from cechcollapse.component.homology import betti_numbers_mod2, same_betti
from cechcollapse.component.simplicial_complex import (
    SimplicialComplex,
    are_isomorphic_under_map,
    elementary_collapse,
    insert_closure,
    is_closed_surface,
    is_cycle_graph,
    make_simplex,
)

OCTAHEDRON = [(a, b, c) for a in (0, 1) for b in (2, 3) for c in (4, 5)]


def random_complex(rng, vertices=7, count=12):
    K = SimplicialComplex()
    for _ in range(count):
        size = int(rng.integers(1, 5))
        K.insert_closure(rng.choice(vertices, size=size, replace=False).tolist())
    return K


testcases = [
    [],
    [1, 1],
    [-1, 2],
]


@pytest.mark.parametrize("args", testcases)
def test_invalid_simplex(args):
    with pytest.raises(InvalidSimplex):
        make_simplex(args)


def test_insert_closure():
    K = SimplicialComplex([(2, 0, 1)])
    assert K.f_vector() == [3, 3, 1]
    assert K.maximal_simplices == frozenset({(0, 1, 2)})
    K2 = insert_closure(K, (2, 3))
    assert K.f_vector() == [3, 3, 1]
    assert K2.f_vector() == [4, 4, 1]
    assert K2.maximal_index_is_exact()


def test_free_pairs():
    full = SimplicialComplex([(0, 1, 2)])
    assert full.free_coface((0, 1)) == (0, 1, 2)
    assert full.free_coface((0,)) is None
    hollow = SimplicialComplex([(0, 1), (1, 2), (0, 2)])
    assert all(hollow.free_coface(s) is None for s in hollow.simplices)


def test_collapse_removes_interval():
    K = SimplicialComplex([(0, 1, 2)])
    step = K.collapse((0, 1), event_value=0.25)
    assert step.sigma_max == (0, 1, 2)
    assert step.removed == frozenset({(0, 1), (0, 1, 2)})
    assert K.f_vector() == [3, 2]
    assert K.maximal_simplices == frozenset({(0, 2), (1, 2)})
    assert K.maximal_index_is_exact()


def test_collapse_rejects_non_free():
    K = SimplicialComplex([(0, 1, 2), (1, 2, 3)])
    with pytest.raises(NotFreePair):
        K.collapse((1, 2))
    with pytest.raises(NotFreePair):
        K.collapse((0, 1, 2))
    with pytest.raises(NotFreePair):
        K.collapse((5,))


def test_elementary_collapse_is_pure():
    K = SimplicialComplex([(0, 1)])
    K2, step = elementary_collapse(K, (0,))
    assert K.f_vector() == [2, 1]
    assert K2.simplices == frozenset({(1,)})
    assert step.removed == frozenset({(0,), (0, 1)})


def test_surfaces_and_cycles():
    octahedron = SimplicialComplex(OCTAHEDRON)
    assert octahedron.f_vector() == [6, 12, 8]
    assert is_closed_surface(octahedron)
    assert is_cycle_graph(octahedron.link(0))
    assert betti_numbers_mod2(octahedron) == [1, 0, 1]
    assert not is_closed_surface(SimplicialComplex([(0, 1, 2)]))
    assert is_cycle_graph(SimplicialComplex([(0, 1), (1, 2), (0, 2)]))
    assert not is_cycle_graph(SimplicialComplex([(0, 1), (1, 2)]))


def test_relabel_and_isomorphism():
    K = SimplicialComplex([(0, 1), (1, 2), (0, 2)])
    f = {0: 10, 1: 20, 2: 30}
    image = K.relabel(f)
    assert image.vertices == [10, 20, 30]
    assert are_isomorphic_under_map(K, image, f)
    assert not are_isomorphic_under_map(K, image, {0: 10, 1: 10, 2: 30})
    with pytest.raises(ValueError):
        are_isomorphic_under_map(K, image, {0: 10})


def test_text_and_dict_formats():
    K = SimplicialComplex(OCTAHEDRON + [(6, 7)])
    assert SimplicialComplex.from_lines(K.to_lines("octahedron plus an edge")) == K
    assert SimplicialComplex.from_dict(K.to_dict()) == K
    assert K.to_lines()[0] == "0"


def test_skeleton_and_star():
    K = SimplicialComplex([(0, 1, 2, 3)])
    assert K.skeleton(1).f_vector() == [4, 6]
    assert len(K.star(0)) == 8


@pytest.mark.parametrize("seed", range(20))
def test_random_collapses_preserve_homology(seed):
    rng = np.random.default_rng(seed)
    K = random_complex(rng)
    betti = betti_numbers_mod2(K)
    while True:
        free = sorted(s for s in K.simplices if K.free_coface(s) is not None)
        if not free:
            break
        K.collapse(free[int(rng.integers(len(free)))])
        assert K.is_face_closed()
        assert K.maximal_index_is_exact()
        assert same_betti(betti_numbers_mod2(K), betti)


@pytest.mark.slow
def test_random_collapses_acceptance():
    rng = np.random.default_rng(2023)
    for _ in range(200):
        K = random_complex(rng, vertices=10, count=20)
        betti = betti_numbers_mod2(K)
        while True:
            free = sorted(s for s in K.simplices if K.free_coface(s) is not None)
            if not free:
                break
            K.collapse(free[int(rng.integers(len(free)))])
            assert K.is_face_closed()
            assert same_betti(betti_numbers_mod2(K), betti)
