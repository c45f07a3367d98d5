# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import itertools
from collections import defaultdict
from typing import Dict, Iterable, Iterator, List, Optional, Set, Tuple

import networkx as nx

from cechcollapse.component.collapse_trace import CollapseStep
from cechcollapse.component.errors import InvalidSimplex, NotFreePair

Simplex = Tuple[int, ...]


def make_simplex(vertices: Iterable[int]) -> Simplex:
    vertices = [int(v) for v in vertices]
    if not vertices:
        raise InvalidSimplex("a simplex needs at least one vertex")
    simplex = tuple(sorted(vertices))
    if len(set(simplex)) != len(simplex):
        raise InvalidSimplex(f"duplicate vertex ids in {simplex}", simplex=simplex)
    if simplex[0] < 0:
        raise InvalidSimplex(f"negative vertex id in {simplex}", simplex=simplex)
    return simplex


def simplex_key(simplex: Simplex):
    return (len(simplex), simplex)


def faces(simplex: Simplex, proper: bool = False) -> Iterator[Simplex]:
    top = len(simplex) - 1 if proper else len(simplex)
    for size in range(1, top + 1):
        yield from itertools.combinations(simplex, size)


def boundary(simplex: Simplex) -> List[Simplex]:
    if len(simplex) == 1:
        return []
    return [simplex[:i] + simplex[i + 1 :] for i in range(len(simplex))]


def is_face(small: Simplex, big: Simplex) -> bool:
    return set(small).issubset(big)


class SimplicialComplex(object):
    """Face-closed set of simplices with a vertex -> cofaces index.

    Simplices are sorted tuples of non-negative vertex ids. The set of
    inclusion-maximal simplices is maintained incrementally, so collapse
    detection only touches the cofaces of the face being collapsed.
    """

    def __init__(self, simplices: Iterable[Iterable[int]] = ()):
        self._simplices: Set[Simplex] = set()
        self._cofaces: Dict[int, Set[Simplex]] = defaultdict(set)
        self._maximal: Set[Simplex] = set()
        for s in simplices:
            self.insert_closure(s)

    def __len__(self):
        return len(self._simplices)

    def __contains__(self, simplex):
        return tuple(sorted(simplex)) in self._simplices

    def __iter__(self):
        return iter(self.sorted_simplices())

    def __eq__(self, other):
        if not isinstance(other, SimplicialComplex):
            return NotImplemented
        return self._simplices == other._simplices

    def __repr__(self):
        return f"SimplicialComplex(f_vector={self.f_vector()})"

    @property
    def simplices(self) -> frozenset:
        return frozenset(self._simplices)

    @property
    def maximal_simplices(self) -> frozenset:
        return frozenset(self._maximal)

    @property
    def vertices(self) -> List[int]:
        return sorted(self._cofaces.keys())

    @property
    def vertex_count(self) -> int:
        return len(self._cofaces)

    @property
    def dimension(self) -> int:
        if not self._simplices:
            return -1
        return max(len(s) for s in self._maximal) - 1

    def copy(self):
        other = SimplicialComplex()
        other._simplices = set(self._simplices)
        other._cofaces = defaultdict(set, {v: set(c) for v, c in self._cofaces.items()})
        other._maximal = set(self._maximal)
        return other

    def sorted_simplices(self) -> List[Simplex]:
        return sorted(self._simplices, key=simplex_key)

    def simplices_of_dim(self, dim: int) -> List[Simplex]:
        return sorted(s for s in self._simplices if len(s) == dim + 1)

    def f_vector(self) -> List[int]:
        counts = [0] * (self.dimension + 1)
        for s in self._simplices:
            counts[len(s) - 1] += 1
        return counts

    def insert_closure(self, simplex: Iterable[int]) -> "SimplicialComplex":
        simplex = make_simplex(simplex)
        if simplex in self._simplices:
            return self
        for face in faces(simplex, proper=True):
            if face in self._maximal:
                self._maximal.discard(face)
            if face not in self._simplices:
                self._add(face)
        self._add(simplex)
        # no coface of a new simplex can exist in a closed complex
        self._maximal.add(simplex)
        return self

    def _add(self, simplex: Simplex):
        self._simplices.add(simplex)
        for v in simplex:
            self._cofaces[v].add(simplex)

    def _discard(self, simplex: Simplex):
        self._simplices.discard(simplex)
        self._maximal.discard(simplex)
        for v in simplex:
            bucket = self._cofaces.get(v)
            if bucket is None:
                continue
            bucket.discard(simplex)
            if not bucket:
                del self._cofaces[v]

    def cofaces(self, simplex: Iterable[int]) -> Set[Simplex]:
        """All stored simplices containing `simplex`, itself included."""
        simplex = tuple(sorted(simplex))
        buckets = sorted((self._cofaces.get(v, set()) for v in simplex), key=len)
        if not buckets or not buckets[0]:
            return set()
        result = set(buckets[0])
        for bucket in buckets[1:]:
            result &= bucket
            if not result:
                break
        return result

    def is_maximal(self, simplex) -> bool:
        return tuple(sorted(simplex)) in self._maximal

    def free_coface(self, simplex) -> Optional[Simplex]:
        """Return sigma_max if (simplex, sigma_max) is a free pair, else None."""
        simplex = tuple(sorted(simplex))
        delta = self.cofaces(simplex)
        if not delta:
            return None
        top = max(delta, key=len)
        if top == simplex:
            return None
        top_set = set(top)
        if all(top_set.issuperset(s) for s in delta):
            return top
        return None

    def collapse(self, sigma_min, event_value: float = 0.0, witness=None) -> CollapseStep:
        """Remove every coface of `sigma_min` in place and return the step record.

        Raises NotFreePair unless the cofaces have a unique maximal element
        distinct from `sigma_min`.
        """
        sigma_min = tuple(sorted(sigma_min))
        if sigma_min not in self._simplices:
            raise NotFreePair(f"{sigma_min} is not in the complex", sigma_min=sigma_min)
        delta = self.cofaces(sigma_min)
        top = max(delta, key=len)
        if top == sigma_min:
            raise NotFreePair(
                f"{sigma_min} is maximal; nothing to pair it with", sigma_min=sigma_min
            )
        top_set = set(top)
        offenders = [s for s in delta if not top_set.issuperset(s)]
        if offenders:
            raise NotFreePair(
                f"cofaces of {sigma_min} have several maximal elements",
                sigma_min=sigma_min,
                maximal=sorted(
                    (s for s in delta if self.is_maximal(s)), key=simplex_key
                ),
            )
        for s in delta:
            self._discard(s)
        for u in sigma_min:
            facet = tuple(v for v in top if v != u)
            if facet in self._simplices and self.cofaces(facet) == {facet}:
                self._maximal.add(facet)
        return CollapseStep(
            sigma_min=sigma_min,
            sigma_max=top,
            removed=frozenset(delta),
            event_value=float(event_value),
            witness=None if witness is None else tuple(float(x) for x in witness),
        )

    def remove_simplices(self, removed: Iterable[Simplex]):
        """Drop simplices without collapse checks; the caller keeps closure."""
        removed = set(tuple(sorted(s)) for s in removed)
        for s in removed:
            self._discard(s)
        touched = set()
        for s in removed:
            touched.update(boundary(s))
        for f in touched:
            if f in self._simplices and self.cofaces(f) == {f}:
                self._maximal.add(f)

    def is_face_closed(self) -> bool:
        return all(f in self._simplices for s in self._simplices for f in boundary(s))

    def maximal_index_is_exact(self) -> bool:
        expected = {s for s in self._simplices if self.cofaces(s) == {s}}
        return expected == self._maximal

    def skeleton(self, dim: int) -> "SimplicialComplex":
        return SimplicialComplex(s for s in self._simplices if len(s) <= dim + 1)

    def star(self, vertex: int) -> Set[Simplex]:
        return set(self._cofaces.get(vertex, set()))

    def link(self, vertex: int) -> "SimplicialComplex":
        link = SimplicialComplex()
        for s in self._cofaces.get(vertex, ()):
            rest = tuple(v for v in s if v != vertex)
            if rest:
                link.insert_closure(rest)
        return link

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.vertices)
        g.add_edges_from(s for s in self._simplices if len(s) == 2)
        return g

    def relabel(self, f) -> "SimplicialComplex":
        return SimplicialComplex(tuple(f[v] for v in s) for s in self._maximal)

    def to_lines(self, comment: Optional[str] = None) -> List[str]:
        lines = []
        if comment:
            lines.extend(f"# {line}" for line in comment.splitlines())
        lines.extend(" ".join(str(v) for v in s) for s in self.sorted_simplices())
        return lines

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "SimplicialComplex":
        complex_ = cls()
        for line in lines:
            line = line.split("#", 1)[0].strip()
            if line:
                complex_.insert_closure(int(tok) for tok in line.split())
        return complex_

    def to_dict(self, betti=None) -> dict:
        out = {"simplices": [list(s) for s in self.sorted_simplices()]}
        if betti is not None:
            out["betti"] = list(betti)
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "SimplicialComplex":
        return cls(data["simplices"])


def insert_closure(K: SimplicialComplex, s: Iterable[int]) -> SimplicialComplex:
    return K.copy().insert_closure(s)


def elementary_collapse(
    K: SimplicialComplex, sigma_min, event_value: float = 0.0, witness=None
) -> Tuple[SimplicialComplex, CollapseStep]:
    result = K.copy()
    step = result.collapse(sigma_min, event_value=event_value, witness=witness)
    return result, step


def is_cycle_graph(K: SimplicialComplex) -> bool:
    if len(K) == 0 or K.dimension != 1:
        return False
    if any(len(s) != 2 for s in K.maximal_simplices):
        return False
    g = K.graph()
    return nx.is_connected(g) and all(deg == 2 for _, deg in g.degree())


def is_closed_surface(K: SimplicialComplex) -> bool:
    if len(K) == 0 or any(len(s) != 3 for s in K.maximal_simplices):
        return False
    for edge in K.simplices_of_dim(1):
        if sum(1 for s in K.cofaces(edge) if len(s) == 3) != 2:
            return False
    return all(is_cycle_graph(K.link(v)) for v in K.vertices)


def are_isomorphic_under_map(K1: SimplicialComplex, K2: SimplicialComplex, f) -> bool:
    missing = [v for v in K1.vertices if v not in f]
    if missing:
        raise ValueError(f"vertex map undefined on {missing}")
    images = [f[v] for v in K1.vertices]
    if len(set(images)) != len(images):
        return False
    mapped = {tuple(sorted(f[v] for v in s)) for s in K1.simplices}
    return mapped == set(K2.simplices)
