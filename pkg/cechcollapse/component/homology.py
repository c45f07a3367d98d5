# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

from typing import Dict, List


def _rank_mod2(columns) -> int:
    # columns are python ints used as GF(2) bit vectors; basis keyed by pivot bit
    pivots: Dict[int, int] = {}
    rank = 0
    for col in columns:
        while col:
            p = col.bit_length() - 1
            basis = pivots.get(p)
            if basis is None:
                pivots[p] = col
                rank += 1
                break
            col ^= basis
    return rank


def boundary_ranks_mod2(K) -> List[int]:
    """ranks[k] = rank of the boundary map C_k -> C_{k-1} over GF(2)."""
    by_dim: List[List[tuple]] = [[] for _ in range(K.dimension + 1)]
    for s in K.simplices:
        by_dim[len(s) - 1].append(s)
    ranks = [0] * (K.dimension + 2)
    index = {s: i for i, s in enumerate(sorted(by_dim[0]))} if by_dim else {}
    for k in range(1, K.dimension + 1):
        columns = []
        for s in sorted(by_dim[k]):
            col = 0
            for i in range(len(s)):
                col |= 1 << index[s[:i] + s[i + 1 :]]
            columns.append(col)
        ranks[k] = _rank_mod2(columns)
        index = {s: i for i, s in enumerate(sorted(by_dim[k]))}
    return ranks


def betti_numbers_mod2(K) -> List[int]:
    if len(K) == 0:
        return []
    f = K.f_vector()
    ranks = boundary_ranks_mod2(K)
    return [f[k] - ranks[k] - ranks[k + 1] for k in range(len(f))]


def euler_characteristic(K) -> int:
    return sum((-1) ** i * n for i, n in enumerate(K.f_vector()))


def same_betti(a, b) -> bool:
    """Compare Betti sequences, ignoring trailing zeros from dimension drops."""

    def strip(xs):
        xs = list(xs or [])
        while xs and xs[-1] == 0:
            xs.pop()
        return xs

    return strip(a) == strip(b)
