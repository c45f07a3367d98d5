# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial.distance import pdist

# basis solves use exact rationals up to this ambient dimension
EXACT_MAX_DIM = 4

# relative slack of the floating point containment test
FLOAT_CONTAINMENT_SLACK = 1e-12


@dataclass(frozen=True)
class Ball:
    center: np.ndarray
    radius: float
    support: Tuple[int, ...] = ()

    def contains(self, x, tol: float = 0.0) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.linalg.norm(x - self.center) <= self.radius + tol)


def _solve_exact(M: List[List[Fraction]], b: List[Fraction]) -> Optional[List[Fraction]]:
    n = len(b)
    A = [row[:] + [b[i]] for i, row in enumerate(M)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if A[r][col] != 0), None)
        if pivot is None:
            return None
        A[col], A[pivot] = A[pivot], A[col]
        inv = 1 / A[col][col]
        for r in range(n):
            if r != col and A[r][col] != 0:
                factor = A[r][col] * inv
                A[r] = [a - factor * p for a, p in zip(A[r], A[col])]
    return [A[i][n] / A[i][i] for i in range(n)]


class _Basis(object):
    """Smallest ball with a given support set on its boundary.

    The centre lies in the affine hull of the support, so it solves the
    Gram system 2<v_j, v_k> lambda_k = |v_j|^2 with v_j = s_j - s_0.
    """

    def __init__(self, support, exact: bool):
        self.exact = exact
        self.center = None
        self.r2 = -1
        if not support:
            return
        p0 = support[0]
        if len(support) == 1:
            self.center, self.r2 = list(p0), 0
            return
        vs = [[a - b for a, b in zip(p, p0)] for p in support[1:]]
        m = len(vs)
        M = [[2 * sum(a * b for a, b in zip(vs[j], vs[k])) for k in range(m)] for j in range(m)]
        rhs = [sum(a * a for a in v) for v in vs]
        lam = _solve_exact(M, rhs) if exact else None
        if lam is None:
            lam = np.linalg.lstsq(np.array(M, dtype=float), np.array(rhs, dtype=float), rcond=None)[0]
        offset = [sum(lam[j] * vs[j][i] for j in range(m)) for i in range(len(p0))]
        self.center = [c + o for c, o in zip(p0, offset)]
        self.r2 = sum(o * o for o in offset)

    def contains(self, p) -> bool:
        if self.center is None:
            return False
        d2 = sum((a - b) * (a - b) for a, b in zip(p, self.center))
        if self.exact:
            return d2 <= self.r2
        return d2 <= self.r2 * (1 + FLOAT_CONTAINMENT_SLACK) + FLOAT_CONTAINMENT_SLACK


def _move_to_front(pts, order: List[int], end: int, support: List[int], dim: int, exact: bool):
    basis = _Basis([pts[i] for i in support], exact)
    if len(support) == dim + 1:
        return basis, support
    best_support = support
    i = 0
    while i < end:
        j = order[i]
        if not basis.contains(pts[j]):
            basis, best_support = _move_to_front(pts, order, i, support + [j], dim, exact)
            order.insert(0, order.pop(i))
        i += 1
    return basis, best_support


def miniball(points: Sequence[Sequence[float]], exact: Optional[bool] = None) -> Ball:
    """Smallest enclosing ball (move-to-front Welzl recursion).

    Basis solves run in exact rational arithmetic for ambient dimension up
    to EXACT_MAX_DIM, so the containment tests near a threshold are exact
    for the floating point inputs.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if pts.size == 0:
        raise ValueError("miniball of an empty point set")
    if not np.all(np.isfinite(pts)):
        raise ValueError("miniball needs finite coordinates")
    n, dim = pts.shape
    if exact is None:
        exact = dim <= EXACT_MAX_DIM
    coords = [[Fraction(x) for x in row] for row in pts.tolist()] if exact else pts.tolist()
    order = list(range(n))
    basis, support = _move_to_front(coords, order, n, [], dim, exact)
    center = np.array([float(c) for c in basis.center])
    radius = math.sqrt(max(float(basis.r2), 0.0))
    if not exact:
        # certify the floating point result against every input point
        radius = max(radius, float(np.max(np.linalg.norm(pts - center, axis=1))))
    return Ball(center=center, radius=radius, support=tuple(sorted(support)))


def miniball_radius(points) -> float:
    return miniball(points).radius


def diameter(points) -> float:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    if len(pts) < 2:
        return 0.0
    return float(pdist(pts).max())
