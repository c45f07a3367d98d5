# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import enum
import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
from scipy.optimize import linprog, minimize, nnls
from scipy.special import ndtri
from scipy.stats import qmc

from cechcollapse.component.errors import Infeasible, PreconditionViolated
from cechcollapse.component.miniball import miniball

logger = logging.getLogger(__name__)

# direction-sampled clencher search uses this many directions per ambient dimension
DIRECTIONS_PER_DIM = 64

# row weight pinning sum(lambda) = 1 in the nnls hull distance
HULL_WEIGHT = 1e4


class HullVerdict(enum.Enum):
    INSIDE = "Inside"
    OUTSIDE = "Outside"
    UNKNOWN = "Unknown"

    def __str__(self):
        return self.value


def cap_height(r: float, rho: float) -> float:
    """Height r - sqrt(r^2 - rho^2) of a spherical cap with base radius rho."""
    if math.isinf(r):
        return 0.0
    if rho < 0 or rho > r * (1 + 1e-12):
        raise ValueError(f"cap_height needs 0 <= rho <= r, got r={r}, rho={rho}")
    return r - math.sqrt(max(r * r - rho * rho, 0.0))


@dataclass
class LemmaCheck:
    # X in B(z, alpha)  =>  B(c, alpha - sqrt(alpha^2 - rho^2)) in B(z, alpha)
    antecedent_i: bool
    consequent_i: bool
    # B(c, alpha - sqrt(alpha^2 - rho^2)) in open B(z, alpha)  =>  X meets open B(z, alpha)
    antecedent_ii: bool
    consequent_ii: bool
    rho: float
    center_offset: float

    @property
    def holds(self) -> Tuple[bool, bool]:
        return (not self.antecedent_i or self.consequent_i, not self.antecedent_ii or self.consequent_ii)

    def to_dict(self):
        return dict(self.__dict__)


def check_lemma_ball_inclusion(X, z, alpha: float, tol: float = 1e-9) -> LemmaCheck:
    """Evaluate both ball-inclusion implications around the miniball B(c, rho) of X.

    Antecedents are evaluated strictly and consequents leniently, each by
    `tol` relative to alpha, so rounding never manufactures a violation.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    z = np.asarray(z, dtype=float)
    ball = miniball(X)
    rho = ball.radius
    slack = tol * max(1.0, alpha)
    if alpha < rho - slack:
        raise PreconditionViolated(
            f"alpha={alpha:.6g} below the miniball radius {rho:.6g}", alpha=alpha, rho=rho
        )
    h = cap_height(alpha, min(rho, alpha))
    offset = float(np.linalg.norm(ball.center - z))
    dists = np.linalg.norm(X - z, axis=1)
    return LemmaCheck(
        antecedent_i=bool(dists.max() <= alpha - slack),
        consequent_i=bool(offset + h <= alpha + slack),
        antecedent_ii=bool(offset + h < alpha - slack),
        consequent_ii=bool(dists.min() < alpha + slack),
        rho=rho,
        center_offset=offset,
    )


def in_convex_hull(X, q, tol: float = 1e-9) -> bool:
    """Linear feasibility: q = X^T lam with lam >= 0 and sum(lam) = 1."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    q = np.asarray(q, dtype=float)
    n = len(X)
    A_eq = np.vstack([X.T, np.ones((1, n))])
    b_eq = np.concatenate([q, [1.0]])
    res = linprog(
        np.zeros(n),
        A_eq=A_eq,
        b_eq=b_eq,
        bounds=[(0, None)] * n,
        method="highs",
        options={"primal_feasibility_tolerance": max(tol, 1e-10)},
    )
    return res.status == 0


def distance_to_hull(X, q) -> Tuple[float, np.ndarray]:
    """d(q, Conv X) and the nearest hull point, by non-negative least squares."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    q = np.asarray(q, dtype=float)
    scale = max(1.0, float(np.abs(X).max()), float(np.abs(q).max()))
    w = HULL_WEIGHT * scale
    A = np.vstack([X.T, w * np.ones((1, len(X)))])
    b = np.concatenate([q, [w]])
    lam, _ = nnls(A, b, maxiter=50 * A.shape[1])
    total = lam.sum()
    if total <= 0:
        nearest = X[np.argmin(np.linalg.norm(X - q, axis=1))]
    else:
        nearest = (lam / total) @ X
    return float(np.linalg.norm(q - nearest)), nearest


def sphere_directions(dim: int, count: int) -> np.ndarray:
    """Deterministic, roughly uniform unit directions in R^dim."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        theta = 2 * math.pi * np.arange(count) / count
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)
    m = math.ceil(math.log2(count + 1))
    # unscrambled Sobol; the first point is the origin of the cube and is dropped
    u = qmc.Sobol(d=dim, scramble=False).random_base2(m)[1 : count + 1]
    g = ndtri(np.clip(u, 1e-12, 1 - 1e-12))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def ray_extreme_clenchers(X, alpha: float, directions, base=None) -> np.ndarray:
    """Clenchers furthest from `base` along each ray base + s*u, in closed form.

    For each point p the constraint ||base + s u - p|| <= alpha bounds s by
    the larger root of s^2 + 2 s <u, base - p> + ||base - p||^2 - alpha^2.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    U = np.atleast_2d(np.asarray(directions, dtype=float))
    base = miniball(X).center if base is None else np.asarray(base, dtype=float)
    diff = base - X  # (n, d)
    b = U @ diff.T  # (S, n)
    c = (diff ** 2).sum(-1) - alpha * alpha
    disc = b * b - c
    if np.any(disc < -1e-12 * max(1.0, alpha * alpha)):
        raise Infeasible("base point is not a clencher", alpha=alpha, base=base)
    s = (-b + np.sqrt(np.clip(disc, 0.0, None))).min(axis=1)
    return base + s[:, None] * U


def _shrink_to_feasible(X, alpha, center, z, iters=80):
    if np.linalg.norm(X - z, axis=1).max() <= alpha:
        return z
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.linalg.norm(X - (center + mid * (z - center)), axis=1).max() <= alpha:
            lo = mid
        else:
            hi = mid
    return center + lo * (z - center)


def clencher_extreme(X, alpha: float, u, tol: float = 1e-9, base=None) -> np.ndarray:
    """Point z of Z_alpha(X) = {z : X in B(z, alpha)} maximizing <u, z>.

    Starts from the ray-extreme clencher along u, refines with SLSQP on the
    quadratic constraints, then shrinks toward the miniball centre until
    feasible.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    u = np.asarray(u, dtype=float)
    u = u / np.linalg.norm(u)
    ball = miniball(X)
    if alpha < ball.radius * (1 - 1e-12):
        raise Infeasible(
            f"no clencher: alpha={alpha:.6g} below miniball radius {ball.radius:.6g}",
            alpha=alpha,
            rho=ball.radius,
        )
    z0 = ray_extreme_clenchers(X, alpha, u[None], base=ball.center if base is None else base)[0]
    if len(X) == 1:
        return z0
    res = minimize(
        lambda z: -u @ z,
        z0,
        jac=lambda z: -u,
        constraints=[
            {
                "type": "ineq",
                "fun": lambda z: alpha * alpha - ((X - z) ** 2).sum(-1),
                "jac": lambda z: 2 * (X - z),
            }
        ],
        method="SLSQP",
        options={"ftol": tol * tol, "maxiter": 200},
    )
    z = res.x if res.success and u @ res.x >= u @ z0 else z0
    return _shrink_to_feasible(X, alpha, ball.center, z)


def hull_membership_sandwich(
    X, alpha: float, q, tol: float = 1e-9, directions_per_dim: int = DIRECTIONS_PER_DIM
) -> HullVerdict:
    """Classify q against Hull_alpha(X) between Conv X and [Conv X]^{+delta}.

    Inside when q is in Conv X; Outside when d(q, Conv X) exceeds the cap
    height delta or when a clencher z with ||q - z|| > alpha is found;
    Unknown otherwise. alpha = inf is the convex hull itself.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    q = np.asarray(q, dtype=float)
    if in_convex_hull(X, q, tol):
        return HullVerdict.INSIDE
    dist, nearest = distance_to_hull(X, q)
    if math.isinf(alpha):
        return HullVerdict.OUTSIDE if dist > tol else HullVerdict.INSIDE
    rho = miniball(X).radius
    if alpha < rho * (1 - 1e-12):
        raise PreconditionViolated(
            f"alpha={alpha:.6g} below the miniball radius {rho:.6g}", alpha=alpha, rho=rho
        )
    if dist > cap_height(alpha, min(rho, alpha)) + tol:
        return HullVerdict.OUTSIDE
    if dist <= tol:
        return HullVerdict.UNKNOWN
    normal = (q - nearest) / dist
    z = clencher_extreme(X, alpha, -normal, tol=tol)
    if np.linalg.norm(q - z) > alpha + tol:
        return HullVerdict.OUTSIDE
    d = X.shape[1]
    dirs = sphere_directions(d, directions_per_dim * d)
    Z = ray_extreme_clenchers(X, alpha, dirs)
    if np.any(np.linalg.norm(Z - q, axis=1) > alpha + tol):
        return HullVerdict.OUTSIDE
    return HullVerdict.UNKNOWN


def separating_clencher(X, alpha: float, q, tol: float = 1e-9) -> Optional[np.ndarray]:
    """A clencher z of X with ||q - z|| > alpha, or None if none was found."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    q = np.asarray(q, dtype=float)
    dist, nearest = distance_to_hull(X, q)
    if dist <= tol:
        return None
    z = clencher_extreme(X, alpha, (nearest - q) / dist, tol=tol)
    if np.linalg.norm(q - z) > alpha + tol:
        return z
    d = X.shape[1]
    Z = ray_extreme_clenchers(X, alpha, sphere_directions(d, DIRECTIONS_PER_DIM * d))
    far = np.linalg.norm(Z - q, axis=1)
    i = int(np.argmax(far))
    return Z[i] if far[i] > alpha + tol else None
