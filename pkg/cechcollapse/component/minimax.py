# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import torch

from cechcollapse.component.errors import ToleranceNotMet
from cechcollapse.component.shapes import DTYPE, as_tensor

logger = logging.getLogger(__name__)

# relative slack accepted by the ball feasibility test
FEASIBILITY_SLACK = 1e-12

# descent starts cover every center and every pairwise midpoint up to this size
EXHAUSTIVE_STARTS = 8


@dataclass
class MinimaxResult:
    upper: torch.Tensor  # (B,) max distance at the witness, an upper bound
    lower: torch.Tensor  # (B,) dual lower bound
    witness: torch.Tensor  # (B, d) point of the shape

    @property
    def gap(self) -> torch.Tensor:
        return self.upper - self.lower

    def __getitem__(self, i):
        return float(self.upper[i]), float(self.lower[i]), self.witness[i].numpy()


class ShapeMinimax(object):
    """Solve min over a in A of max_j ||a - c_j|| for batches of center sets.

    The value is bracketed from both sides. The lower bound comes from the
    concave dual over weights on the centers,
        g(lam) = min_a sum_j lam_j ||a - c_j||^2 = sum_j lam_j ||pi_A(c_lam) - c_j||^2,
    maximized by pairwise Frank-Wolfe steps with a bisection line search.
    The upper bound is the best primal point seen, from the dual iterates
    and from a projected descent over deterministic multi-starts.

    Args:
        shape: the shape oracle.
        tol: target width of the bracket, in distance units.
        max_iter: dual iterations.
        bisect_iter: bisection steps of each line search.
        descent_iter: projected descent iterations per start.
    """

    def __init__(self, shape, tol=1e-7, max_iter=400, bisect_iter=40, descent_iter=150):
        self.shape = shape
        self.tol = tol
        self.max_iter = max_iter
        self.bisect_iter = bisect_iter
        self.descent_iter = descent_iter

    def __call__(self, centers, threshold: Optional[float] = None, warm=None) -> MinimaxResult:
        centers = as_tensor(centers)
        if centers.dim() == 2:
            centers = centers.unsqueeze(0)
        finite = self.shape.finite_points()
        if finite is not None:
            return self._enumerate(centers, torch.as_tensor(finite, dtype=DTYPE))
        upper2, witness, lower2 = self._dual(centers, threshold)
        desc2, desc_witness = self._descent(centers, warm)
        better = desc2 < upper2
        upper2 = torch.where(better, desc2, upper2)
        witness = torch.where(better.unsqueeze(-1), desc_witness, witness)
        lower2 = torch.minimum(lower2, upper2)
        return MinimaxResult(upper2.clamp_min(0).sqrt(), lower2.clamp_min(0).sqrt(), witness)

    def _enumerate(self, centers, finite):
        B = centers.shape[0]
        # (B, M, F) distances from every center to every shape point
        dist = torch.cdist(centers, finite.unsqueeze(0).expand(B, -1, -1))
        values = dist.max(dim=1).values
        best, idx = values.min(dim=-1)
        return MinimaxResult(best, best.clone(), finite[idx])

    def _sq_dist(self, a, centers):
        return ((a.unsqueeze(-2) - centers) ** 2).sum(-1)

    def _dual(self, centers, threshold):
        B, M, d = centers.shape
        rows = torch.arange(B)
        lam = torch.full((B, M), 1.0 / M, dtype=DTYPE)
        best_up2 = torch.full((B,), math.inf, dtype=DTYPE)
        best_low2 = torch.full((B,), -math.inf, dtype=DTYPE)
        best_witness = torch.zeros(B, d, dtype=DTYPE)
        thr2 = None if threshold is None else threshold * threshold

        for it in range(self.max_iter):
            c = (lam.unsqueeze(-1) * centers).sum(1)  # (B, d)
            a = self.shape._project(c)
            s = self._sq_dist(a, centers)  # (B, M)
            g = (lam * s).sum(-1)
            up2 = s.max(-1).values
            improved = up2 < best_up2
            best_up2 = torch.where(improved, up2, best_up2)
            best_witness = torch.where(improved.unsqueeze(-1), a, best_witness)
            best_low2 = torch.maximum(best_low2, g)

            done = best_up2.sqrt() - best_low2.clamp_min(0).sqrt() <= self.tol
            if thr2 is not None:
                done = done | (best_up2 <= thr2) | (best_low2 > thr2)
            if bool(done.all()):
                break

            j = s.argmax(-1)
            i = s.masked_fill(lam <= 0, math.inf).argmin(-1)
            gamma_max = lam[rows, i]
            direction = centers[rows, j] - centers[rows, i]
            gamma = self._line_search(c, direction, centers, i, j, gamma_max)
            gamma = torch.where(done, torch.zeros_like(gamma), gamma)
            lam = lam.index_put((rows, j), gamma, accumulate=True)
            lam = lam.index_put((rows, i), -gamma, accumulate=True).clamp_min(0)
        return best_up2, best_witness, best_low2

    def _line_search(self, c, direction, centers, i, j, gamma_max):
        rows = torch.arange(c.shape[0])
        ci, cj = centers[rows, i], centers[rows, j]

        def slope(gamma):
            # derivative of the dual along the pairwise direction (Danskin)
            a = self.shape._project(c + gamma.unsqueeze(-1) * direction)
            return ((a - cj) ** 2).sum(-1) - ((a - ci) ** 2).sum(-1)

        lo = torch.zeros_like(gamma_max)
        hi = gamma_max.clone()
        full = slope(hi) >= 0
        for _ in range(self.bisect_iter):
            mid = 0.5 * (lo + hi)
            up = slope(mid) >= 0
            lo = torch.where(up, mid, lo)
            hi = torch.where(up, hi, mid)
        return torch.where(full, gamma_max, lo)

    def _starts(self, centers, warm):
        B, M, d = centers.shape
        centroid = centers.mean(1, keepdim=True)  # (B, 1, d)
        radius = (centers - centroid).norm(dim=-1).max(-1).values.clamp_min(1e-3)
        starts = [centroid]
        if M <= EXHAUSTIVE_STARTS:
            starts.append(centers)
            if M > 1:
                pairs = torch.tensor(list(itertools.combinations(range(M), 2)))
                starts.append(0.5 * (centers[:, pairs[:, 0]] + centers[:, pairs[:, 1]]))
        else:
            stride = max(1, M // EXHAUSTIVE_STARTS)
            starts.append(centers[:, ::stride][:, :EXHAUSTIVE_STARTS])
        eye = torch.eye(d, dtype=DTYPE)
        offsets = torch.cat([eye, -eye]).unsqueeze(0) * radius.view(B, 1, 1)
        starts.append(centroid + offsets)
        if warm is not None:
            starts.append(as_tensor(warm).view(B, 1, d))
        return torch.cat(starts, dim=1)  # (B, S, d)

    def _descent(self, centers, warm):
        a = self.shape._project(self._starts(centers, warm))  # (B, S, d)
        B, S, d = a.shape
        best2 = torch.full((B,), math.inf, dtype=DTYPE)
        best_witness = torch.zeros(B, d, dtype=DTYPE)
        rows = torch.arange(B)
        for k in range(self.descent_iter):
            diff = centers.unsqueeze(1) - a.unsqueeze(2)  # (B, S, M, d)
            s = (diff ** 2).sum(-1)
            f = s.max(-1).values  # (B, S)
            fmin, arg = f.min(-1)
            improved = fmin < best2
            best2 = torch.where(improved, fmin, best2)
            best_witness = torch.where(improved.unsqueeze(-1), a[rows, arg], best_witness)
            temperature = 0.1 * (1e-6 ** (k / max(1, self.descent_iter - 1)))
            tau = (f.unsqueeze(-1) * temperature).clamp_min(1e-300)
            w = torch.softmax((s - f.unsqueeze(-1)) / tau, dim=-1)
            step = (w.unsqueeze(-1) * diff).sum(2)
            a = self.shape._project(a + step / (k + 2))
        return best2, best_witness


def min_max_distance_over_shape(shape, sigma, tol=1e-7, solver=None):
    """t_star = min over a in A of max_{p in sigma} ||a - p||, with its witness.

    Raises ToleranceNotMet when the certified bracket stays wider than tol.
    """
    solver = solver or ShapeMinimax(shape, tol=tol)
    result = solver(as_tensor(np.atleast_2d(sigma)).unsqueeze(0))
    upper, lower, witness = result[0]
    if upper - lower > tol:
        raise ToleranceNotMet(
            f"minimax bracket [{lower:.3g}, {upper:.3g}] wider than {tol:.1g}",
            sigma=np.atleast_2d(sigma),
            lower=lower,
            upper=upper,
        )
    return upper, witness


class BallIntersection(object):
    """Batched intersection of radius-alpha balls, centers (B, k, d).

    The projection is exact: the nearest point of the intersection lies on
    the sphere-intersection of some active subset S of the balls, and the
    nearest point of that set is closed form (a sphere of radius
    sqrt(alpha^2 - R_S^2) around the circumcenter of S, orthogonal to aff S).
    Enumerating the subsets and keeping the nearest feasible candidate gives
    the projection.
    """

    def __init__(self, centers, alpha: float):
        self.centers = as_tensor(centers)
        self.alpha = float(alpha)
        B, k, d = self.centers.shape
        self._faces = []
        for m in range(1, min(k, d) + 1):
            idx = torch.tensor(list(itertools.combinations(range(k), m)))
            pts = self.centers[:, idx]  # (B, n, m, d)
            if m == 1:
                c = pts[:, :, 0]
                R2 = torch.zeros(c.shape[:-1], dtype=DTYPE)
                Q = None
                valid = torch.ones(c.shape[:-1], dtype=torch.bool)
            else:
                p0 = pts[:, :, :1]
                V = pts[:, :, 1:] - p0  # (B, n, m-1, d)
                G = 2 * V @ V.transpose(-1, -2)
                rhs = (V ** 2).sum(-1, keepdim=True)
                lam, info = torch.linalg.solve_ex(G, rhs)
                offset = (lam * V).sum(-2)
                c = p0.squeeze(2) + offset
                R2 = (offset ** 2).sum(-1)
                Q, _ = torch.linalg.qr(V.transpose(-1, -2))  # (B, n, d, m-1)
                valid = (info == 0) & (R2 <= self.alpha ** 2) & torch.isfinite(R2)
            self._faces.append((c, R2, Q, valid))

    def margin(self, x) -> torch.Tensor:
        """alpha - max_i ||x - p_i||; non-negative iff x is feasible."""
        return self.alpha - (x.unsqueeze(-2) - self.centers).norm(dim=-1).max(-1).values

    def _feasible(self, x):
        # x (B, n, d)
        dist = (x.unsqueeze(-2) - self.centers.unsqueeze(1)).norm(dim=-1).max(-1).values
        return dist <= self.alpha * (1 + FEASIBILITY_SLACK) + FEASIBILITY_SLACK

    def project(self, y, fallback=None) -> torch.Tensor:
        y = as_tensor(y)
        candidates = [y.unsqueeze(1)]
        masks = [torch.ones(y.shape[0], 1, dtype=torch.bool)]
        for c, R2, Q, valid in self._faces:
            w = y.unsqueeze(1) - c  # (B, n, d)
            if Q is not None:
                w = w - (Q @ (Q.transpose(-1, -2) @ w.unsqueeze(-1))).squeeze(-1)
            nw = w.norm(dim=-1, keepdim=True)
            rho = (self.alpha ** 2 - R2).clamp_min(0).sqrt().unsqueeze(-1)
            x = c + rho * w / nw.clamp_min(1e-300)
            candidates.append(x)
            masks.append(valid & (nw.squeeze(-1) > 1e-14))
        cand = torch.cat(candidates, dim=1)
        ok = torch.cat(masks, dim=1)
        cand = torch.where(ok.unsqueeze(-1), cand, torch.zeros_like(cand))
        ok = ok & self._feasible(cand)
        dist = (cand - y.unsqueeze(1)).norm(dim=-1).masked_fill(~ok, math.inf)
        best, idx = dist.min(-1)
        out = cand[torch.arange(len(y)), idx]
        if fallback is not None:
            out = torch.where(torch.isinf(best).unsqueeze(-1), as_tensor(fallback), out)
        return out


@dataclass
class IntersectionDistance:
    distance: torch.Tensor  # (B,) d(x, A) at the returned x
    point: torch.Tensor  # (B, d) point x of the ball intersection
    foot: torch.Tensor  # (B, d) nearest shape point of x
    margin: torch.Tensor  # (B,) feasibility margin of x
    spread: torch.Tensor  # (B,) disagreement between converged starts

    def __getitem__(self, i):
        return float(self.distance[i]), self.point[i].numpy(), self.foot[i].numpy()


def _alternate(shape, balls, x, tol, max_iter):
    moved = torch.full((x.shape[0],), math.inf, dtype=DTYPE)
    for _ in range(max_iter):
        a = shape._project(x)
        x_new = balls.project(a, fallback=x)
        moved = (x_new - x).norm(dim=-1)
        x = x_new
        if bool((moved <= tol).all()):
            break
    return x, moved


def ball_intersection_distance(shape, centers, alpha, starts, tol=1e-9, max_iter=500):
    """d(A, intersection of B(c_j, alpha)) by alternating projections.

    `starts` has shape (B, S, d); each start is first projected into the
    ball intersection. The smallest distance over converged starts wins and
    the spread among converged starts is reported.
    """
    centers = as_tensor(centers)
    starts = as_tensor(starts)
    balls = BallIntersection(centers, alpha)
    B, S, d = starts.shape
    dists, points, converged = [], [], []
    for s in range(S):
        x0 = balls.project(starts[:, s], fallback=starts[:, s])
        x, moved = _alternate(shape, balls, x0, tol, max_iter)
        dist = shape._distance(x)
        feasible = balls.margin(x) >= -FEASIBILITY_SLACK * (1 + alpha)
        dists.append(torch.where(feasible, dist, torch.full_like(dist, math.inf)))
        points.append(x)
        converged.append(feasible & (moved <= 10 * tol))
    dists = torch.stack(dists, 1)  # (B, S)
    points = torch.stack(points, 1)
    converged = torch.stack(converged, 1)
    best, idx = dists.min(-1)
    rows = torch.arange(B)
    x = points[rows, idx]
    conv_d = dists.masked_fill(~converged, math.nan)
    spread = torch.nan_to_num(
        conv_d.nan_to_num(-math.inf).max(-1).values - conv_d.nan_to_num(math.inf).min(-1).values,
        nan=0.0,
        posinf=0.0,
        neginf=0.0,
    ).clamp_min(0)
    return IntersectionDistance(best, x, shape._project(x), balls.margin(x), spread)


def distance_to_ball_intersection(shape, sigma, alpha, tol=1e-9, start=None):
    """d(A, B(sigma, alpha)) for one simplex with its witness x and foot pi_A(x)."""
    from cechcollapse.component.miniball import miniball

    sigma = np.atleast_2d(np.asarray(sigma, dtype=float))
    center = miniball(sigma).center if start is None else np.asarray(start, dtype=float)
    starts = [center] + [shape._project(as_tensor(p)).numpy() for p in sigma]
    result = ball_intersection_distance(
        shape, sigma[None], alpha, np.asarray(starts)[None], tol=tol
    )
    return result[0]
