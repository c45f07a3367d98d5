# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import logging
import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np
import torch

from cechcollapse.component.errors import DegeneratePoint, EpsilonUnreachable

logger = logging.getLogger(__name__)

DTYPE = torch.float64

# points closer than this to the medial axis have no well defined projection
MEDIAL_EPS = 1e-15

# finest deterministic nets the samplers agree to build
MAX_CIRCLE_POINTS = 100000
MAX_SPHERE_LEVEL = 7
MAX_TORUS_SIDE = 1000
MAX_BOX_POINTS = 200000


def as_tensor(x) -> torch.Tensor:
    if isinstance(x, torch.Tensor):
        return x.to(DTYPE)
    return torch.as_tensor(np.asarray(x, dtype=float), dtype=DTYPE)


def _like(result: torch.Tensor, template):
    if isinstance(template, torch.Tensor):
        return result
    out = result.detach().cpu().numpy()
    if out.ndim == 0:
        return float(out)
    return out


@dataclass
class SampleSpec:
    target_epsilon: Optional[float] = None
    mode: str = "on-shape"
    seed: int = 0
    n: Optional[int] = None
    noise: float = 0.0

    def __post_init__(self):
        assert self.mode in ("on-shape", "noisy-tube"), f"unknown sample mode {self.mode}"
        assert self.target_epsilon is not None or self.n is not None, (
            "a sample needs either target_epsilon or an explicit resolution n"
        )
        if self.target_epsilon is not None:
            assert self.target_epsilon > 0, "target_epsilon must be positive"
        if self.mode == "on-shape":
            self.noise = 0.0
        assert self.noise >= 0.0


class Shape(object):
    """Analytic shape oracle: distance, projection, reach and an epsilon-sampler.

    Subclasses implement the torch kernels `_distance`, `_project` and
    `_medial` on tensors of shape (..., ambient_dim). `_project` breaks ties
    on the medial axis canonically and is what the batched solvers use; the
    public `project` refuses medial points.
    """

    kind = None

    def __init__(self, ambient_dim: int):
        self.ambient_dim = ambient_dim

    def _distance(self, x: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def _project(self, x: torch.Tensor) -> torch.Tensor:
        raise NotImplementedError

    def _medial(self, x: torch.Tensor) -> torch.Tensor:
        return torch.zeros(x.shape[:-1], dtype=torch.bool)

    def reach(self) -> float:
        raise NotImplementedError

    def grid(self, n: int) -> np.ndarray:
        """Deterministic dense point set on the shape, about `n` points."""
        raise NotImplementedError

    def _net(self, spec: SampleSpec) -> Tuple[np.ndarray, float]:
        raise NotImplementedError

    def finite_points(self) -> Optional[np.ndarray]:
        return None

    def params(self) -> dict:
        return {}

    def to_dict(self) -> dict:
        return {"kind": self.kind, "ambient_dim": self.ambient_dim, **self.params()}

    def _check_dim(self, x: torch.Tensor):
        if x.shape[-1] != self.ambient_dim:
            raise ValueError(
                f"{self.kind} lives in R^{self.ambient_dim}, got points of dimension {x.shape[-1]}"
            )

    def distance(self, x):
        t = as_tensor(x)
        self._check_dim(t)
        return _like(self._distance(t), x)

    def project(self, x):
        t = as_tensor(x)
        self._check_dim(t)
        medial = self._medial(t)
        if bool(medial.any()):
            raise DegeneratePoint(
                f"projection onto the {self.kind} is undefined on its medial axis",
                points=t[medial].tolist(),
            )
        return _like(self._project(t), x)

    def offset_contains(self, x, alpha: float, tol: float = 0.0):
        return _like(self._distance(as_tensor(x)) <= alpha + tol, x)

    def sample(self, spec: SampleSpec) -> Tuple[np.ndarray, float]:
        points, epsilon = self._net(spec)
        if spec.mode == "noisy-tube" and spec.noise > 0:
            rng = np.random.default_rng(spec.seed)
            dirs = rng.normal(size=points.shape)
            dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
            radii = spec.noise * rng.uniform(0.0, 1.0, size=(len(points), 1))
            points = points + radii * dirs
            epsilon = epsilon + spec.noise
        if spec.target_epsilon is not None and epsilon > spec.target_epsilon * (1 + 1e-12):
            raise EpsilonUnreachable(
                f"{self.kind} sample reaches epsilon {epsilon:.6g} > target {spec.target_epsilon:.6g}",
                epsilon=epsilon,
                target=spec.target_epsilon,
            )
        logger.info(f"sampled {len(points)} points on {self.kind}, certified epsilon {epsilon:.6g}")
        return points, float(epsilon)


def _normalize(x: torch.Tensor) -> torch.Tensor:
    norm = x.norm(dim=-1, keepdim=True)
    canonical = torch.zeros_like(x)
    canonical[..., 0] = 1.0
    safe = torch.where(norm > MEDIAL_EPS, x / norm.clamp_min(MEDIAL_EPS), canonical)
    return safe


class UnitSphere(Shape):
    kind = "sphere"

    def __init__(self, ambient_dim: int = 3):
        super().__init__(ambient_dim)

    def _distance(self, x):
        return (x.norm(dim=-1) - 1.0).abs()

    def _project(self, x):
        return _normalize(x)

    def _medial(self, x):
        return x.norm(dim=-1) <= MEDIAL_EPS

    def reach(self):
        return 1.0

    def grid(self, n):
        # fibonacci lattice
        i = np.arange(n) + 0.5
        z = 1.0 - 2.0 * i / n
        phi = math.pi * (1.0 + math.sqrt(5.0)) * i
        r = np.sqrt(1.0 - z * z)
        return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=1)

    def _net(self, spec):
        from cechcollapse.model.icosphere import sphere_net

        if spec.n is not None:
            return sphere_net(spec.n)
        for level in range(MAX_SPHERE_LEVEL + 1):
            points, eps = sphere_net(level)
            if eps <= spec.target_epsilon:
                return points, eps
        raise EpsilonUnreachable(
            f"sphere nets stop at level {MAX_SPHERE_LEVEL} (epsilon {eps:.6g})",
            epsilon=eps,
            target=spec.target_epsilon,
        )


class UnitCircle(UnitSphere):
    kind = "circle"

    def __init__(self):
        super().__init__(ambient_dim=2)

    def grid(self, n):
        theta = 2 * math.pi * np.arange(n) / n
        return np.stack([np.cos(theta), np.sin(theta)], axis=1)

    def _net(self, spec):
        if spec.n is not None:
            n = spec.n
        else:
            floor = math.sin(math.pi / MAX_CIRCLE_POINTS)
            if spec.target_epsilon - spec.noise < floor:
                raise EpsilonUnreachable(
                    f"circle nets cannot go below epsilon {floor:.3g}",
                    epsilon=floor,
                    target=spec.target_epsilon,
                )
            n = max(2, math.ceil(math.pi / math.asin(min(1.0, spec.target_epsilon - spec.noise))))
        if n < 2 or n > MAX_CIRCLE_POINTS:
            raise EpsilonUnreachable(f"circle net size {n} out of range", n=n)
        # covering radius of n equiangular points is the chordal half gap
        return self.grid(n), math.sin(math.pi / n)


class FlatTorus(Shape):
    """H(s, t) = (cos s, sin s, cos t, sin t) in R^4."""

    kind = "torus"

    def __init__(self):
        super().__init__(ambient_dim=4)

    def _pairs(self, x):
        return x[..., :2], x[..., 2:]

    def _distance(self, x):
        u, v = self._pairs(x)
        return torch.sqrt((u.norm(dim=-1) - 1.0) ** 2 + (v.norm(dim=-1) - 1.0) ** 2)

    def _project(self, x):
        u, v = self._pairs(x)
        return torch.cat([_normalize(u), _normalize(v)], dim=-1)

    def _medial(self, x):
        u, v = self._pairs(x)
        return (u.norm(dim=-1) <= MEDIAL_EPS) | (v.norm(dim=-1) <= MEDIAL_EPS)

    def distance(self, x):
        t = as_tensor(x)
        self._check_dim(t)
        if bool(self._medial(t).any()):
            raise DegeneratePoint(
                "distance to the flat torus is taken through an undefined projection",
                points=t[self._medial(t)].tolist(),
            )
        return _like(self._distance(t), x)

    def reach(self):
        return 1.0

    @staticmethod
    def embed(s, t) -> np.ndarray:
        s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
        return np.stack([np.cos(s), np.sin(s), np.cos(t), np.sin(t)], axis=-1)

    def grid(self, n):
        side = max(2, int(round(math.sqrt(n))))
        s, t = np.meshgrid(2 * math.pi * np.arange(side) / side, 2 * math.pi * np.arange(side) / side)
        return self.embed(s.ravel(), t.ravel())

    def _net(self, spec):
        if spec.n is not None:
            side = spec.n
        else:
            # product grid: covering radius 2 sqrt(2) sin(pi / 2 side)
            goal = (spec.target_epsilon - spec.noise) / (2 * math.sqrt(2))
            if goal <= 0 or goal < math.sin(math.pi / (2 * MAX_TORUS_SIDE)):
                raise EpsilonUnreachable(
                    "torus grids cannot reach the requested epsilon", target=spec.target_epsilon
                )
            side = max(2, math.ceil(math.pi / (2 * math.asin(min(1.0, goal)))))
        if side > MAX_TORUS_SIDE:
            raise EpsilonUnreachable(f"torus grid side {side} out of range", n=side)
        angles = 2 * math.pi * np.arange(side) / side
        s, t = np.meshgrid(angles, angles, indexing="ij")
        return self.embed(s.ravel(), t.ravel()), 2 * math.sqrt(2) * math.sin(math.pi / (2 * side))


class FlatBox(Shape):
    """[-w, w]^m x {0}^(d-m), a bounded window of R^m inside R^d."""

    kind = "box"

    def __init__(self, m: int = 2, ambient_dim: Optional[int] = None, half_width: float = 1.0):
        super().__init__(ambient_dim if ambient_dim is not None else m)
        assert 1 <= m <= self.ambient_dim, f"box dimension {m} must fit in R^{self.ambient_dim}"
        assert half_width > 0
        self.m = m
        self.half_width = half_width

    def params(self):
        return {"m": self.m, "half_width": self.half_width}

    def _project(self, x):
        out = torch.zeros_like(x)
        out[..., : self.m] = x[..., : self.m].clamp(-self.half_width, self.half_width)
        return out

    def _distance(self, x):
        return (x - self._project(x)).norm(dim=-1)

    def reach(self):
        # interior convention: the window boundary is not part of the model
        return math.inf

    def boundary_margin(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self.half_width - np.abs(pts[:, : self.m]).max(axis=1)

    def grid(self, n):
        side = max(2, int(round(n ** (1.0 / self.m))))
        return self._lattice(side)

    def _lattice(self, side):
        axis = np.linspace(-self.half_width, self.half_width, side)
        mesh = np.meshgrid(*([axis] * self.m), indexing="ij")
        pts = np.zeros((side ** self.m, self.ambient_dim))
        for i, coord in enumerate(mesh):
            pts[:, i] = coord.ravel()
        return pts

    def _net(self, spec):
        if spec.n is not None:
            side = spec.n
        else:
            goal = spec.target_epsilon - spec.noise
            if goal <= 0:
                raise EpsilonUnreachable("noise exceeds the target epsilon", target=spec.target_epsilon)
            h = 2 * goal / math.sqrt(self.m)
            side = max(2, math.ceil(2 * self.half_width / h) + 1)
        if side ** self.m > MAX_BOX_POINTS:
            raise EpsilonUnreachable(f"box grid with side {side} is too large", n=side)
        h = 2 * self.half_width / (side - 1)
        return self._lattice(side), 0.5 * h * math.sqrt(self.m)


class TwoPointSet(Shape):
    kind = "two-point"

    def __init__(self, a=(-1.0, 0.0), b=(1.0, 0.0)):
        a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
        assert a.shape == b.shape and a.ndim == 1
        assert np.linalg.norm(a - b) > 0, "the two points must differ"
        super().__init__(len(a))
        self.points = np.stack([a, b])

    def params(self):
        return {"a": self.points[0].tolist(), "b": self.points[1].tolist()}

    def _split(self, x):
        pts = torch.as_tensor(self.points, dtype=DTYPE)
        da = (x - pts[0]).norm(dim=-1)
        db = (x - pts[1]).norm(dim=-1)
        return pts, da, db

    def _distance(self, x):
        _, da, db = self._split(x)
        return torch.minimum(da, db)

    def _project(self, x):
        pts, da, db = self._split(x)
        pick_b = (db < da).unsqueeze(-1)
        return torch.where(pick_b, pts[1].expand_as(x), pts[0].expand_as(x))

    def _medial(self, x):
        _, da, db = self._split(x)
        return (da - db).abs() <= MEDIAL_EPS

    def reach(self):
        return 0.5 * float(np.linalg.norm(self.points[0] - self.points[1]))

    def finite_points(self):
        return self.points.copy()

    def grid(self, n):
        return self.points.copy()

    def _net(self, spec):
        return self.points.copy(), 0.0


SHAPES = {
    "circle": UnitCircle,
    "sphere": UnitSphere,
    "torus": FlatTorus,
    "box": FlatBox,
    "two-point": TwoPointSet,
}


def build_shape(kind: str, **params) -> Shape:
    if kind not in SHAPES:
        raise ValueError(f"unknown shape kind {kind!r}; valid kinds: {sorted(SHAPES)}")
    return SHAPES[kind](**params)


def shape_from_dict(data: dict) -> Shape:
    data = dict(data)
    kind = data.pop("kind")
    ambient_dim = data.pop("ambient_dim", None)
    if kind == "box":
        data["ambient_dim"] = ambient_dim
    return build_shape(kind, **data)


def distance(shape: Shape, x):
    return shape.distance(x)


def reach(shape: Shape) -> float:
    return shape.reach()


def sample(shape: Shape, spec: SampleSpec) -> Tuple[np.ndarray, float]:
    return shape.sample(spec)
