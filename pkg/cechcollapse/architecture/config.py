# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import json

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from cechcollapse.architecture.utils import canonical_json, sha256_of

# template used when a scenario names none
DEFAULT_TEMPLATES = {
    "circle": "polygon",
    "sphere": "icosphere",
    "torus": "torus",
    "box": "grid",
}

ALPHA_POLICIES = ("auto",)


class SolverConfig(object):
    def __init__(self, **kwargs):
        # relative slack of every predicate (alpha comparisons, containment)
        self.tol = kwargs.pop("tol", 1e-9)
        # bracket width of the minimax and event solvers
        self.solver_tol = kwargs.pop("solver_tol", 1e-7)
        self.event_tol = kwargs.pop("event_tol", 1e-10)
        self.max_iter = kwargs.pop("max_iter", 2000)
        self.directions_per_dim = kwargs.pop("directions_per_dim", 64)
        self.dtype = kwargs.pop("dtype", "float64")
        assert not kwargs, f"unknown solver options {sorted(kwargs)}"

        assert self.dtype == "float64", "certification paths run in float64 only"
        assert 0 < self.tol < 1e-3 and 0 < self.solver_tol < 1e-3
        assert self.max_iter > 0 and self.directions_per_dim > 0

    def override(self, args):
        for hp in self.__dict__.keys():
            if getattr(args, hp, None) is not None:
                self.__dict__[hp] = getattr(args, hp, None)

    def to_dict(self):
        return dict(self.__dict__)


class ScenarioConfig(object):
    def __init__(self, **kwargs):
        self.shape = kwargs.pop("shape", "circle")
        self.shape_params = dict(kwargs.pop("shape_params", {}))
        # Sample
        self.n_points = kwargs.pop("n_points", None)
        self.target_epsilon = kwargs.pop("target_epsilon", None)
        self.sample_mode = kwargs.pop("sample_mode", "on-shape")
        self.noise = kwargs.pop("noise", 0.0)
        self.seed = kwargs.pop("seed", 0)
        # Complexes
        self.alpha = kwargs.pop("alpha", "auto")
        self.force = kwargs.pop("force", False)
        self.dim_cap = kwargs.pop("dim_cap", None)
        # Triangulation
        self.template = kwargs.pop("template", None)
        self.template_n = kwargs.pop("template_n", 12)
        self.samples_per_cell = kwargs.pop("samples_per_cell", 4)
        self.delta = kwargs.pop("delta", None)
        self.probe_density = kwargs.pop("probe_density", 4000)
        self.check_niceness = kwargs.pop("check_niceness", True)
        # Evolving family
        self.steps = kwargs.pop("steps", 64)
        self.max_depth = kwargs.pop("max_depth", 6)
        self.directions = kwargs.pop("directions", None)
        self.split_margin = kwargs.pop("split_margin", None)
        # Output
        self.output_dir = kwargs.pop("output_dir", "runs/default")
        solver = kwargs.pop("solver", None)
        self.solver = solver if isinstance(solver, SolverConfig) else SolverConfig(**(solver or {}))
        assert not kwargs, f"unknown scenario options {sorted(kwargs)}"

        if self.template is None:
            self.template = DEFAULT_TEMPLATES.get(self.shape)
        if self.sample_mode == "on-shape":
            self.noise = 0.0
        if self.directions is None:
            self.directions = self.solver.directions_per_dim * self.ambient_dim_hint()
        assert self.template is not None, f"no default template for shape {self.shape}"
        assert self.n_points is not None or self.target_epsilon is not None, (
            "a scenario needs n_points or target_epsilon"
        )
        assert self.alpha in ALPHA_POLICIES or float(self.alpha) > 0, f"bad alpha policy {self.alpha}"
        assert self.steps >= 1 and self.max_depth >= 0

    def ambient_dim_hint(self) -> int:
        if self.shape == "circle":
            return 2
        if self.shape == "torus":
            return 4
        if self.shape == "box":
            return self.shape_params.get("ambient_dim") or self.shape_params.get("m", 2)
        return 3

    def override(self, args):
        for hp in self.__dict__.keys():
            if getattr(args, hp, None) is not None:
                self.__dict__[hp] = getattr(args, hp, None)
        self.solver.override(args)

    def to_dict(self):
        out = dict(self.__dict__)
        out["solver"] = self.solver.to_dict()
        return out

    def to_json(self) -> str:
        return canonical_json(self.to_dict(), indent=2)

    def digest(self) -> str:
        return sha256_of(self.to_dict())

    @classmethod
    def from_dict(cls, data):
        return cls(**data)

    @classmethod
    def from_file(cls, path):
        if str(path).endswith(".toml"):
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        else:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        return cls(**data)
