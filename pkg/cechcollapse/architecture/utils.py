# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import enum
import hashlib
import json
import math
import os

import numpy as np


def to_jsonable(obj):
    """Plain JSON types for reports: numpy scalars and arrays, tuples, enums, infinities."""
    if hasattr(obj, "to_dict"):
        return to_jsonable(obj.to_dict())
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, set, frozenset)):
        items = sorted(obj) if isinstance(obj, (set, frozenset)) else obj
        return [to_jsonable(v) for v in items]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, np.generic):
        return to_jsonable(obj.item())
    if isinstance(obj, enum.Enum):
        return str(obj.value)
    if isinstance(obj, float):
        if math.isnan(obj):
            return "nan"
        if math.isinf(obj):
            return "inf" if obj > 0 else "-inf"
        return obj
    return obj


def canonical_json(obj, indent=None) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=indent, separators=None if indent else (",", ":"))


def sha256_of(obj) -> str:
    if isinstance(obj, bytes):
        return hashlib.sha256(obj).hexdigest()
    return hashlib.sha256(canonical_json(obj).encode("utf-8")).hexdigest()


def sha256_file(path) -> str:
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def write_json(path, obj):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_json(obj, indent=2))
        fh.write("\n")
    return path


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_complex(path, K, comment=None):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(K.to_lines(comment)))
        fh.write("\n")
    return path


def read_complex(path):
    from cechcollapse.component.simplicial_complex import SimplicialComplex

    if str(path).endswith(".json"):
        return SimplicialComplex.from_dict(read_json(path))
    with open(path, "r", encoding="utf-8") as fh:
        return SimplicialComplex.from_lines(fh.read().splitlines())


class RunDirectory(object):
    """Output directory of one run; every written file is listed in manifest.json."""

    def __init__(self, root):
        self.root = root
        self.files = {}
        os.makedirs(root, exist_ok=True)

    def path(self, name):
        return os.path.join(self.root, name)

    def _record(self, name):
        self.files[name] = sha256_file(self.path(name))
        return self.path(name)

    def json(self, name, obj):
        write_json(self.path(name), obj)
        return self._record(name)

    def complex(self, name, K, comment=None):
        write_complex(self.path(name), K, comment)
        return self._record(name)

    def points(self, name, cloud, epsilon=None, reach=None):
        cloud.save(self.path(name), epsilon, reach)
        self._record(name)
        if epsilon is not None or reach is not None:
            self._record(name + ".json")
        return self.path(name)

    def manifest(self, **extra):
        write_json(self.path("manifest.json"), dict(extra, files=self.files))
        return self.path("manifest.json")
