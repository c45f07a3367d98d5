# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import logging
import math
import os
from typing import List

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from cechcollapse.architecture.utils import read_complex, read_json  # noqa: E402
from cechcollapse.component.builders import PointCloud  # noqa: E402
from cechcollapse.component.collapse.sweep import sweep_snapshot  # noqa: E402
from cechcollapse.component.collapse_trace import CollapseTrace  # noqa: E402

logger = logging.getLogger(__name__)

FIGURE_KINDS = ("points", "skeleton", "sweep")

# view direction of the orthographic projection for d >= 3 (elevation, azimuth in degrees)
VIEW = (20.0, 30.0)


def _setup():
    plt.rcParams["svg.hashsalt"] = "cechcollapse"
    plt.rcParams["svg.fonttype"] = "none"


def project(points: np.ndarray) -> np.ndarray:
    """Orthographic projection of the first three coordinates onto the view plane."""
    points = np.atleast_2d(points)
    if points.shape[1] == 1:
        return np.concatenate([points, np.zeros_like(points)], axis=1)
    if points.shape[1] == 2:
        return points
    elev, azim = (math.radians(a) for a in VIEW)
    right = np.array([-math.sin(azim), math.cos(azim), 0.0])
    up = np.array([-math.sin(elev) * math.cos(azim), -math.sin(elev) * math.sin(azim), math.cos(elev)])
    xyz = points[:, :3]
    return np.stack([xyz @ right, xyz @ up], axis=1)


def draw_skeleton(ax, points, K, title=None):
    flat = project(points)
    for s in K.simplices_of_dim(1):
        a, b = flat[list(s)]
        ax.plot([a[0], b[0]], [a[1], b[1]], color="0.35", linewidth=0.8, zorder=1)
    used = K.vertices
    ax.scatter(flat[:, 0], flat[:, 1], s=6, c="0.75", zorder=2)
    if used:
        ax.scatter(flat[used, 0], flat[used, 1], s=12, c="tab:blue", zorder=3)
    ax.set_aspect("equal")
    ax.set_axis_off()
    if title:
        ax.set_title(title, fontsize=9)


def _save(fig, path):
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    logger.info(f"wrote {path}")
    return path


def emit_figure(run_dir: str, kind: str, path: str = None, complex_name: str = "restricted") -> List[str]:
    """Static SVG figures of a run directory.

    `points` draws the sample, `skeleton` the 1-skeleton of one of the stored
    complexes and `sweep` three snapshots of the restriction sweep at
    t = beta, beta/2 and 0+.
    """
    if kind not in FIGURE_KINDS:
        raise ValueError(f"unknown figure kind {kind!r}; valid kinds: {', '.join(FIGURE_KINDS)}")
    _setup()
    points = PointCloud.load(os.path.join(run_dir, "points.csv")).points
    base = path or os.path.join(run_dir, f"{kind}.svg")

    if kind == "points":
        fig, ax = plt.subplots(figsize=(4, 4))
        flat = project(points)
        ax.scatter(flat[:, 0], flat[:, 1], s=8, c="tab:blue")
        ax.set_aspect("equal")
        ax.set_axis_off()
        ax.set_title(f"{len(points)} points", fontsize=9)
        return [_save(fig, base)]

    if kind == "skeleton":
        K = read_complex(os.path.join(run_dir, f"{complex_name}.cplx"))
        fig, ax = plt.subplots(figsize=(4, 4))
        draw_skeleton(ax, points, K, f"{complex_name}: f-vector {K.f_vector()}")
        return [_save(fig, base)]

    cech = read_complex(os.path.join(run_dir, "cech.cplx"))
    trace = CollapseTrace.from_dict(read_json(os.path.join(run_dir, "sweep_trace.json")))
    beta = None
    report_path = os.path.join(run_dir, "report.json")
    if os.path.exists(report_path):
        beta = read_json(report_path).get("stages", {}).get("conditions", {}).get("beta")
    if beta is None:
        beta = max((s.event_value for s in trace), default=0.0)
    stem, ext = os.path.splitext(base)
    paths = []
    for label, t in (("beta", beta), ("beta_half", beta / 2), ("zero", 0.0)):
        K = sweep_snapshot(cech, trace, t)
        fig, ax = plt.subplots(figsize=(4, 4))
        draw_skeleton(ax, points, K, f"t = {t:.4g}: f-vector {K.f_vector()}")
        paths.append(_save(fig, f"{stem}_{label}{ext or '.svg'}"))
    return paths
