# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import os

import pytest

from cechcollapse.architecture.config import ScenarioConfig
from cechcollapse.architecture.figure import emit_figure
from cechcollapse.architecture.pipeline import STAGES, run_pipeline
from cechcollapse.architecture.utils import read_json

testcases = [
    # 16 samples: epsilon = sin(pi/16) breaks the first sampling condition
    ({"n_points": 16}, "PreconditionViolated"),
    # 4 samples: (r - epsilon)^2 < alpha^2
    ({"n_points": 4}, "ComplexDomain"),
]


@pytest.mark.parametrize("args", testcases)
def test_refusal_at_conditions(args, tmp_path):
    options, error = args
    report = run_pipeline(ScenarioConfig(shape="circle", output_dir=str(tmp_path), **options))
    assert report.exit_code == 1
    assert report.failed_stage == "conditions"
    assert report.error["error"] == error
    assert report.completed == ["sample"]

    on_disk = read_json(os.path.join(tmp_path, "report.json"))
    assert on_disk["exit_code"] == 1
    assert on_disk["failed_stage"] == "conditions"
    manifest = read_json(os.path.join(tmp_path, "manifest.json"))
    assert "points.csv" in manifest["files"]
    assert "cech.cplx" not in manifest["files"]


def _circle(tmp_path):
    return ScenarioConfig(
        shape="circle",
        n_points=40,
        alpha=0.5,
        template="polygon",
        template_n=12,
        steps=16,
        directions=16,
        probe_density=720,
        output_dir=str(tmp_path),
    )


@pytest.mark.slow
def test_circle_scenario(tmp_path):
    report = run_pipeline(_circle(tmp_path))
    assert report.exit_code == 0, report.to_dict()
    assert report.completed == list(STAGES)
    assert report.stages["homology"]["betti"]["final"] == [1, 1]
    assert report.checks["cycle_graph"]
    assert report.checks["isomorphic_to_T"]

    first = open(os.path.join(tmp_path, "report.json"), "rb").read()
    run_pipeline(_circle(tmp_path))
    assert open(os.path.join(tmp_path, "report.json"), "rb").read() == first

    manifest = read_json(os.path.join(tmp_path, "manifest.json"))
    for name in ("points.csv", "cech.cplx", "restricted.cplx", "T.cplx", "final.cplx", "vertex_map.json"):
        assert name in manifest["files"]

    assert len(emit_figure(str(tmp_path), "points")) == 1
    assert len(emit_figure(str(tmp_path), "skeleton")) == 1
    paths = emit_figure(str(tmp_path), "sweep")
    assert [os.path.basename(p) for p in paths] == ["sweep_beta.svg", "sweep_beta_half.svg", "sweep_zero.svg"]
    with pytest.raises(ValueError):
        emit_figure(str(tmp_path), "bogus")


@pytest.mark.slow
def test_sphere_scenario(tmp_path):
    # 642-point icosphere net against the icosphere(2) covering
    config = ScenarioConfig(
        shape="sphere",
        n_points=3,
        alpha=0.36,
        template="icosphere",
        template_n=2,
        samples_per_cell=3,
        dim_cap=3,
        steps=16,
        directions=48,
        probe_density=60000,
        output_dir=str(tmp_path),
    )
    report = run_pipeline(config)
    assert report.exit_code == 0, report.to_dict()
    assert report.completed == list(STAGES)
    assert report.stages["triangulate"]["f_vector"] == [162, 480, 320]
    assert report.stages["robust"]["verdict"] == "Robust"
    assert report.stages["homology"]["betti"]["final"] == [1, 0, 1]
    assert report.checks["closed_surface"]
    assert report.checks["isomorphic_to_T"]
