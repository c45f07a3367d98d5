# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import dataclasses

import pytest

from cechcollapse.component.collapse.greedy import greedy_collapse
from cechcollapse.component.collapse_trace import CollapseStep, CollapseTrace, verify_trace
from cechcollapse.component.simplicial_complex import SimplicialComplex

START = SimplicialComplex([(0, 1, 2, 3), (3, 4)])


def _trace():
    end, trace = greedy_collapse(START)
    return end, trace


def _corrupt(trace, index, kind):
    steps = list(trace.steps)
    step = steps[index]
    if kind == "wrong-top":
        steps[index] = dataclasses.replace(step, sigma_max=step.sigma_max + (99,))
    elif kind == "maximal-face":
        steps[index] = dataclasses.replace(step, sigma_min=step.sigma_max)
    elif kind == "short-interval":
        steps[index] = dataclasses.replace(step, removed=step.removed - {step.sigma_max})
    elif kind == "missing-face":
        steps[index] = dataclasses.replace(step, sigma_min=(99,), sigma_max=(99, 100))
    elif kind == "repeated":
        steps.insert(index + 1, step)
    return CollapseTrace(steps)


testcases = ["wrong-top", "maximal-face", "short-interval", "missing-face", "repeated"]


def test_trace_verifies():
    end, trace = _trace()
    report = verify_trace(START, trace, expected_end=end)
    assert report.ok
    assert report.steps_checked == len(trace)
    assert report.betti_start == [1, 0, 0, 0]
    assert trace.replay(START) == end


@pytest.mark.parametrize("args", testcases)
def test_corrupted_traces_are_rejected(args):
    end, trace = _trace()
    for index in range(len(trace)):
        report = verify_trace(START, _corrupt(trace, index, args), expected_end=end)
        assert not report.ok
        assert report.failed_step is not None


def test_wrong_end_is_rejected():
    end, trace = _trace()
    report = verify_trace(START, trace, expected_end=START)
    assert not report.ok
    assert report.end_matches is False


def test_truncated_trace_is_rejected():
    end, trace = _trace()
    report = verify_trace(START, CollapseTrace(trace.steps[:-1]), expected_end=end)
    assert not report.ok


def test_trace_serialization():
    _, trace = _trace()
    again = CollapseTrace.from_dict(trace.to_dict())
    assert again.steps == trace.steps
    assert again.digest() == trace.digest()


def test_min_event_gap():
    step = CollapseStep((0,), (0, 1), frozenset({(0,), (0, 1)}))
    trace = CollapseTrace([dataclasses.replace(step, event_value=t) for t in (0.5, 0.25, 0.2)])
    assert trace.min_event_gap() == pytest.approx(0.05)
    assert CollapseTrace([step]).min_event_gap() is None
