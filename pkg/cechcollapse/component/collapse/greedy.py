# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import heapq
import logging
from typing import Callable, Dict, Iterable, List, Optional, Set

from cechcollapse.component.collapse_trace import CollapseStep, CollapseTrace
from cechcollapse.component.simplicial_complex import Simplex, SimplicialComplex, boundary

logger = logging.getLogger(__name__)


def default_priority(simplex: Simplex):
    # higher dimensional free faces first, then lexicographic
    return (-len(simplex), simplex)


def event_priority(values: Dict[Simplex, float], default: float = 0.0):
    """Event value of the free face, then lexicographic order."""

    def priority(simplex: Simplex):
        return (values.get(simplex, default), simplex)

    return priority


def greedy_collapse(
    K: SimplicialComplex,
    priority: Optional[Callable[[Simplex], object]] = None,
    event_values: Optional[Dict[Simplex, float]] = None,
):
    """Fire the lowest-priority free pair until none is left.

    With `event_values` the priority is the event value of the free face,
    then lexicographic order, and each step records that value. Without
    them there is no event value to order by and the default priority
    takes larger free faces first, then lexicographic order.

    Returns the collapsed copy of K and its trace.
    """
    if priority is None:
        priority = default_priority if event_values is None else event_priority(event_values)
    K = K.copy()
    trace = CollapseTrace()
    heap = [(priority(s), s) for s in K.simplices]
    heapq.heapify(heap)
    while heap:
        _, s = heapq.heappop(heap)
        if s not in K or K.free_coface(s) is None:
            continue
        event = 0.0 if event_values is None else event_values.get(s, 0.0)
        step = K.collapse(s, event_value=event)
        trace.append(step)
        # freeness can only change for faces of the removed interval
        for r in step.removed:
            for f in boundary(r):
                if f in K:
                    heapq.heappush(heap, (priority(f), f))
    logger.info(f"greedy collapse: {len(trace)} steps, f-vector {K.f_vector()}")
    return K, trace


def serialize_removal(
    K: SimplicialComplex,
    removed: Iterable[Simplex],
    event_value: float = 0.0,
    witnesses=None,
) -> Optional[List[CollapseStep]]:
    """Remove exactly `removed` from K by elementary collapses, if possible.

    Free faces are tried inclusion-minimal first in lexicographic order.
    K is modified only on success; None is returned when the set cannot
    be serialized.
    """
    pending: Set[Simplex] = set(removed)
    if not pending:
        return []
    work = K.copy()
    steps = []
    while pending:
        fired = None
        for s in sorted(pending, key=lambda x: (len(x), x)):
            delta = work.cofaces(s)
            if not delta <= pending:
                continue
            if work.free_coface(s) is None:
                continue
            witness = None if witnesses is None else witnesses.get(s)
            fired = work.collapse(s, event_value=event_value, witness=witness)
            break
        if fired is None:
            return None
        pending -= fired.removed
        steps.append(fired)
    K.remove_simplices(set(removed))
    return steps
