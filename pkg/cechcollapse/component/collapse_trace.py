# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]

import hashlib
import json
import logging
from dataclasses import dataclass, field
from typing import FrozenSet, List, Optional, Tuple

from cechcollapse.component.homology import betti_numbers_mod2, same_betti

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CollapseStep:
    sigma_min: Tuple[int, ...]
    sigma_max: Tuple[int, ...]
    removed: FrozenSet[Tuple[int, ...]]
    event_value: float = 0.0
    witness: Optional[Tuple[float, ...]] = None

    def to_dict(self):
        return {
            "sigma_min": list(self.sigma_min),
            "sigma_max": list(self.sigma_max),
            "removed": [list(s) for s in sorted(self.removed, key=lambda s: (len(s), s))],
            "t": self.event_value,
            "witness": None if self.witness is None else list(self.witness),
        }

    @classmethod
    def from_dict(cls, data):
        witness = data.get("witness")
        return cls(
            sigma_min=tuple(data["sigma_min"]),
            sigma_max=tuple(data["sigma_max"]),
            removed=frozenset(tuple(s) for s in data["removed"]),
            event_value=float(data.get("t", 0.0)),
            witness=None if witness is None else tuple(witness),
        )


@dataclass
class CollapseTrace:
    steps: List[CollapseStep] = field(default_factory=list)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)

    def append(self, step: CollapseStep):
        self.steps.append(step)

    def extend(self, other: "CollapseTrace"):
        self.steps.extend(other.steps)

    def replay(self, start):
        K = start.copy()
        for step in self.steps:
            K.collapse(step.sigma_min, step.event_value, step.witness)
        return K

    def min_event_gap(self) -> Optional[float]:
        values = sorted({s.event_value for s in self.steps if s.event_value > 0.0}, reverse=True)
        if len(values) < 2:
            return None
        return min(a - b for a, b in zip(values, values[1:]))

    def to_dict(self):
        return {"steps": [s.to_dict() for s in self.steps]}

    @classmethod
    def from_dict(cls, data):
        return cls([CollapseStep.from_dict(s) for s in data["steps"]])

    def digest(self) -> str:
        payload = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(payload).hexdigest()


@dataclass
class TraceReport:
    ok: bool
    steps_checked: int
    failed_step: Optional[int] = None
    reason: Optional[str] = None
    betti_start: Optional[List[int]] = None
    betti_end: Optional[List[int]] = None
    end_matches: Optional[bool] = None

    def to_dict(self):
        return dict(self.__dict__)


def verify_trace(start, trace: CollapseTrace, expected_end=None, check_betti=True, betti_every=1):
    """Replay `trace` on a copy of `start`, checking every step.

    Each step must be a free pair in the current complex whose recorded
    interval equals the actual cofaces of sigma_min. Betti numbers are
    compared with the starting ones every `betti_every` steps and at the end.
    """
    K = start.copy()
    betti_start = betti_numbers_mod2(K) if check_betti else None

    def fail(i, reason):
        logger.warning(f"trace rejected at step {i}: {reason}")
        return TraceReport(
            ok=False, steps_checked=i, failed_step=i, reason=reason, betti_start=betti_start
        )

    for i, step in enumerate(trace.steps):
        if not set(step.sigma_min) < set(step.sigma_max):
            return fail(i, f"sigma_min {step.sigma_min} not a proper face of {step.sigma_max}")
        delta = K.cofaces(step.sigma_min)
        if not delta:
            return fail(i, f"sigma_min {step.sigma_min} not in the complex")
        top = K.free_coface(step.sigma_min)
        if top is None:
            return fail(i, f"{step.sigma_min} is not a free face")
        if top != step.sigma_max:
            return fail(i, f"free coface is {top}, trace records {step.sigma_max}")
        if set(step.removed) != delta:
            return fail(i, "recorded interval differs from the cofaces of sigma_min")
        K.collapse(step.sigma_min)
        if any(K.cofaces(s) for s in step.removed):
            return fail(i, "face closure broken")
        if check_betti and betti_every and (i + 1) % betti_every == 0:
            if not same_betti(betti_numbers_mod2(K), betti_start):
                return fail(i, "Betti numbers changed")

    if not K.is_face_closed():
        return fail(len(trace.steps), "face closure broken")
    betti_end = betti_numbers_mod2(K) if check_betti else None
    if check_betti and not same_betti(betti_end, betti_start):
        return fail(len(trace.steps), "Betti numbers changed")
    end_matches = None if expected_end is None else K == expected_end
    report = TraceReport(
        ok=end_matches is not False,
        steps_checked=len(trace.steps),
        betti_start=betti_start,
        betti_end=betti_end,
        end_matches=end_matches,
    )
    if end_matches is False:
        report.reason = "end complex differs from the expected one"
        report.failed_step = len(trace.steps)
    return report
