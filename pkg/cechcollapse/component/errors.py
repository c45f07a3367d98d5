# Copyright (c) 2023 CechCollapse Team
# Licensed under The MIT License [see LICENSE for details]


class CechCollapseError(RuntimeError):
    """Base class of every error raised by the package.

    Subclasses keep their evidence (simplices, margins, witnesses) as
    attributes so that reports can serialize it.
    """

    def __init__(self, message, **evidence):
        super().__init__(message)
        self.evidence = evidence

    def to_dict(self):
        return {
            "error": type(self).__name__,
            "message": str(self),
            "evidence": {k: _jsonable(v) for k, v in self.evidence.items()},
        }


def _jsonable(value):
    if isinstance(value, (list, tuple, set, frozenset)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if hasattr(value, "tolist"):
        return value.tolist()
    return value


class InvalidSimplex(CechCollapseError, ValueError):
    pass


class NotFreePair(CechCollapseError):
    pass


class PreconditionViolated(CechCollapseError):
    pass


class Infeasible(CechCollapseError):
    pass


class DegeneratePoint(CechCollapseError):
    pass


class EpsilonUnreachable(CechCollapseError):
    pass


class ToleranceNotMet(CechCollapseError):
    pass


class ComplexDomain(CechCollapseError):
    pass


class CollapseViolation(CechCollapseError):
    pass


class NonCollapseTransition(CechCollapseError):
    pass


class StepTooCoarse(CechCollapseError):
    def __init__(self, message, suggested_steps, **evidence):
        super().__init__(message, suggested_steps=suggested_steps, **evidence)
        self.suggested_steps = suggested_steps


class ProbeTooCoarse(CechCollapseError):
    pass


class MatchCollision(CechCollapseError):
    pass


class ContainmentFail(CechCollapseError):
    pass


class ResourceCap(CechCollapseError):
    pass


class BoundaryTie(object):
    """A simplex whose filtration value is within tolerance of the scale.

    Ties are recorded, not raised: the simplex is included and flagged.
    """

    def __init__(self, simplex, value, alpha):
        self.simplex = simplex
        self.value = value
        self.alpha = alpha

    def to_dict(self):
        return {"simplex": list(self.simplex), "value": self.value, "alpha": self.alpha}

    def __repr__(self):
        return f"BoundaryTie({self.simplex}, value={self.value!r}, alpha={self.alpha!r})"
