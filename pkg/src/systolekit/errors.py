"""Exception hierarchy.

Every domain error derives from :class:`SystoleKitError`; the CLI reports the
class name as the machine-readable error code and exits with status 1.
"""
from __future__ import annotations


class SystoleKitError(Exception):
    """Base class for domain errors."""

    def __init__(self, message: str = "", **details):
        super().__init__(message)
        self.details = details

    @property
    def code(self) -> str:
        return type(self).__name__

    def to_dict(self) -> dict:
        out = {"error": self.code, "message": str(self)}
        if self.details:
            out["details"] = {k: _plain(v) for k, v in sorted(self.details.items())}
        return out


def _plain(value):
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, (int, str, bool)) or value is None:
        return value
    try:
        return float(value)
    except (TypeError, ValueError):
        return str(value)


# mesh
class MalformedComplex(SystoleKitError):
    pass


class HomogeneityViolation(SystoleKitError):
    pass


class BranchingViolation(SystoleKitError):
    pass


class NotStronglyConnected(SystoleKitError):
    pass


class NonOrientable(SystoleKitError):
    pass


class MetricInfeasible(SystoleKitError):
    pass


class DegenerateSimplex(MetricInfeasible):
    pass


# metric
class DisconnectedPair(SystoleKitError):
    pass


class EmptySet(SystoleKitError):
    pass


# homotopy
class InvalidPresentation(SystoleKitError):
    pass


class InvalidHomomorphism(SystoleKitError):
    pass


class UndecidableOracle(SystoleKitError):
    pass


class SearchCutoffExceeded(SystoleKitError):
    """Raised when no nontrivial loop was found below the search radius.

    ``lower_bound`` is a certified lower bound for the systole.
    """

    def __init__(self, message: str = "", lower_bound=None, **details):
        super().__init__(message, lower_bound=lower_bound, **details)
        self.lower_bound = lower_bound


class InfiniteSystole(SystoleKitError):
    pass


# cubical
class OutOfRange(SystoleKitError):
    pass


class NetTooSparse(SystoleKitError):
    pass


class PointNotInComplex(SystoleKitError):
    pass


# chains
class Infeasible(SystoleKitError):
    pass


class DegreeMismatch(SystoleKitError):
    pass


class NonpositiveInput(SystoleKitError):
    pass


class NoFeasibleA(SystoleKitError):
    pass


# regularity
class DomainError(SystoleKitError):
    pass


class GridTooCoarse(SystoleKitError):
    pass


class BadRange(SystoleKitError):
    pass


class MissingFilling(SystoleKitError):
    pass
