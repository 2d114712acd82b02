"""Exception hierarchy shared by every module."""


class SftLabError(Exception):
    """Base class for all library errors."""


class SiteOutOfShape(SftLabError, KeyError):
    pass


class OverlappingShapes(SftLabError, ValueError):
    pass


class UnknownSymbol(SftLabError, ValueError):
    pass


class RegionTooLarge(SftLabError):
    pass


class InfeasibleBoundary(SftLabError):
    pass


class InvalidDistribution(SftLabError, ValueError):
    pass


class EmptyMeasure(SftLabError, ValueError):
    pass


class StateExplosion(SftLabError):
    pass


class NonConvergence(SftLabError):
    def __init__(self, message, bracket=None):
        super().__init__(message)
        self.bracket = bracket


class NotMultiple(SftLabError, ValueError):
    pass


class NotMinusAtV(SftLabError, ValueError):
    pass


class StaleContour(SftLabError, ValueError):
    pass


class TooLarge(SftLabError, ValueError):
    pass


class LevelTooLarge(SftLabError, ValueError):
    pass


class LevelTooSmall(SftLabError, ValueError):
    pass


class PrefixTooShort(SftLabError, ValueError):
    pass


class LabelOutOfRange(SftLabError, ValueError):
    pass


class NoOccurrences(SftLabError, ValueError):
    pass


class ShapeTooSmall(SftLabError, ValueError):
    pass


class AlphabetMismatch(SftLabError, ValueError):
    pass


class TooManyLabelings(SftLabError):
    pass


class ImageNotFound(SftLabError, KeyError):
    pass


class NeighborhoodContainsBlank(SftLabError):
    """A substitution-branch neighbourhood held a blank; the containment property failed."""


class InvariantViolation(SftLabError, AssertionError):
    """A checked mathematical invariant did not hold.

    ``name`` identifies the invariant so reports can list it.
    """

    def __init__(self, name, detail=""):
        super().__init__(f"{name}: {detail}" if detail else name)
        self.name = name
        self.detail = detail


def check(condition, name, detail=""):
    if not condition:
        raise InvariantViolation(name, detail)
