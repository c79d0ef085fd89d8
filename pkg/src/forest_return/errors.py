"""Exception hierarchy shared by the library and the command-line front end."""

from __future__ import annotations


class ForestReturnError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ForestReturnError, ValueError):
    """An argument lies outside the domain of the requested computation."""


class SingularParameterError(DomainError):
    """A price-process parameter makes a closed form divide by zero."""


class InfeasibleThinningError(DomainError):
    """A thinning removes more volume than is standing, or hits an empty stand.

    ``index`` is the position of the offending event in its plan, when known.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


class NoBreakEvenError(ForestReturnError):
    """No rotation age in the search bracket recovers the establishment expense."""


class ScenarioError(ForestReturnError, ValueError):
    """A scenario document is malformed or violates a model invariant.

    ``path`` locates the offending field, e.g. ``plan.thinnings[1].time``.
    """

    def __init__(self, message: str, path: str = ""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
