"""Exception hierarchy shared by every module.

All errors derive from :class:`HarnackLabError`, itself a ``ValueError``, so
callers that only care about "bad input" can catch ``ValueError``.
"""

from __future__ import annotations


class HarnackLabError(ValueError):
    """Base class for all library errors."""


class ParameterError(HarnackLabError):
    """A model parameter lies outside its admissible range."""


class OrderingError(HarnackLabError):
    """Two times were supplied in the wrong order (need t1 < t2)."""


class DomainError(HarnackLabError):
    """A value lies outside the domain where a formula is defined."""


class ConfigError(HarnackLabError):
    """A solver or run configuration is invalid."""


class ShapeError(HarnackLabError):
    """Array shapes or knot vectors do not match."""


class RegionError(HarnackLabError):
    """A space-time region is empty or not contained in the grid."""


class ContainmentError(HarnackLabError):
    """Internal consistency failure in the nested-cylinder construction."""
