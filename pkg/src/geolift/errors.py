"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class GeoliftError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(GeoliftError):
    """Bad catalog id, malformed scenario file, or invalid option values."""


class PreconditionError(GeoliftError):
    """An operation was called outside its stated domain of validity."""


class UnsupportedOperationError(GeoliftError):
    """The manifold lacks the structure the operation needs (e.g. a metric)."""


class ExpMapError(GeoliftError):
    """The geodesic never reached parameter 1: the vector lies outside the
    maximal domain of the exponential map, numerically speaking.

    Carries the partial geodesic so callers can inspect how far it got and
    why it stopped.
    """

    def __init__(self, message, path=None):
        super().__init__(message)
        self.path = path


class ConeBreachError(GeoliftError):
    """A lifted curve of a causal path left the causal cone at the base point.

    This would contradict the cone-confinement lemma for lifts of timelike
    curves, so it is reported as an invariant breach, not a plain failure.
    Carries the offending (t, v) sample.
    """

    def __init__(self, message, t=None, v=None):
        super().__init__(message)
        self.t = t
        self.v = v


class NoTimelikeSeedError(GeoliftError):
    """No piecewise-smooth timelike seed path from p to q could be built;
    whether q lies in the chronological future of p is numerically
    undetermined."""
