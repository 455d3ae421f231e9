"""Exception and warning types shared across the package."""

from __future__ import annotations


class RigidoptError(Exception):
    """Base class for all package-specific errors."""


class DegenerateSpan(RigidoptError):
    """The configuration does not affinely span the ambient space where required."""


class DegenerateSpanWarning(UserWarning):
    """Trivial-motion space is smaller than d(d+1)/2 (degenerate configuration)."""


class DegenerateAnchors(RigidoptError):
    """Anchor vertices chosen for pinning are affinely dependent."""


class ProjectionFailed(RigidoptError):
    """Newton projection back onto the constraint set diverged or hit its
    iteration cap."""


class SingularSystem(RigidoptError):
    """A linear system that the algorithm requires to be nonsingular is not."""


class LICQFailure(RigidoptError):
    """Constraint gradients are linearly dependent where independence is required."""


class BracketInvalid(RigidoptError):
    """A tuning bracket does not actually bracket the sought transition."""


class PairTrackingLost(RigidoptError):
    """The tracked extremum pair could not be followed across a tuning step."""

    def __init__(self, message: str, last_good: float | None = None):
        super().__init__(message)
        self.last_good = last_good


class StressVanishes(RigidoptError):
    """A multiplier/stress component needed for a transfer argument is (near) zero."""


class DocumentError(RigidoptError):
    """A framework document failed validation; ``errors`` lists every violation."""

    def __init__(self, errors: list[str]):
        super().__init__("invalid framework document:\n  - " + "\n  - ".join(errors))
        self.errors = errors
