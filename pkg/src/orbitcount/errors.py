"""Exception hierarchy shared by every orbitcount module."""


class OrbitCountError(Exception):
    """Base class for all library errors."""


class NonFinite(OrbitCountError, ValueError):
    pass


class AmbiguousBoundary(OrbitCountError):
    """A real eigenvalue sits within tolerance of +1 or -1."""


class NotRigid(OrbitCountError):
    pass


class NotSuperRigid(OrbitCountError):
    pass


class NotSuperRigidGhost(OrbitCountError):
    pass


class OffManifold(OrbitCountError, ValueError):
    pass


class BlowUp(OrbitCountError):
    """Trajectory left the integration bounding box."""


class StepFailure(OrbitCountError):
    """Adaptive step size fell below the minimum step."""


class NoConvergence(OrbitCountError):
    """Newton did not converge; ``escaped`` marks a trajectory that left the box."""

    def __init__(self, msg, escaped=False):
        super().__init__(msg)
        self.escaped = escaped


class CollapsedToZero(OrbitCountError):
    """Shooting converged onto a constant orbit.

    ``near_ghost`` is True when the Jacobian at the limit point has an
    eigenvalue close to ``2*pi*i*k/s`` for a positive integer ``k``.
    """

    def __init__(self, msg, point=None, near_ghost=False):
        super().__init__(msg)
        self.point = point
        self.near_ghost = near_ghost


class FlowDirectionNotPreserved(OrbitCountError):
    pass


class LostTrack(OrbitCountError):
    pass


class UnresolvedEvent(OrbitCountError):
    pass


class NonIntegerLefschetz(OrbitCountError):
    pass


class NonIntegerWeight(OrbitCountError):
    pass


class TooManyPoints(OrbitCountError):
    pass


class NonHyperbolicPoint(OrbitCountError):
    """A periodic point whose linearization has a root-of-unity eigenvalue."""


class ConfigError(OrbitCountError, ValueError):
    """Scenario file could not be parsed or validated.

    ``line`` is 1-based when known.
    """

    def __init__(self, msg, line=None, column=None):
        where = f" (line {line}" + (f", column {column}" if column else "") + ")" if line else ""
        super().__init__(msg + where)
        self.line = line
        self.column = column


class IncompleteCensus(UserWarning):
    """More than half of the Newton refinements in a census failed."""
