"""Exception types shared across the package."""


class VcflockError(Exception):
    """Base class for all package-specific errors."""


class ConstraintViolation(VcflockError):
    """A geometric or kinematic constraint (d_min, chord, speed cap) failed."""


class ParseError(VcflockError):
    """A document (formation, scenario, trace) could not be parsed or validated."""


class DuplicateSlotId(ParseError):
    """Two slots in a formation document share an id."""


class UnknownSlot(VcflockError):
    """Referenced slot id does not exist in the formation."""


class EmptyFormation(VcflockError):
    """Operation would leave the formation with no slots."""


class OutOfWindow(VcflockError):
    """Interpolation time lies outside the transition interval."""


class DegenerateSpec(VcflockError):
    """Trajectory spec has too few or coincident waypoints."""


class InfeasibleYaw(VcflockError):
    """Commanded yaw sequence exceeds the yaw rate limit."""


class CountMismatch(VcflockError):
    """Agent count does not match slot count."""


class SetupConflict(VcflockError):
    """Straight-line setup paths would bring two agents closer than d_min."""

    def __init__(self, pair, t, distance):
        self.pair = pair
        self.t = t
        self.distance = distance
        super().__init__(
            f"agents {pair[0]} and {pair[1]} pass within {distance:.3f} m "
            f"at t={t:.2f} s during setup"
        )


class UnknownAgent(VcflockError):
    """Referenced agent id does not exist (or is not in the required state)."""


class EmptyWindow(VcflockError):
    """No metric samples fall inside the requested analysis window."""


class IoError(VcflockError):
    """Reading or writing a run artifact failed."""


class PortInUse(VcflockError):
    """The telemetry endpoint could not bind its port."""


class MalformedMessage(VcflockError):
    """A wire message could not be decoded into a command."""
