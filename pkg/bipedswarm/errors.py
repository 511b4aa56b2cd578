"""Exception hierarchy for bipedswarm."""

from __future__ import annotations

from typing import Any, Optional


class BipedSwarmError(Exception):
    """Base class for every error raised by bipedswarm."""


# ==================== Input validation ====================

class InvalidInputError(BipedSwarmError, ValueError):
    """An argument violates a documented precondition.

    ``field`` names the offending setting relative to its owner, e.g.
    ``particle_count`` or ``knee.sagittal``, when there is one.
    """

    def __init__(self, message: str = "", *, field: str = ""):
        super().__init__(message)
        self.field = field


class NonPositiveHeight(InvalidInputError):
    pass


class HeightOutOfRange(InvalidInputError):
    pass


class BadMassFractions(InvalidInputError):
    pass


class BadLimits(InvalidInputError):
    pass


class NonPositiveLength(InvalidInputError):
    pass


class OutOfPlane(InvalidInputError):
    pass


class Degenerate(InvalidInputError):
    """Fewer than 3 distinct points, or all of them collinear."""


# ==================== Kinematics ====================

class KinematicsError(BipedSwarmError):
    pass


class Unreachable(KinematicsError):
    """The target lies outside the leg's reach annulus."""


class GroundContactFailed(KinematicsError):
    """No knee flexion inside the limits puts the swing ankle on the ground."""


class TargetUnreachable(KinematicsError):
    """A planned via-point cannot be reached from its planned hip."""

    def __init__(self, message: str, *, via_index: int = -1):
        super().__init__(message)
        self.via_index = via_index


# ==================== Stability ====================

class StabilityError(BipedSwarmError):
    pass


class SupportFootAirborne(StabilityError):
    pass


# ==================== Swarm ====================

class SwarmError(BipedSwarmError):
    pass


class EmptySearchSpace(SwarmError):
    pass


class NoConvergence(SwarmError):
    """A sub-swarm finished its iteration budget above the residual tolerance."""

    def __init__(self, message: str, *, joint: str = "", residual: float = float("nan")):
        super().__init__(message)
        self.joint = joint
        self.residual = residual


# ==================== Gait generation ====================

class GaitError(BipedSwarmError):
    pass


class NotForward(GaitError):
    pass


class StepInfeasible(GaitError):
    """A half-step could not be validated within the retry budget.

    The trajectory committed so far travels with the error so callers can
    still write it out.
    """

    def __init__(self, step_index: int, reason: str, trajectory: Any = None):
        super().__init__(f"step {step_index} infeasible: {reason}")
        self.step_index = step_index
        self.reason = reason
        self.trajectory = trajectory


# ==================== File formats ====================

class GaitIOError(BipedSwarmError):
    pass


class _KeyedError(GaitIOError):
    """Error naming the offending configuration key or column."""

    def __init__(self, key: str, message: Optional[str] = None):
        super().__init__(f"{key}: {message}" if message else key)
        self.key = key


class ParseError(_KeyedError):
    pass


class SchemaError(_KeyedError):
    pass


class InvariantError(_KeyedError):
    pass


class EmptyTrajectory(GaitIOError):
    pass


class MissingMarker(GaitIOError):
    pass


class NonMonotoneFrames(GaitIOError):
    pass


class ChannelMismatch(GaitIOError):
    pass


class UnknownChannel(GaitIOError):
    pass


class TooFewRecords(GaitIOError):
    pass
