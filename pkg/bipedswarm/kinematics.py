"""Leg-chain kinematics.

World frame: x forward, y lateral (left positive), z up, ground at z = 0.
Joint angles are relative: a segment's world rotation composes the summed
sagittal and frontal angles of every joint above it, as
``M_sg(sum theta) @ M_ft(sum alpha)``. A segment of length ``l`` at rest
points straight down, ``(0, 0, -l)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterator, NamedTuple, Tuple

import numpy as np

from bipedswarm.anthro import JointLimits, SegmentLengths, Skeleton
from bipedswarm.errors import NonPositiveLength, OutOfPlane, Unreachable

PLANE_TOL = 1e-9
REACH_TOL = 1e-12


class Phase(Enum):
    """Support phase of a posture: which foot carries the weight."""
    LEFT = "left"
    RIGHT = "right"
    DOUBLE = "double"

    @property
    def support_sides(self) -> Tuple[str, ...]:
        if self is Phase.DOUBLE:
            return ("left", "right")
        return (self.value,)


class JointAngles(NamedTuple):
    theta: float
    alpha: float


class LegAngles(NamedTuple):
    hip: JointAngles
    knee: JointAngles
    ankle: JointAngles


ZERO_LEG = LegAngles(JointAngles(0.0, 0.0), JointAngles(0.0, 0.0), JointAngles(0.0, 0.0))


def point3(x: float, y: float, z: float) -> np.ndarray:
    return np.array([x, y, z], dtype=float)


def side_sign(side: str) -> float:
    """+1 for the left leg, -1 for the right one (y points left)."""
    return 1.0 if side == "left" else -1.0


@dataclass(frozen=True, eq=False)
class LegPose:
    """Joint positions and relative joint angles of one leg."""
    hip: np.ndarray
    knee: np.ndarray
    ankle: np.ndarray
    foot: np.ndarray
    angles: LegAngles

    def joint(self, name: str) -> np.ndarray:
        return getattr(self, name)

    def translated(self, t: np.ndarray) -> "LegPose":
        return replace(self, hip=self.hip + t, knee=self.knee + t,
                       ankle=self.ankle + t, foot=self.foot + t)


@dataclass(frozen=True, eq=False)
class Posture:
    """A full joint configuration of the walker."""
    pelvis: np.ndarray
    left: LegPose
    right: LegPose
    phase: Phase = Phase.DOUBLE

    def leg(self, side: str) -> LegPose:
        return getattr(self, side)

    def legs(self) -> Iterator[Tuple[str, LegPose]]:
        yield "left", self.left
        yield "right", self.right

    def translated(self, t: np.ndarray) -> "Posture":
        return replace(self, pelvis=self.pelvis + t,
                       left=self.left.translated(t), right=self.right.translated(t))

    def with_phase(self, phase: Phase) -> "Posture":
        return replace(self, phase=phase)


# ==================== Rotations ====================

def sagittal_rotation(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, 0.0, -s],
                     [0.0, 1.0, 0.0],
                     [s, 0.0, c]])


def frontal_rotation(alpha: float) -> np.ndarray:
    c, s = math.cos(alpha), math.sin(alpha)
    return np.array([[1.0, 0.0, 0.0],
                     [0.0, c, -s],
                     [0.0, s, c]])


def rotate(thetas, alphas, v) -> np.ndarray:
    """Apply ``M_sg(theta) @ M_ft(alpha)`` to ``v`` for arrays of angles.

    Expanded product of the two rotation matrices; returns shape (n, 3).
    """
    th = np.atleast_1d(np.asarray(thetas, dtype=float))
    al = np.atleast_1d(np.asarray(alphas, dtype=float))
    vx, vy, vz = (float(c) for c in v)
    ct, st = np.cos(th), np.sin(th)
    ca, sa = np.cos(al), np.sin(al)
    wy = ca * vy - sa * vz
    wz = sa * vy + ca * vz
    return np.stack([ct * vx - st * wz, wy, st * vx + ct * wz], axis=-1)


def child_joint_positions(parent: np.ndarray, thetas, alphas, l: float) -> np.ndarray:
    """Batched :func:`child_joint_position`: one row per angle pair."""
    if not l > 0.0:
        raise NonPositiveLength(f"segment length must be positive, got {l}")
    return np.asarray(parent, dtype=float) + rotate(thetas, alphas, (0.0, 0.0, -l))


def child_joint_position(parent: np.ndarray, angles: JointAngles, l: float) -> np.ndarray:
    """Position of the joint at the far end of a segment of length ``l``."""
    return child_joint_positions(parent, angles.theta, angles.alpha, l)[0]


def foot_vector(lengths: SegmentLengths, side: str) -> Tuple[float, float, float]:
    """Ankle-to-foot-point vector at rest: the footprint's outer front corner."""
    return (lengths.foot_length / 2.0, side_sign(side) * lengths.foot_breadth / 2.0, 0.0)


def foot_points(ankle: np.ndarray, thetas, alphas, lengths: SegmentLengths, side: str) -> np.ndarray:
    return np.asarray(ankle, dtype=float) + rotate(thetas, alphas, foot_vector(lengths, side))


# ==================== Forward kinematics ====================

def hip_position(pelvis: np.ndarray, lengths: SegmentLengths, side: str) -> np.ndarray:
    return np.asarray(pelvis, dtype=float) + np.array(
        [0.0, side_sign(side) * lengths.inter_hip / 2.0, 0.0]
    )


def leg_pose(hip: np.ndarray, angles: LegAngles, lengths: SegmentLengths, side: str) -> LegPose:
    """Chain a leg from its hip: hip -> knee -> ankle -> foot point."""
    h, k, a = angles
    knee = child_joint_position(hip, h, lengths.femur_length)
    shank = JointAngles(h.theta + k.theta, h.alpha + k.alpha)
    ankle = child_joint_position(knee, shank, lengths.tibia_length)
    foot = foot_points(ankle, shank.theta + a.theta, shank.alpha + a.alpha, lengths, side)[0]
    return LegPose(hip=np.asarray(hip, dtype=float), knee=knee, ankle=ankle, foot=foot, angles=angles)


def forward_posture(
    skeleton: Skeleton,
    pelvis: np.ndarray,
    left: LegAngles,
    right: LegAngles,
    phase: Phase = Phase.DOUBLE,
) -> Posture:
    lengths = skeleton.lengths
    pelvis = np.asarray(pelvis, dtype=float)
    return Posture(
        pelvis=pelvis,
        left=leg_pose(hip_position(pelvis, lengths, "left"), left, lengths, "left"),
        right=leg_pose(hip_position(pelvis, lengths, "right"), right, lengths, "right"),
        phase=phase,
    )


# ==================== Inverse kinematics ====================

def _planar_two_link(x: float, z: float, femur: float, tibia: float) -> Tuple[float, float]:
    """Sagittal two-link solve for the hip-to-ankle vector (x, z), knee flexion >= 0."""
    reach = math.hypot(x, z)
    if reach > femur + tibia + REACH_TOL or reach < abs(femur - tibia) - REACH_TOL:
        raise Unreachable(
            f"target at {reach:.6f} m outside reach [{abs(femur - tibia):.6f}, {femur + tibia:.6f}] m"
        )
    cos_knee = (reach * reach - femur * femur - tibia * tibia) / (2.0 * femur * tibia)
    theta_knee = math.acos(min(1.0, max(-1.0, cos_knee)))
    direction = math.atan2(x, -z)
    inner = math.atan2(tibia * math.sin(theta_knee), femur + tibia * math.cos(theta_knee))
    return direction - inner, theta_knee


def two_link_ik(
    hip: np.ndarray, target_ankle: np.ndarray, femur: float, tibia: float
) -> Tuple[float, float]:
    """Closed-form sagittal-plane leg solve; returns (theta_hip, theta_knee)."""
    if not (femur > 0.0 and tibia > 0.0):
        raise NonPositiveLength(f"segment lengths must be positive, got {femur}, {tibia}")
    d = np.asarray(target_ankle, dtype=float) - np.asarray(hip, dtype=float)
    if abs(d[1]) > PLANE_TOL:
        raise OutOfPlane(f"hip and target differ laterally by {d[1]:.3g} m")
    return _planar_two_link(float(d[0]), float(d[2]), femur, tibia)


def leg_ik(
    hip: np.ndarray, target_ankle: np.ndarray, femur: float, tibia: float
) -> Tuple[JointAngles, JointAngles]:
    """Closed-form 3D leg solve with the knee's frontal angle held at zero.

    The hip's frontal tilt alone produces the lateral offset,
    ``(femur + tibia) * sin(alpha)``; the rest is the sagittal solve on the
    offset scaled by ``1 / cos(alpha)``.
    """
    if not (femur > 0.0 and tibia > 0.0):
        raise NonPositiveLength(f"segment lengths must be positive, got {femur}, {tibia}")
    d = np.asarray(target_ankle, dtype=float) - np.asarray(hip, dtype=float)
    ratio = float(d[1]) / (femur + tibia)
    if abs(ratio) > 1.0:
        raise Unreachable(f"lateral offset {d[1]:.6f} m exceeds the leg length")
    alpha = math.asin(ratio)
    scale = math.cos(alpha)
    if scale <= 0.0:
        raise Unreachable("leg would lie in the ground plane")
    theta_hip, theta_knee = _planar_two_link(float(d[0]) / scale, float(d[2]) / scale, femur, tibia)
    return JointAngles(theta_hip, alpha), JointAngles(theta_knee, 0.0)


def level_ankle_angles(hip: JointAngles, knee: JointAngles, limits: JointLimits) -> JointAngles:
    """Ankle angles that keep the foot level, clipped to the ankle envelope."""
    rng = limits.ankle
    return JointAngles(
        rng.sagittal.clip(-(hip.theta + knee.theta)),
        rng.frontal.clip(-(hip.alpha + knee.alpha)),
    )
