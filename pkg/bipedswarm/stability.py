"""Static stability: COM projection, footprints and the sustentation polygon."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Optional, Sequence

import numpy as np

from bipedswarm.anthro import MassModel, SegmentLengths
from bipedswarm.errors import Degenerate, SupportFootAirborne
from bipedswarm.kinematics import Phase, Posture

GROUND_TOL = 1e-6
CONTAINS_TOL = 1e-9


class FitnessMode(Enum):
    L1 = "l1"
    EUCLID = "euclid"


class PolygonMode(Enum):
    FULL = "full"
    SEGMENT = "segment"


@dataclass(frozen=True, eq=False)
class SupportPolygon:
    """Counter-clockwise convex polygon on the ground plane.

    Two vertices means the constrained ankle-segment mode.
    """
    vertices: np.ndarray
    phase: Phase
    centroid: np.ndarray

    @property
    def is_segment(self) -> bool:
        return len(self.vertices) == 2


@dataclass(frozen=True, eq=False)
class StabilityReport:
    stable: bool
    com: np.ndarray
    polygon: SupportPolygon
    # Signed distance to the boundary, positive inside.
    margin: float
    # Outward unit normal of the boundary piece that sets the margin.
    normal: np.ndarray


def _cross(o: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    return float((a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]))


def footprint(ankle: np.ndarray, lengths: SegmentLengths, forward_offset: float = 0.0) -> np.ndarray:
    """Axis-aligned foot rectangle around the ankle projection, 4 CCW corners."""
    cx = float(ankle[0]) + forward_offset
    cy = float(ankle[1])
    a = lengths.foot_length / 2.0
    b = lengths.foot_breadth / 2.0
    return np.array([
        [cx - a, cy - b],
        [cx + a, cy - b],
        [cx + a, cy + b],
        [cx - a, cy + b],
    ])


def convex_hull(points: Iterable[Sequence[float]]) -> np.ndarray:
    """Monotone-chain hull, counter-clockwise, collinear points dropped."""
    pts = sorted({(float(p[0]), float(p[1])) for p in points})
    if len(pts) < 3:
        raise Degenerate(f"need at least 3 distinct points, got {len(pts)}")
    arr = [np.array(p) for p in pts]

    lower: list = []
    for p in arr:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(arr):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)

    hull = lower[:-1] + upper[:-1]
    if len(hull) < 3:
        raise Degenerate("all points are collinear")
    return np.array(hull)


def _polygon_centroid(vertices: np.ndarray) -> np.ndarray:
    if len(vertices) == 2:
        return (vertices[0] + vertices[1]) / 2.0
    # Shoelace about the first vertex to limit cancellation.
    origin = vertices[0]
    v = vertices - origin
    x, y = v[:, 0], v[:, 1]
    xn, yn = np.roll(x, -1), np.roll(y, -1)
    cross = x * yn - xn * y
    area = cross.sum() / 2.0
    cx = ((x + xn) * cross).sum() / (6.0 * area)
    cy = ((y + yn) * cross).sum() / (6.0 * area)
    return origin + np.array([cx, cy])


def make_polygon(vertices: np.ndarray, phase: Phase) -> SupportPolygon:
    vertices = np.asarray(vertices, dtype=float)
    return SupportPolygon(vertices=vertices, phase=phase, centroid=_polygon_centroid(vertices))


def support_polygon(
    phase: Phase,
    left_ankle: np.ndarray,
    right_ankle: np.ndarray,
    lengths: SegmentLengths,
    *,
    mode: PolygonMode = PolygonMode.FULL,
    forward_offset: float = 0.0,
) -> SupportPolygon:
    if mode is PolygonMode.SEGMENT:
        a = np.asarray(left_ankle[:2], dtype=float)
        b = np.asarray(right_ankle[:2], dtype=float)
        if np.array_equal(a, b):
            raise Degenerate("ankle segment has zero length")
        return make_polygon(np.array([a, b]), phase)

    if phase is Phase.DOUBLE:
        corners = np.vstack([
            footprint(left_ankle, lengths, forward_offset),
            footprint(right_ankle, lengths, forward_offset),
        ])
        return make_polygon(convex_hull(corners), phase)

    ankle = left_ankle if phase is Phase.LEFT else right_ankle
    return make_polygon(footprint(ankle, lengths, forward_offset), phase)


def centroid(polygon: SupportPolygon) -> np.ndarray:
    return polygon.centroid


def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    ab = b - a
    t = float(np.dot(p - a, ab) / np.dot(ab, ab))
    t = min(1.0, max(0.0, t))
    return float(np.linalg.norm(p - (a + t * ab)))


def _boundary_margin(polygon: SupportPolygon, p: np.ndarray):
    """(signed margin, outward normal) of ``p``; margin is positive inside."""
    v = polygon.vertices
    if polygon.is_segment:
        a, b = v
        d = b - a
        normal = np.array([d[1], -d[0]]) / math.hypot(d[0], d[1])
        return -_segment_distance(p, a, b), normal

    best, best_normal = math.inf, None
    for i in range(len(v)):
        a, b = v[i], v[(i + 1) % len(v)]
        edge = b - a
        length = math.hypot(edge[0], edge[1])
        # Interior lies to the left of each CCW edge.
        dist = _cross(a, b, p) / length
        if dist < best:
            best = dist
            best_normal = np.array([edge[1], -edge[0]]) / length
    return best, best_normal


def contains(polygon: SupportPolygon, p: np.ndarray) -> bool:
    """Closed-set point test with a 1e-9 m tolerance."""
    margin, _ = _boundary_margin(polygon, np.asarray(p, dtype=float)[:2])
    return margin >= -CONTAINS_TOL


def _segment_points(posture: Posture):
    """(segment name, proximal point, distal point) for every mass-bearing segment."""
    for side, leg in posture.legs():
        yield f"femur_{side}", leg.hip, leg.knee
        yield f"tibia_{side}", leg.knee, leg.ankle
        yield f"foot_{side}", leg.ankle, leg.foot
    yield "trunk", posture.pelvis, posture.pelvis


def com_projection(posture: Posture, masses: MassModel) -> np.ndarray:
    """Floor projection of the mass-weighted mean of segment COM points."""
    weighted = np.zeros(2)
    for name, proximal, distal in _segment_points(posture):
        loc = masses.com_location[name]
        point = proximal + loc * (distal - proximal)
        weighted += masses.mass(name) * point[:2]
    return weighted / masses.total_mass


def is_statically_stable(
    posture: Posture,
    masses: MassModel,
    lengths: SegmentLengths,
    *,
    mode: PolygonMode = PolygonMode.FULL,
    forward_offset: float = 0.0,
    com: Optional[np.ndarray] = None,
) -> StabilityReport:
    for side in posture.phase.support_sides:
        z = float(posture.leg(side).ankle[2])
        if z > GROUND_TOL:
            raise SupportFootAirborne(f"{side} support ankle is {z:.3g} m above ground")

    polygon = support_polygon(
        posture.phase, posture.left.ankle, posture.right.ankle, lengths,
        mode=mode, forward_offset=forward_offset,
    )
    com = com_projection(posture, masses) if com is None else np.asarray(com, dtype=float)
    margin, normal = _boundary_margin(polygon, com)
    return StabilityReport(
        stable=margin >= -CONTAINS_TOL, com=com, polygon=polygon, margin=margin, normal=normal
    )


def posture_fitness(
    com: np.ndarray, polygon: SupportPolygon, mode: FitnessMode = FitnessMode.L1
) -> float:
    """Distance between the COM projection and the polygon centroid."""
    dx = float(com[0] - polygon.centroid[0])
    dy = float(com[1] - polygon.centroid[1])
    if mode is FitnessMode.EUCLID:
        return math.hypot(dx, dy)
    return abs(dx) + abs(dy)
