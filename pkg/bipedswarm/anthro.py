"""Anthropometric skeleton of the walker.

Segment lengths are fixed fractions of body height; segment masses are
fractions of total mass. Mass fractions and joint limits are implementer
defaults and can be overridden through the run configuration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

from bipedswarm.errors import (
    BadLimits,
    BadMassFractions,
    HeightOutOfRange,
    NonPositiveHeight,
)

MIN_HEIGHT = 0.5
MAX_HEIGHT = 2.5

FOOT_LENGTH_RATIO = 0.152
FOOT_BREADTH_RATIO = 0.055
TIBIA_RATIO = 0.246
LEG_RATIO = 0.53
INTER_HIP_RATIO = 0.191

SIDES = ("left", "right")
JOINTS = ("hip", "knee", "ankle")

# Mass-bearing segments, in summation order for the COM.
SEGMENTS = (
    "foot_left", "foot_right",
    "tibia_left", "tibia_right",
    "femur_left", "femur_right",
    "trunk",
)

DEFAULT_MASS_FRACTIONS: Dict[str, float] = {
    "foot_left": 0.0145,
    "foot_right": 0.0145,
    "tibia_left": 0.0465,
    "tibia_right": 0.0465,
    "femur_left": 0.100,
    "femur_right": 0.100,
    "trunk": 0.678,
}

FRACTION_SUM_TOL = 1e-9


@dataclass(frozen=True)
class SegmentLengths:
    """Segment lengths in meters."""
    foot_length: float
    foot_breadth: float
    tibia_length: float
    leg_length: float
    inter_hip: float
    femur_length: float


@dataclass(frozen=True)
class MassModel:
    """Total mass plus per-segment mass fraction and COM location.

    ``com_location`` is the fraction of the segment length measured from its
    proximal end; the trunk lump sits on the pelvis midpoint.
    """
    total_mass: float
    fractions: Mapping[str, float] = field(default_factory=lambda: dict(DEFAULT_MASS_FRACTIONS))
    com_location: Mapping[str, float] = field(
        default_factory=lambda: {name: 0.5 for name in SEGMENTS}
    )

    def mass(self, segment: str) -> float:
        return self.fractions[segment] * self.total_mass


@dataclass(frozen=True)
class AngleRange:
    lo: float
    hi: float

    def clip(self, value: float) -> float:
        return min(max(value, self.lo), self.hi)

    def contains(self, value: float) -> bool:
        return self.lo <= value <= self.hi


@dataclass(frozen=True)
class JointRange:
    """Sagittal (theta) and frontal (alpha) range of one joint, radians."""
    sagittal: AngleRange
    frontal: AngleRange

    @property
    def lower(self) -> Tuple[float, float]:
        return (self.sagittal.lo, self.frontal.lo)

    @property
    def upper(self) -> Tuple[float, float]:
        return (self.sagittal.hi, self.frontal.hi)


def _deg_range(lo: float, hi: float) -> AngleRange:
    return AngleRange(math.radians(lo), math.radians(hi))


@dataclass(frozen=True)
class JointLimits:
    """Angular envelope per joint; the same envelope applies to both legs."""
    hip: JointRange = field(
        default_factory=lambda: JointRange(_deg_range(-25, 35), _deg_range(-15, 15))
    )
    knee: JointRange = field(
        default_factory=lambda: JointRange(_deg_range(0, 70), _deg_range(-15, 15))
    )
    ankle: JointRange = field(
        default_factory=lambda: JointRange(_deg_range(-20, 20), _deg_range(-15, 15))
    )

    def for_joint(self, joint: str) -> JointRange:
        return getattr(self, joint)

    def validate(self) -> None:
        for joint in JOINTS:
            rng = self.for_joint(joint)
            for plane, r in (("sagittal", rng.sagittal), ("frontal", rng.frontal)):
                if not (math.isfinite(r.lo) and math.isfinite(r.hi)) or r.lo >= r.hi:
                    raise BadLimits(f"{joint}.{plane}: min {r.lo} must be below max {r.hi}",
                                    field=f"{joint}.{plane}")
        if self.knee.sagittal.lo < 0.0:
            raise BadLimits("knee.sagittal: minimum below 0 allows hyperextension",
                            field="knee.sagittal")


@dataclass(frozen=True)
class Skeleton:
    height: float
    lengths: SegmentLengths
    masses: MassModel
    limits: JointLimits


def segment_lengths(h: float) -> SegmentLengths:
    """Segment lengths for body height ``h`` (meters)."""
    if not h > 0.0:
        raise NonPositiveHeight(f"height must be positive, got {h}")
    if not MIN_HEIGHT <= h <= MAX_HEIGHT:
        raise HeightOutOfRange(
            f"height {h} m outside [{MIN_HEIGHT}, {MAX_HEIGHT}] m (was it given in cm?)"
        )
    tibia = TIBIA_RATIO * h
    leg = LEG_RATIO * h
    return SegmentLengths(
        foot_length=FOOT_LENGTH_RATIO * h,
        foot_breadth=FOOT_BREADTH_RATIO * h,
        tibia_length=tibia,
        leg_length=leg,
        inter_hip=INTER_HIP_RATIO * h,
        femur_length=leg - tibia,
    )


def validate_mass_model(masses: MassModel) -> None:
    if not masses.total_mass > 0.0:
        raise BadMassFractions(f"total mass must be positive, got {masses.total_mass}")
    names = set(masses.fractions)
    if names != set(SEGMENTS):
        missing = sorted(set(SEGMENTS) - names)
        extra = sorted(names - set(SEGMENTS))
        raise BadMassFractions(f"segments missing {missing}, unknown {extra}")
    for name, frac in masses.fractions.items():
        if not 0.0 < frac < 1.0:
            raise BadMassFractions(f"{name}: fraction {frac} outside (0, 1)", field=name)
    total = math.fsum(masses.fractions.values())
    if abs(total - 1.0) > FRACTION_SUM_TOL:
        raise BadMassFractions(f"fractions sum to {total!r}, expected 1")
    for name in SEGMENTS:
        loc = masses.com_location.get(name)
        if loc is None or not 0.0 <= loc <= 1.0:
            raise BadMassFractions(f"{name}: com_location {loc} outside [0, 1]", field=name)


def build_skeleton(
    h: float,
    M: float,
    *,
    mass_fractions: Optional[Mapping[str, float]] = None,
    com_locations: Optional[Mapping[str, float]] = None,
    limits: Optional[JointLimits] = None,
) -> Skeleton:
    """Assemble a skeleton; defaults apply wherever an override is absent."""
    lengths = segment_lengths(h)
    fractions = dict(mass_fractions) if mass_fractions is not None else dict(DEFAULT_MASS_FRACTIONS)
    locations = {name: 0.5 for name in SEGMENTS}
    if com_locations:
        locations.update(com_locations)
    masses = MassModel(total_mass=M, fractions=fractions, com_location=locations)
    validate_mass_model(masses)

    limits = limits or JointLimits()
    limits.validate()
    return Skeleton(height=h, lengths=lengths, masses=masses, limits=limits)
