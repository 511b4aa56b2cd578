"""Gait generation by hierarchical sub-swarms.

Each leg carries three sub-swarms (hip, knee, ankle) connected from the hip
down: a joint's sub-swarm moves its own angles and is scored on the position
of the next point along the chain, computed from the parent's selected
global best. A half-step is planned as a short list of via-points; every
via-point is solved, checked for static stability and, if it keeps the
walker standing while moving the swing foot forward, committed to the joint
memories.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import Executor
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Dict, Iterator, List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import brentq

from bipedswarm.anthro import JOINTS, SIDES, JointLimits, MassModel, SegmentLengths, Skeleton
from bipedswarm.errors import (
    Degenerate,
    EmptyTrajectory,
    GroundContactFailed,
    InvalidInputError,
    NoConvergence,
    NotForward,
    StepInfeasible,
    SupportFootAirborne,
    SwarmError,
    TargetUnreachable,
    Unreachable,
)
from bipedswarm.kinematics import (
    ZERO_LEG,
    JointAngles,
    LegAngles,
    Phase,
    Posture,
    child_joint_position,
    child_joint_positions,
    foot_points,
    forward_posture,
    hip_position,
    leg_ik,
    leg_pose,
    level_ankle_angles,
    point3,
)
from bipedswarm.stability import (
    FitnessMode,
    PolygonMode,
    StabilityReport,
    is_statically_stable,
    posture_fitness,
)
from bipedswarm.swarm import (
    SubSwarm,
    SwarmConfig,
    SwarmResult,
    local_fitness,
    make_pool,
    run_subswarm,
    substream,
)

logger = logging.getLogger(__name__)

# Swing ankle counts as on the ground below this height.
GROUND_EXACT = 1e-12
# Half-width of the first knee bracket tried by the ground-contact projection.
KNEE_BRACKET = 0.1


def other_side(side: str) -> str:
    return "right" if side == "left" else "left"


def joint_key(side: str, joint: str) -> str:
    return f"{joint}_{side}"


@dataclass(frozen=True)
class GaitConfig:
    """Parameters of one gait generation run."""
    step_length: float = 0.25
    ground_clearance: float = 0.05
    via_points_per_step: int = 3
    n2: int = 8
    max_retries: int = 5
    swarm: SwarmConfig = field(default_factory=SwarmConfig)
    fitness_mode: FitnessMode = FitnessMode.L1
    polygon_mode: PolygonMode = PolygonMode.FULL
    seed: int = 42
    candidates: int = 1
    pelvis_height_ratio: float = 0.97
    lateral_shift: float = 1.0
    first_support: str = "left"
    transfer_factor: float = 0.5
    residual_tolerance: float = 1e-3
    footprint_offset: float = 0.0

    def validate(self, lengths: Optional[SegmentLengths] = None) -> None:
        if not self.step_length > 0:
            raise InvalidInputError(f"step_length must be positive, got {self.step_length}",
                                    field="step_length")
        if lengths is not None and not self.step_length < lengths.leg_length:
            raise InvalidInputError(
                f"step_length {self.step_length} m is not below the leg length {lengths.leg_length:.4f} m",
                field="step_length",
            )
        if self.ground_clearance < 0:
            raise InvalidInputError("ground_clearance must be non-negative", field="ground_clearance")
        if self.via_points_per_step < 2:
            raise InvalidInputError("via_points_per_step must be at least 2", field="via_points_per_step")
        if self.n2 < 0:
            raise InvalidInputError("n2 must be non-negative", field="n2")
        if self.max_retries < 0:
            raise InvalidInputError("max_retries must be non-negative", field="max_retries")
        if self.candidates < 1:
            raise InvalidInputError("candidates must be at least 1", field="candidates")
        if not 0 < self.pelvis_height_ratio <= 1:
            raise InvalidInputError("pelvis_height_ratio must lie in (0, 1]", field="pelvis_height_ratio")
        if not 0 <= self.lateral_shift <= 1:
            raise InvalidInputError("lateral_shift must lie in [0, 1]", field="lateral_shift")
        if self.first_support not in SIDES:
            raise InvalidInputError(f"first_support must be one of {SIDES}", field="first_support")
        if self.transfer_factor < 0:
            raise InvalidInputError("transfer_factor must be non-negative", field="transfer_factor")
        if not self.residual_tolerance > 0:
            raise InvalidInputError("residual_tolerance must be positive", field="residual_tolerance")
        self.swarm.validate()


# ==================== State and plan ====================

@dataclass(frozen=True, eq=False)
class GaitState:
    """Committed joint memories plus the bookkeeping of the walk."""
    posture: Posture
    support: str
    step_index: int
    # Ground position of each ankle at its last footfall.
    pins: Dict[str, np.ndarray]
    # Pelvis at the start of the current half-step.
    pelvis_anchor: np.ndarray
    # Global-best velocities of the swing leg at its last commit, per joint.
    swing_velocities: Dict[str, np.ndarray] = field(default_factory=dict)
    # Initial velocities for the swing leg's sub-swarms, per joint.
    carried: Dict[str, np.ndarray] = field(default_factory=dict)

    @property
    def swing(self) -> str:
        return other_side(self.support)


@dataclass(frozen=True, eq=False)
class ViaPoint:
    index: int
    phase: Phase
    pelvis: np.ndarray
    # side -> {"hip", "knee", "ankle", "foot"} -> target point
    targets: Dict[str, Dict[str, np.ndarray]]

    @property
    def landing(self) -> bool:
        return self.phase is Phase.DOUBLE


@dataclass(frozen=True)
class ViaPointPlan:
    step_index: int
    support: str
    via_points: Tuple[ViaPoint, ...]

    @property
    def swing(self) -> str:
        return other_side(self.support)

    def __iter__(self) -> Iterator[ViaPoint]:
        return iter(self.via_points)

    def __len__(self) -> int:
        return len(self.via_points)


@dataclass(frozen=True, eq=False)
class Candidate:
    """An assembled posture with the per-joint residuals of its solve."""
    posture: Posture
    residuals: Dict[str, float] = field(default_factory=dict)
    velocities: Dict[str, np.ndarray] = field(default_factory=dict)


class RejectReason(str, Enum):
    COM_OUTSIDE_POLYGON = "ComOutsidePolygon"
    SUPPORT_FOOT_AIRBORNE = "SupportFootAirborne"
    DEGENERATE_POLYGON = "DegeneratePolygon"


@dataclass(frozen=True, eq=False)
class Validated:
    candidate: Candidate
    report: StabilityReport
    fitness: float

    @property
    def posture(self) -> Posture:
        return self.candidate.posture

    @property
    def com(self) -> np.ndarray:
        return self.report.com


@dataclass(frozen=True, eq=False)
class Rejected:
    reason: RejectReason
    margin: float = math.nan
    detail: str = ""

    def __str__(self) -> str:
        if math.isnan(self.margin):
            return self.reason.value
        return f"{self.reason.value} (margin {self.margin:.4g} m)"


# ==================== Trajectory ====================

@dataclass(frozen=True, eq=False)
class GaitRecord:
    step: int
    via: int
    phase: Phase
    posture: Posture
    com: np.ndarray
    stable: bool
    fitness: float
    residuals: Dict[str, float] = field(default_factory=dict)


class GaitTrajectory:
    """Ordered gait records. ``lengths`` is known when the foot points are."""

    def __init__(self, records: Optional[List[GaitRecord]] = None,
                 lengths: Optional[SegmentLengths] = None):
        self.records: List[GaitRecord] = list(records or [])
        self.lengths = lengths

    def append(self, record: GaitRecord) -> None:
        if self.records:
            last = self.records[-1]
            if (record.step, record.via) <= (last.step, last.via):
                raise InvalidInputError(
                    f"record ({record.step}, {record.via}) does not follow ({last.step}, {last.via})"
                )
        self.records.append(record)

    def __len__(self) -> int:
        return len(self.records)

    def __iter__(self) -> Iterator[GaitRecord]:
        return iter(self.records)

    def __getitem__(self, i: int) -> GaitRecord:
        return self.records[i]

    def normalized(self) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        """Channels over a time axis scaled to [0, 1] by record index."""
        if not self.records:
            raise EmptyTrajectory("trajectory has no records")
        n = len(self.records)
        t = np.linspace(0.0, 1.0, n) if n > 1 else np.zeros(1)
        return t, self.channels()

    def channels(self) -> Dict[str, np.ndarray]:
        """Every plottable and comparable series, keyed by channel name."""
        out: Dict[str, List[float]] = {}

        def put(name: str, value: float) -> None:
            out.setdefault(name, []).append(float(value))

        for rec in self.records:
            for side, leg in rec.posture.legs():
                for joint, angles in zip(JOINTS, leg.angles):
                    pos = leg.joint(joint)
                    for axis, value in zip("xyz", pos):
                        put(f"{joint}_{side}_{axis}", value)
                    put(f"{joint}_{side}_theta", angles.theta)
                    put(f"{joint}_{side}_alpha", angles.alpha)
                if self.lengths is not None:
                    for axis, value in zip("xyz", leg.foot):
                        put(f"foot_{side}_{axis}", value)
            for axis, value in zip("xyz", rec.posture.pelvis):
                put(f"pelvis_{axis}", value)
            put("com_x", rec.com[0])
            put("com_y", rec.com[1])
            put("fitness", rec.fitness)
        return {name: np.array(values) for name, values in out.items()}


# ==================== Setup ====================

def standing_posture(skeleton: Skeleton) -> Posture:
    """Zero angles, pelvis at leg height, both feet down."""
    pelvis = point3(0.0, 0.0, skeleton.lengths.leg_length)
    return forward_posture(skeleton, pelvis, ZERO_LEG, ZERO_LEG, Phase.DOUBLE)


def initial_state(skeleton: Skeleton, cfg: GaitConfig) -> GaitState:
    posture = standing_posture(skeleton)
    return GaitState(
        posture=posture,
        support=cfg.first_support,
        step_index=0,
        pins={side: posture.leg(side).ankle.copy() for side in SIDES},
        pelvis_anchor=posture.pelvis.copy(),
    )


# ==================== Planning ====================

def _leg_targets(
    hip: np.ndarray, ankle: np.ndarray, lengths: SegmentLengths, limits: JointLimits, side: str
) -> Dict[str, np.ndarray]:
    """Joint targets of one leg from its closed-form solution with a level foot."""
    hip_a, knee_a = leg_ik(hip, ankle, lengths.femur_length, lengths.tibia_length)
    angles = LegAngles(hip_a, knee_a, level_ankle_angles(hip_a, knee_a, limits))
    pose = leg_pose(hip, angles, lengths, side)
    return {"hip": hip, "knee": pose.knee, "ankle": np.asarray(ankle, dtype=float), "foot": pose.foot}


def plan_step_targets(
    state: GaitState,
    cfg: GaitConfig,
    lengths: SegmentLengths,
    limits: Optional[JointLimits] = None,
) -> ViaPointPlan:
    """Via-points of the next half-step: the swing ankle lifts, advances by
    the step length and lands while the pelvis moves over the support foot
    and forward by half a step."""
    limits = limits or JointLimits()
    support, swing = state.support, state.swing
    start_ankle = state.pins[swing]
    support_ankle = state.pins[support]
    midline = (state.pins["left"][1] + state.pins["right"][1]) / 2.0
    pelvis_z = cfg.pelvis_height_ratio * lengths.leg_length
    s, c = cfg.step_length, cfg.ground_clearance
    count = cfg.via_points_per_step + 1

    via_points = []
    for k in range(1, count + 1):
        u = k / count
        landing = k == count
        swing_ankle = point3(
            start_ankle[0] + s * u,
            start_ankle[1],
            0.0 if landing else 4.0 * c * u * (1.0 - u),
        )
        pelvis_y = midline if landing else midline + cfg.lateral_shift * (support_ankle[1] - midline)
        pelvis = point3(state.pelvis_anchor[0] + s / 2.0 * u, pelvis_y, pelvis_z)

        targets = {}
        for side in SIDES:
            hip = hip_position(pelvis, lengths, side)
            ankle = swing_ankle if side == swing else support_ankle
            try:
                targets[side] = _leg_targets(hip, ankle, lengths, limits, side)
            except Unreachable as exc:
                raise TargetUnreachable(
                    f"via-point {k}: {side} ankle target out of reach ({exc})", via_index=k
                ) from exc

        via_points.append(ViaPoint(
            index=k,
            phase=Phase.DOUBLE if landing else Phase(support),
            pelvis=pelvis,
            targets=targets,
        ))
    return ViaPointPlan(step_index=state.step_index + 1, support=support, via_points=tuple(via_points))


# ==================== Solving ====================

def _run_joint(
    side: str,
    joint: str,
    memory: JointAngles,
    fitness,
    limits: JointLimits,
    cfg: GaitConfig,
    stream: Tuple[int, ...],
    initial_velocity: Optional[np.ndarray],
    pool: Optional[Executor] = None,
) -> SwarmResult:
    index = 3 * SIDES.index(side) + JOINTS.index(joint)
    rng = substream(cfg.seed, *stream, index)
    sw = SubSwarm.create(
        joint_key(side, joint), memory, cfg.swarm, limits.for_joint(joint), rng, initial_velocity
    )
    return run_subswarm(sw, fitness, cfg.swarm, pool)


def _solve_leg(
    side: str,
    targets: Dict[str, np.ndarray],
    memory: LegAngles,
    skeleton: Skeleton,
    cfg: GaitConfig,
    stream: Tuple[int, ...],
    initial_velocities: Dict[str, np.ndarray],
    pool: Optional[Executor] = None,
) -> Tuple[LegAngles, Dict[str, SwarmResult]]:
    lengths, limits = skeleton.lengths, skeleton.limits
    hip = targets["hip"]

    def hip_fitness(a: np.ndarray) -> np.ndarray:
        knees = child_joint_positions(hip, a[:, 0], a[:, 1], lengths.femur_length)
        return local_fitness(knees, targets["knee"])

    results = {"hip": _run_joint(side, "hip", memory.hip, hip_fitness, limits, cfg, stream,
                                 initial_velocities.get("hip"), pool)}
    th, ah = results["hip"].best_position
    knee = child_joint_position(hip, JointAngles(th, ah), lengths.femur_length)

    def knee_fitness(a: np.ndarray) -> np.ndarray:
        ankles = child_joint_positions(knee, th + a[:, 0], ah + a[:, 1], lengths.tibia_length)
        return local_fitness(ankles, targets["ankle"])

    results["knee"] = _run_joint(side, "knee", memory.knee, knee_fitness, limits, cfg, stream,
                                 initial_velocities.get("knee"), pool)
    tk, ak = results["knee"].best_position
    ankle = child_joint_position(knee, JointAngles(th + tk, ah + ak), lengths.tibia_length)

    def ankle_fitness(a: np.ndarray) -> np.ndarray:
        feet = foot_points(ankle, th + tk + a[:, 0], ah + ak + a[:, 1], lengths, side)
        return local_fitness(feet, targets["foot"])

    results["ankle"] = _run_joint(side, "ankle", memory.ankle, ankle_fitness, limits, cfg, stream,
                                  initial_velocities.get("ankle"), pool)
    ta, aa = results["ankle"].best_position

    angles = LegAngles(JointAngles(th, ah), JointAngles(tk, ak), JointAngles(ta, aa))
    return angles, results


def _project_to_ground(
    hip: np.ndarray, angles: LegAngles, skeleton: Skeleton, dz: float
) -> LegAngles:
    """Knee flexion that puts the ankle at ``z + dz == 0``."""
    lengths = skeleton.lengths
    h, k, a = angles
    knee = child_joint_position(hip, h, lengths.femur_length)

    def height(theta_knee: float) -> float:
        shank = JointAngles(h.theta + theta_knee, h.alpha + k.alpha)
        return float(child_joint_position(knee, shank, lengths.tibia_length)[2] + dz)

    if abs(height(k.theta)) <= GROUND_EXACT:
        return angles
    rng = skeleton.limits.knee.sagittal
    brackets = (
        (max(rng.lo, k.theta - KNEE_BRACKET), min(rng.hi, k.theta + KNEE_BRACKET)),
        (rng.lo, rng.hi),
    )
    for lo, hi in brackets:
        if height(lo) * height(hi) <= 0.0:
            theta = brentq(height, lo, hi, xtol=1e-15)
            return LegAngles(h, JointAngles(theta, k.alpha), a)
    raise GroundContactFailed(
        f"no knee flexion in [{rng.lo:.3f}, {rng.hi:.3f}] rad grounds the ankle"
    )


def solve_posture(
    skeleton: Skeleton,
    via: ViaPoint,
    state: GaitState,
    cfg: GaitConfig,
    stream: Tuple[int, ...] = (0, 0, 0, 0),
    pool: Optional[Executor] = None,
) -> Candidate:
    """Run all six sub-swarms for one via-point and assemble the posture.

    ``stream`` is the (step, via, retry, candidate) key of the RNG
    substreams. Both legs search; the result is then moved so the support
    ankle sits exactly on its pin. Raises :class:`NoConvergence` when some
    residual exceeds ``cfg.residual_tolerance``. ``pool`` evaluates particles
    when the swarm config asks for worker threads.
    """
    support = state.support
    solved: Dict[str, LegAngles] = {}
    residuals: Dict[str, float] = {}
    velocities: Dict[str, np.ndarray] = {}
    for side in (support, other_side(support)):
        carried = state.carried if side != support else {}
        angles, results = _solve_leg(
            side, via.targets[side], state.posture.leg(side).angles, skeleton, cfg, stream, carried,
            pool,
        )
        solved[side] = angles
        for joint, res in results.items():
            residuals[joint_key(side, joint)] = res.best_fitness
            if side != support:
                velocities[joint] = res.best_velocity

    for key, value in residuals.items():
        if value > cfg.residual_tolerance:
            raise NoConvergence(
                f"{key} residual {value:.3g} m above {cfg.residual_tolerance:g} m",
                joint=key, residual=value,
            )

    lengths = skeleton.lengths
    posture = forward_posture(skeleton, via.pelvis, solved["left"], solved["right"], via.phase)
    shift = state.pins[support] - posture.leg(support).ankle

    swing = other_side(support)
    if via.targets[swing]["ankle"][2] == 0.0:
        hip = hip_position(via.pelvis, lengths, swing)
        solved[swing] = _project_to_ground(hip, solved[swing], skeleton, float(shift[2]))
        posture = forward_posture(skeleton, via.pelvis, solved["left"], solved["right"], via.phase)

    return Candidate(posture=posture.translated(shift), residuals=residuals, velocities=velocities)


# ==================== Validation and commit ====================

def validate_step(
    candidate: Union[Candidate, Posture],
    masses: MassModel,
    lengths: SegmentLengths,
    cfg: GaitConfig,
) -> Union[Validated, Rejected]:
    if isinstance(candidate, Posture):
        candidate = Candidate(posture=candidate)
    try:
        report = is_statically_stable(
            candidate.posture, masses, lengths,
            mode=cfg.polygon_mode, forward_offset=cfg.footprint_offset,
        )
    except SupportFootAirborne as exc:
        return Rejected(RejectReason.SUPPORT_FOOT_AIRBORNE, detail=str(exc))
    except Degenerate as exc:
        return Rejected(RejectReason.DEGENERATE_POLYGON, detail=str(exc))
    if not report.stable:
        return Rejected(RejectReason.COM_OUTSIDE_POLYGON, margin=report.margin)
    return Validated(
        candidate=candidate,
        report=report,
        fitness=posture_fitness(report.com, report.polygon, cfg.fitness_mode),
    )


def commit_step(state: GaitState, validated: Validated) -> GaitState:
    """Replace the memories by a validated posture that moves the swing foot forward.

    A landing (double-support) posture also ends the half-step: the support
    leg changes, the swing footfall is pinned and the step index advances.
    """
    swing = state.swing
    posture = validated.posture
    advance = float(posture.leg(swing).ankle[0] - state.posture.leg(swing).ankle[0])
    if not advance > 0.0:
        raise NotForward(f"{swing} ankle advances {advance:.3g} m")

    new = replace(state, posture=posture, swing_velocities=dict(validated.candidate.velocities))
    if posture.phase is not Phase.DOUBLE:
        return new
    pins = dict(state.pins)
    pins[swing] = posture.leg(swing).ankle.copy()
    return replace(
        new,
        support=swing,
        step_index=state.step_index + 1,
        pins=pins,
        pelvis_anchor=posture.pelvis.copy(),
    )


def transfer_particle_dynamics(state: GaitState, factor: float = 0.5) -> GaitState:
    """Mirror the finished swing leg's velocities onto the next swing leg."""
    mirror = np.array([1.0, -1.0])
    carried = {joint: factor * mirror * v for joint, v in state.swing_velocities.items()}
    return replace(state, carried=carried)


# ==================== Generation ====================

def _record(step: int, via: int, posture: Posture, validated: Validated) -> GaitRecord:
    return GaitRecord(
        step=step,
        via=via,
        phase=posture.phase,
        posture=posture,
        com=validated.com,
        stable=bool(validated.report.stable),
        fitness=validated.fitness,
        residuals=dict(validated.candidate.residuals),
    )


def _attempt(
    skeleton: Skeleton, via: ViaPoint, state: GaitState, cfg: GaitConfig, step: int, retry: int,
    pool: Optional[Executor] = None,
) -> Union[Validated, str]:
    """Best forward, validated candidate of one retry, or the last failure reason."""
    best: Optional[Validated] = None
    reason = ""
    swing = state.swing
    for c in range(cfg.candidates):
        try:
            candidate = solve_posture(skeleton, via, state, cfg, (step, via.index, retry, c), pool)
        except (NoConvergence, GroundContactFailed) as exc:
            reason = str(exc)
            continue
        outcome = validate_step(candidate, skeleton.masses, skeleton.lengths, cfg)
        if isinstance(outcome, Rejected):
            reason = str(outcome)
            continue
        if not outcome.posture.leg(swing).ankle[0] > state.posture.leg(swing).ankle[0]:
            reason = f"NotForward ({swing} ankle does not advance)"
            continue
        if best is None or outcome.fitness < best.fitness:
            best = outcome
    return best if best is not None else reason


def generate_gait(skeleton: Skeleton, cfg: GaitConfig) -> GaitTrajectory:
    """Walk ``cfg.n2`` half-steps from a standing start.

    Raises :class:`StepInfeasible` carrying the trajectory committed so far
    when a via-point cannot be validated within ``cfg.max_retries`` retries.
    """
    cfg.validate(skeleton.lengths)
    state = initial_state(skeleton, cfg)
    traj = GaitTrajectory(lengths=skeleton.lengths)

    standing = validate_step(state.posture, skeleton.masses, skeleton.lengths, cfg)
    if isinstance(standing, Rejected):
        raise StepInfeasible(0, f"standing posture rejected: {standing}", traj)
    traj.append(_record(0, 0, state.posture, standing))

    pool = make_pool(cfg.swarm)
    try:
        _walk(skeleton, cfg, state, traj, pool)
    finally:
        if pool is not None:
            pool.shutdown(wait=True)
    return traj


def _walk(
    skeleton: Skeleton, cfg: GaitConfig, state: GaitState, traj: GaitTrajectory,
    pool: Optional[Executor],
) -> None:
    for _ in range(cfg.n2):
        step = state.step_index + 1
        try:
            plan = plan_step_targets(state, cfg, skeleton.lengths, skeleton.limits)
        except TargetUnreachable as exc:
            raise StepInfeasible(step, str(exc), traj) from exc

        for via in plan:
            outcome: Union[Validated, str] = ""
            for retry in range(cfg.max_retries + 1):
                try:
                    outcome = _attempt(skeleton, via, state, cfg, step, retry, pool)
                except SwarmError as exc:
                    raise StepInfeasible(step, str(exc), traj) from exc
                if isinstance(outcome, Validated):
                    break
                logger.warning("step %d via %d retry %d: %s", step, via.index, retry, outcome)
            if not isinstance(outcome, Validated):
                raise StepInfeasible(step, outcome, traj)

            state = commit_step(state, outcome)
            traj.append(_record(step, via.index, outcome.posture, outcome))

        state = transfer_particle_dynamics(state, cfg.transfer_factor)
        logger.info(
            "step %d committed: support now %s, pelvis x %.4f m",
            step, state.support, state.pelvis_anchor[0],
        )


def recheck(record: GaitRecord, masses: MassModel, lengths: SegmentLengths,
            cfg: Optional[GaitConfig] = None) -> Union[Validated, Rejected]:
    """Re-validate a stored record against the stability module."""
    return validate_step(record.posture.with_phase(record.phase), masses, lengths, cfg or GaitConfig())
