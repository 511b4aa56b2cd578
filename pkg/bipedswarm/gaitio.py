"""CSV formats: gait trajectories out and back in, captured markers in.

Trajectory CSV columns, in order::

    step, via, phase,
    hip_left_{x,y,z,theta,alpha}, knee_left_..., ankle_left_...,
    hip_right_..., knee_right_..., ankle_right_...,
    pelvis_x, pelvis_y, pelvis_z, com_x, com_y, stable, fitness

Floats are written as their shortest round-trip decimal, so reading a file
back gives the same bits.

Marker CSV: header ``frame,marker,x,y,z``, one row per marker per frame.
The markers hip, knee, ankle and foot of each side are required.
"""

from __future__ import annotations

import io
import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
import pandas as pd

from bipedswarm.anthro import JOINTS, SIDES, SegmentLengths
from bipedswarm.errors import (
    EmptyTrajectory,
    InvalidInputError,
    MissingMarker,
    NonMonotoneFrames,
    ParseError,
    SchemaError,
)
from bipedswarm.gaitgen import GaitRecord, GaitTrajectory
from bipedswarm.kinematics import JointAngles, LegAngles, LegPose, Phase, Posture, foot_points

logger = logging.getLogger(__name__)

JOINT_FIELDS = ("x", "y", "z", "theta", "alpha")
MARKER_HEADER = ("frame", "marker", "x", "y", "z")
REQUIRED_MARKERS = tuple(f"{name}_{side}" for side in SIDES for name in ("hip", "knee", "ankle", "foot"))

BytesLike = Union[bytes, str]


def trajectory_columns() -> List[str]:
    cols = ["step", "via", "phase"]
    for side in SIDES:
        for joint in JOINTS:
            cols += [f"{joint}_{side}_{f}" for f in JOINT_FIELDS]
    cols += ["pelvis_x", "pelvis_y", "pelvis_z", "com_x", "com_y", "stable", "fitness"]
    return cols


def _num(value) -> str:
    return repr(float(value))


def _row(rec: GaitRecord) -> List[str]:
    row = [str(rec.step), str(rec.via), rec.phase.value]
    for side, leg in rec.posture.legs():
        for joint, angles in zip(JOINTS, leg.angles):
            pos = leg.joint(joint)
            row += [_num(pos[0]), _num(pos[1]), _num(pos[2]), _num(angles.theta), _num(angles.alpha)]
    row += [_num(v) for v in rec.posture.pelvis]
    row += [_num(rec.com[0]), _num(rec.com[1]), "1" if rec.stable else "0", _num(rec.fitness)]
    return row


def export_trajectory(traj: GaitTrajectory) -> bytes:
    if len(traj) == 0:
        raise EmptyTrajectory("nothing to export")
    frame = pd.DataFrame([_row(rec) for rec in traj], columns=trajectory_columns(), dtype=str)
    return frame.to_csv(index=False, lineterminator="\n").encode("utf-8")


def _read_csv(data: BytesLike, what: str) -> pd.DataFrame:
    raw = data.encode("utf-8") if isinstance(data, str) else data
    try:
        return pd.read_csv(io.BytesIO(raw), float_precision="round_trip")
    except pd.errors.EmptyDataError as exc:
        raise EmptyTrajectory(f"{what} file is empty") from exc
    except (pd.errors.ParserError, UnicodeDecodeError) as exc:
        raise ParseError(what, str(exc)) from exc


def _numeric(frame: pd.DataFrame, column: str, kind: str = "float") -> np.ndarray:
    values = pd.to_numeric(frame[column], errors="coerce")
    if values.isna().any():
        raise ParseError(column, "non-numeric value")
    if kind == "int":
        if not (values == values.round()).all():
            raise ParseError(column, "expected integers")
        return values.to_numpy(dtype=np.int64)
    return values.to_numpy(dtype=float)


def import_trajectory(data: BytesLike, lengths: Optional[SegmentLengths] = None) -> GaitTrajectory:
    """Read a trajectory CSV back into records.

    Foot points are not stored; with ``lengths`` they are rebuilt from the
    ankle and the summed leg angles, otherwise they sit on the ankle.
    """
    frame = _read_csv(data, "trajectory")
    missing = [c for c in trajectory_columns() if c not in frame.columns]
    if missing:
        raise SchemaError(missing[0], "missing column")
    if frame.empty:
        raise EmptyTrajectory("trajectory has no records")

    cols = {c: _numeric(frame, c) for c in trajectory_columns() if c != "phase"}
    steps = _numeric(frame, "step", "int")
    vias = _numeric(frame, "via", "int")
    try:
        phases = [Phase(str(p)) for p in frame["phase"]]
    except ValueError as exc:
        raise ParseError("phase", str(exc)) from exc

    traj = GaitTrajectory(lengths=lengths)
    for i in range(len(frame)):
        legs = {}
        for side in SIDES:
            points, angles = {}, []
            for joint in JOINTS:
                p = f"{joint}_{side}"
                points[joint] = np.array([cols[f"{p}_x"][i], cols[f"{p}_y"][i], cols[f"{p}_z"][i]])
                angles.append(JointAngles(cols[f"{p}_theta"][i], cols[f"{p}_alpha"][i]))
            leg_angles = LegAngles(*angles)
            if lengths is not None:
                h, k, a = leg_angles
                foot = foot_points(points["ankle"], h.theta + k.theta + a.theta,
                                   h.alpha + k.alpha + a.alpha, lengths, side)[0]
            else:
                foot = points["ankle"].copy()
            legs[side] = LegPose(points["hip"], points["knee"], points["ankle"], foot, leg_angles)
        pelvis = np.array([cols["pelvis_x"][i], cols["pelvis_y"][i], cols["pelvis_z"][i]])
        record = GaitRecord(
            step=int(steps[i]),
            via=int(vias[i]),
            phase=phases[i],
            posture=Posture(pelvis, legs["left"], legs["right"], phases[i]),
            com=np.array([cols["com_x"][i], cols["com_y"][i]]),
            stable=bool(cols["stable"][i]),
            fitness=float(cols["fitness"][i]),
        )
        try:
            traj.append(record)
        except InvalidInputError as exc:
            raise ParseError("step", str(exc)) from exc
    return traj


# ==================== Markers ====================

@dataclass(frozen=True, eq=False)
class ReferenceTrajectory:
    """Captured marker channels, one array per ``<marker>_<axis>``."""
    channels: Dict[str, np.ndarray]
    frames: np.ndarray
    frame_rate: float = 100.0
    # First and last frame of the gait cycle to compare, inclusive.
    cycle: Optional[Tuple[int, int]] = None

    def normalized(self) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        if len(self.frames) == 0:
            raise EmptyTrajectory("reference has no frames")
        mask = np.ones(len(self.frames), dtype=bool)
        if self.cycle is not None:
            mask = (self.frames >= self.cycle[0]) & (self.frames <= self.cycle[1])
        frames = self.frames[mask]
        if len(frames) == 0:
            raise EmptyTrajectory(f"no frames inside cycle {self.cycle}")
        span = frames[-1] - frames[0]
        t = (frames - frames[0]) / span if span > 0 else np.zeros(len(frames))
        return t.astype(float), {name: values[mask] for name, values in self.channels.items()}


def import_markers(
    data: BytesLike,
    frame_rate: float = 100.0,
    cycle: Optional[Tuple[int, int]] = None,
) -> ReferenceTrajectory:
    if not frame_rate > 0:
        raise ParseError("frame_rate", "must be positive")
    frame = _read_csv(data, "markers")
    if tuple(frame.columns) != MARKER_HEADER:
        raise ParseError("header", f"expected {','.join(MARKER_HEADER)}")

    frame = frame.assign(frame=_numeric(frame, "frame", "int"), marker=frame["marker"].astype(str))
    for axis in "xyz":
        frame[axis] = _numeric(frame, axis)
    markers = set(frame["marker"])
    for name in REQUIRED_MARKERS:
        if name not in markers:
            raise MissingMarker(f"marker {name} absent")

    frame = frame.sort_values(["marker", "frame"], kind="mergesort")
    frames = np.unique(frame["frame"].to_numpy())
    if len(frames) > 1 and np.any(np.diff(frames) != 1):
        raise NonMonotoneFrames(f"frame numbers skip between {frames[0]} and {frames[-1]}")

    channels: Dict[str, np.ndarray] = {}
    for name, group in frame.groupby("marker", sort=True):
        own = group["frame"].to_numpy()
        if len(own) != len(frames) or np.any(own != frames):
            raise NonMonotoneFrames(f"marker {name}: frames repeat or are missing")
        for axis in "xyz":
            channels[f"{name}_{axis}"] = group[axis].to_numpy(dtype=float)
    logger.info("read %d markers over %d frames", len(markers), len(frames))
    return ReferenceTrajectory(channels=channels, frames=frames, frame_rate=frame_rate, cycle=cycle)


def is_marker_file(data: BytesLike) -> bool:
    """True when the header is the marker header rather than a trajectory's."""
    text = data.decode("utf-8", errors="replace") if isinstance(data, bytes) else data
    header = text.lstrip("\ufeff").split("\n", 1)[0].strip()
    return tuple(h.strip() for h in header.split(",")) == MARKER_HEADER
