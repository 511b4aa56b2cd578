"""Run configuration: one JSON document describing a whole generation run.

Layout::

    {
      "height": 1.70, "mass": 70.0, "seed": 42, "steps": 8,
      "fitness_mode": "l1", "polygon_mode": "full",
      "swarm": {"c1": 2.0, ...},
      "gait": {"step_length": 0.25, ...},
      "mass_fractions": {"trunk": 0.678, ...},
      "joint_limits": {"knee": {"sagittal": [0, 70], "frontal": [-15, 15]}, ...}
    }

Every key is optional. ``mass_fractions`` entries override the defaults one
segment at a time; ``joint_limits`` are given in degrees.
"""

from __future__ import annotations

import json
import logging
import math
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field, fields, replace
from typing import Any, Dict, Iterator, Mapping, Optional, Union

from bipedswarm.anthro import (
    DEFAULT_MASS_FRACTIONS,
    JOINTS,
    AngleRange,
    JointLimits,
    JointRange,
    Skeleton,
    build_skeleton,
)
from bipedswarm.errors import InvalidInputError, InvariantError, ParseError, SchemaError
from bipedswarm.gaitgen import GaitConfig
from bipedswarm.stability import FitnessMode, PolygonMode
from bipedswarm.swarm import SwarmConfig

logger = logging.getLogger(__name__)

PLANES = ("sagittal", "frontal")


@dataclass(frozen=True)
class GaitSettings:
    """The ``gait`` section: GaitConfig fields not set at the top level."""
    step_length: float = 0.25
    ground_clearance: float = 0.05
    via_points_per_step: int = 3
    max_retries: int = 5
    candidates: int = 1
    pelvis_height_ratio: float = 0.97
    lateral_shift: float = 1.0
    first_support: str = "left"
    transfer_factor: float = 0.5
    residual_tolerance: float = 1e-3
    footprint_offset: float = 0.0


@dataclass(frozen=True)
class RunConfig:
    height: float = 1.70
    mass: float = 70.0
    seed: int = 42
    steps: int = 8
    fitness_mode: str = FitnessMode.L1.value
    polygon_mode: str = PolygonMode.FULL.value
    swarm: SwarmConfig = field(default_factory=SwarmConfig)
    gait: GaitSettings = field(default_factory=GaitSettings)
    mass_fractions: Dict[str, float] = field(default_factory=dict)
    joint_limits: Dict[str, Dict[str, list]] = field(default_factory=dict)

    # ---------- builders ----------

    def limits(self) -> JointLimits:
        defaults = JointLimits()
        ranges = {}
        for joint in JOINTS:
            base = defaults.for_joint(joint)
            override = self.joint_limits.get(joint, {})
            planes = {}
            for plane in PLANES:
                if plane in override:
                    lo, hi = override[plane]
                    planes[plane] = AngleRange(math.radians(lo), math.radians(hi))
                else:
                    planes[plane] = getattr(base, plane)
            ranges[joint] = JointRange(**planes)
        return JointLimits(**ranges)

    def skeleton(self) -> Skeleton:
        fractions = dict(DEFAULT_MASS_FRACTIONS)
        fractions.update(self.mass_fractions)
        return build_skeleton(self.height, self.mass, mass_fractions=fractions, limits=self.limits())

    def gait_config(self) -> GaitConfig:
        return GaitConfig(
            n2=self.steps,
            seed=self.seed,
            swarm=self.swarm,
            fitness_mode=FitnessMode(self.fitness_mode),
            polygon_mode=PolygonMode(self.polygon_mode),
            **asdict(self.gait),
        )

    # ---------- validation ----------

    def validate(self) -> None:
        """Check every module invariant; errors name the offending key by its dotted path."""
        with _invariant("height"):
            build_skeleton(self.height, 1.0)
        if not (isinstance(self.mass, (int, float)) and self.mass > 0):
            raise InvariantError("mass", f"must be positive, got {self.mass}")
        if not 0 <= self.seed < 2 ** 64:
            raise InvariantError("seed", "must be an unsigned 64-bit integer")
        if self.steps < 0:
            raise InvariantError("steps", "must be non-negative")
        with _invariant("joint_limits"):
            self.limits().validate()
        # A bad sum is keyed by the first overridden fraction.
        with _invariant("mass_fractions", default=min(self.mass_fractions, default="")):
            self.skeleton()
        with _invariant("swarm"):
            self.swarm.validate()
        with _invariant("gait"):
            self.gait_config().validate(self.skeleton().lengths)

    # ---------- JSON ----------

    def to_dict(self) -> Dict[str, Any]:
        return {
            "height": self.height,
            "mass": self.mass,
            "seed": self.seed,
            "steps": self.steps,
            "fitness_mode": self.fitness_mode,
            "polygon_mode": self.polygon_mode,
            "swarm": asdict(self.swarm),
            "gait": asdict(self.gait),
            "mass_fractions": dict(self.mass_fractions),
            "joint_limits": {j: {p: list(r) for p, r in planes.items()}
                             for j, planes in self.joint_limits.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RunConfig":
        if not isinstance(data, Mapping):
            raise SchemaError("<root>", "expected a JSON object")
        top = {f.name: f for f in fields(cls)}
        _reject_unknown(data, top, "")
        values: Dict[str, Any] = {}
        for key, value in data.items():
            if key == "swarm":
                values[key] = _section(SwarmConfig, value, "swarm")
            elif key == "gait":
                values[key] = _section(GaitSettings, value, "gait")
            elif key == "mass_fractions":
                values[key] = _mass_fractions(value)
            elif key == "joint_limits":
                values[key] = _joint_limits(value)
            else:
                values[key] = _scalar(value, top[key].type, key)
        for key in ("fitness_mode", "polygon_mode"):
            if key in values:
                enum = FitnessMode if key == "fitness_mode" else PolygonMode
                if values[key] not in {m.value for m in enum}:
                    raise SchemaError(key, f"expected one of {[m.value for m in enum]}")
        cfg = cls(**values)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, data: Union[str, bytes, None]) -> "RunConfig":
        if not data:
            return cls()
        try:
            raw = json.loads(data)
        except (json.JSONDecodeError, UnicodeDecodeError) as exc:
            raise ParseError("<root>", f"malformed JSON: {exc}") from exc
        return cls.from_dict(raw)

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with top-level fields replaced; ``None`` values are ignored."""
        changes = {k: v for k, v in overrides.items() if v is not None}
        if not changes:
            return self
        cfg = replace(self, **changes)
        cfg.validate()
        return cfg


def load_config(data: Union[str, bytes, None]) -> RunConfig:
    return RunConfig.from_json(data)


def dump_config(cfg: RunConfig) -> bytes:
    return (cfg.to_json() + "\n").encode("utf-8")


# ==================== Schema helpers ====================

@contextmanager
def _invariant(section: str, default: str = "") -> Iterator[None]:
    """Re-raise validation failures keyed by ``section.field``."""
    try:
        yield
    except InvalidInputError as exc:
        name = exc.field or default
        raise InvariantError(f"{section}.{name}" if name else section, str(exc)) from exc


def _reject_unknown(data: Mapping[str, Any], known, prefix: str) -> None:
    for key in data:
        if key not in known:
            raise SchemaError(f"{prefix}{key}", "unknown key")


_TYPE_NAMES = {"float": float, "int": int, "str": str}


def _scalar(value: Any, annotation: Any, key: str) -> Any:
    kind = _TYPE_NAMES.get(annotation if isinstance(annotation, str) else annotation.__name__)
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise SchemaError(key, f"expected a number, got {type(value).__name__}")
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise SchemaError(key, f"expected an integer, got {type(value).__name__}")
        return value
    if kind is str:
        if not isinstance(value, str):
            raise SchemaError(key, f"expected a string, got {type(value).__name__}")
        return value
    raise SchemaError(key, "unsupported field type")


def _section(cls, value: Any, name: str):
    if not isinstance(value, Mapping):
        raise SchemaError(name, "expected an object")
    known = {f.name: f for f in fields(cls)}
    _reject_unknown(value, known, f"{name}.")
    return cls(**{k: _scalar(v, known[k].type, f"{name}.{k}") for k, v in value.items()})


def _mass_fractions(value: Any) -> Dict[str, float]:
    if not isinstance(value, Mapping):
        raise SchemaError("mass_fractions", "expected an object")
    _reject_unknown(value, DEFAULT_MASS_FRACTIONS, "mass_fractions.")
    return {k: _scalar(v, float, f"mass_fractions.{k}") for k, v in value.items()}


def _joint_limits(value: Any) -> Dict[str, Dict[str, list]]:
    if not isinstance(value, Mapping):
        raise SchemaError("joint_limits", "expected an object")
    _reject_unknown(value, JOINTS, "joint_limits.")
    out: Dict[str, Dict[str, list]] = {}
    for joint, planes in value.items():
        key = f"joint_limits.{joint}"
        if not isinstance(planes, Mapping):
            raise SchemaError(key, "expected an object")
        _reject_unknown(planes, PLANES, f"{key}.")
        out[joint] = {}
        for plane, bounds in planes.items():
            pkey = f"{key}.{plane}"
            if not isinstance(bounds, list) or len(bounds) != 2:
                raise SchemaError(pkey, "expected [min, max] in degrees")
            out[joint][plane] = [_scalar(b, float, pkey) for b in bounds]
    return out


def resolve(path: Optional[str] = None, **overrides: Any) -> RunConfig:
    """Config file (if any) with explicit overrides applied on top."""
    cfg = RunConfig()
    if path:
        try:
            with open(path, "rb") as fh:
                cfg = load_config(fh.read())
        except OSError as exc:
            raise ParseError(path, f"cannot read: {exc.strerror}") from exc
        logger.info("loaded configuration from %s", path)
    return cfg.with_overrides(**overrides)
