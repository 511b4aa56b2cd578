"""Per-channel comparison of a generated gait against another gait or a capture."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Protocol, Tuple

import numpy as np

from bipedswarm.errors import ChannelMismatch, EmptyTrajectory, InvalidInputError


class Normalizable(Protocol):
    def normalized(self) -> Tuple[np.ndarray, Dict[str, np.ndarray]]:
        ...


@dataclass(frozen=True)
class ChannelError:
    rmse: float
    max_abs: float


@dataclass(frozen=True)
class CompareReport:
    channels: Dict[str, ChannelError]
    samples: int

    def format_table(self) -> str:
        width = max([len("channel")] + [len(name) for name in self.channels])
        lines = [f"{'channel':<{width}}  {'rmse':>12}  {'max_abs':>12}"]
        for name, err in self.channels.items():
            lines.append(f"{name:<{width}}  {err.rmse:>12.6g}  {err.max_abs:>12.6g}")
        return "\n".join(lines)


def resample(t: np.ndarray, values: np.ndarray, samples: int) -> np.ndarray:
    """Linear interpolation of one channel onto ``samples`` points over [0, 1]."""
    grid = np.linspace(0.0, 1.0, samples)
    if len(t) == 1:
        return np.full(samples, float(values[0]))
    return np.interp(grid, t, values)


def _select(a: Dict[str, np.ndarray], b: Dict[str, np.ndarray],
            channels: Optional[Iterable[str]]) -> List[str]:
    if channels is None:
        names = [name for name in a if name in b]
        if not names:
            raise ChannelMismatch("the inputs share no channel")
        return names
    names = list(channels)
    missing = [name for name in names if name not in a or name not in b]
    if missing:
        raise ChannelMismatch(f"channels missing from one input: {', '.join(missing)}")
    return names


def compare_trajectories(
    a: Normalizable,
    b: Normalizable,
    channels: Optional[Iterable[str]] = None,
    samples: int = 101,
) -> CompareReport:
    """RMSE and max absolute deviation per channel on a common time grid."""
    if samples < 2:
        raise InvalidInputError("samples must be at least 2")
    ta, ca = a.normalized()
    tb, cb = b.normalized()
    if len(ta) == 0 or len(tb) == 0:
        raise EmptyTrajectory("cannot compare an empty trajectory")

    report = {}
    for name in _select(ca, cb, channels):
        diff = resample(ta, ca[name], samples) - resample(tb, cb[name], samples)
        report[name] = ChannelError(
            rmse=float(np.sqrt(np.mean(diff * diff))),
            max_abs=float(np.max(np.abs(diff))),
        )
    return CompareReport(channels=report, samples=samples)
