import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).resolve().parents[1]))

from bipedswarm.anthro import build_skeleton  # noqa: E402
from bipedswarm.gaitgen import (  # noqa: E402
    GaitConfig,
    GaitRecord,
    GaitTrajectory,
    generate_gait,
    standing_posture,
    validate_step,
)


@pytest.fixture(scope="session")
def skeleton():
    return build_skeleton(1.70, 70.0)


@pytest.fixture(scope="session")
def lengths(skeleton):
    return skeleton.lengths


@pytest.fixture(scope="session")
def walk(skeleton):
    """The default eight half-step walk, seed 42."""
    return generate_gait(skeleton, GaitConfig())


@pytest.fixture
def make_trajectory(skeleton):
    """Factory for short hand-built trajectories: the standing posture slid forward."""

    def build(n, dx=0.02, with_lengths=True):
        base = standing_posture(skeleton)
        traj = GaitTrajectory(lengths=skeleton.lengths if with_lengths else None)
        for i in range(n):
            posture = base.translated(np.array([dx * i, 0.0, 0.0]))
            outcome = validate_step(posture, skeleton.masses, skeleton.lengths, GaitConfig())
            traj.append(GaitRecord(
                step=i,
                via=0,
                phase=posture.phase,
                posture=posture,
                com=outcome.com,
                stable=True,
                fitness=outcome.fitness,
            ))
        return traj

    return build
