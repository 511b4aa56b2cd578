from dataclasses import replace

import numpy as np
import pytest

from bipedswarm.anthro import SIDES
from bipedswarm.errors import (
    EmptyTrajectory,
    InvalidInputError,
    NoConvergence,
    NotForward,
    StepInfeasible,
    TargetUnreachable,
)
from bipedswarm.gaitgen import (
    Candidate,
    GaitConfig,
    GaitRecord,
    GaitTrajectory,
    RejectReason,
    Rejected,
    Validated,
    ViaPoint,
    commit_step,
    generate_gait,
    initial_state,
    plan_step_targets,
    recheck,
    solve_posture,
    standing_posture,
    transfer_particle_dynamics,
    validate_step,
)
from bipedswarm.kinematics import Phase
from bipedswarm.swarm import SwarmConfig


@pytest.fixture
def state(skeleton):
    return initial_state(skeleton, GaitConfig())


def _ankle(plan, side):
    return np.array([via.targets[side]["ankle"] for via in plan])


# ==================== Planning ====================

def test_plan_of_the_first_half_step(skeleton, state):
    plan = plan_step_targets(state, GaitConfig(), skeleton.lengths, skeleton.limits)
    assert plan.step_index == 1
    assert plan.support == "left" and plan.swing == "right"
    assert len(plan) == 4

    swing = _ankle(plan, "right")
    np.testing.assert_allclose(swing[:, 0], [0.0625, 0.125, 0.1875, 0.25], atol=1e-12)
    np.testing.assert_allclose(swing[:, 1], -skeleton.lengths.inter_hip / 2, atol=1e-12)
    assert swing[1, 2] == pytest.approx(0.05)
    assert swing[-1, 2] == 0.0
    assert [via.phase for via in plan] == [Phase.LEFT, Phase.LEFT, Phase.LEFT, Phase.DOUBLE]
    assert plan.via_points[-1].landing


def test_plan_moves_the_pelvis_over_the_support_foot(skeleton, state):
    plan = plan_step_targets(state, GaitConfig(), skeleton.lengths, skeleton.limits)
    support_y = state.pins["left"][1]
    for via in plan.via_points[:-1]:
        assert via.pelvis[1] == pytest.approx(support_y)
    last = plan.via_points[-1].pelvis
    assert last[0] == pytest.approx(0.125)
    assert last[1] == pytest.approx(0.0, abs=1e-15)
    assert last[2] == pytest.approx(0.97 * skeleton.lengths.leg_length)


def test_support_ankle_target_stays_pinned(skeleton, state):
    plan = plan_step_targets(state, GaitConfig(), skeleton.lengths, skeleton.limits)
    for via in plan:
        assert np.array_equal(via.targets["left"]["ankle"], state.pins["left"])


def test_zero_clearance_slides_the_foot(skeleton, state):
    plan = plan_step_targets(state, GaitConfig(ground_clearance=0.0), skeleton.lengths)
    assert np.all(_ankle(plan, "right")[:, 2] == 0.0)


def test_every_target_is_within_reach(skeleton, state):
    lengths = skeleton.lengths
    plan = plan_step_targets(state, GaitConfig(), lengths, skeleton.limits)
    for via in plan:
        for side in SIDES:
            t = via.targets[side]
            reach = np.linalg.norm(t["ankle"] - t["hip"])
            assert reach <= lengths.femur_length + lengths.tibia_length + 1e-12


def test_overlong_step_is_unreachable(skeleton, state):
    with pytest.raises(TargetUnreachable) as info:
        plan_step_targets(state, GaitConfig(step_length=0.89), skeleton.lengths, skeleton.limits)
    assert info.value.via_index >= 1


@pytest.mark.parametrize("change", [
    dict(step_length=0.0), dict(step_length=0.95), dict(via_points_per_step=1),
    dict(n2=-1), dict(candidates=0), dict(first_support="middle"), dict(lateral_shift=1.5),
    dict(swarm=SwarmConfig(particle_count=1)),
])
def test_config_validation(skeleton, change):
    with pytest.raises(InvalidInputError):
        replace(GaitConfig(), **change).validate(skeleton.lengths)


# ==================== Solving ====================

def test_targets_at_the_memory_leave_the_posture_unchanged(skeleton, state):
    posture = state.posture
    targets = {
        side: {j: posture.leg(side).joint(j).copy() for j in ("hip", "knee", "ankle", "foot")}
        for side in SIDES
    }
    via = ViaPoint(index=1, phase=Phase.LEFT, pelvis=posture.pelvis.copy(), targets=targets)
    candidate = solve_posture(skeleton, via, state, GaitConfig())
    assert max(candidate.residuals.values()) < 1e-12
    for side, leg in candidate.posture.legs():
        assert leg.angles == posture.leg(side).angles
        np.testing.assert_allclose(leg.ankle, posture.leg(side).ankle, atol=1e-15)


def _solve_first_via(skeleton, state, cfg):
    via = plan_step_targets(state, cfg, skeleton.lengths, skeleton.limits).via_points[0]
    for retry in range(cfg.max_retries + 1):
        try:
            return via, solve_posture(skeleton, via, state, cfg, (1, 1, retry, 0))
        except NoConvergence:
            continue
    pytest.fail("no retry converged")


def test_reachable_via_point_is_solved(skeleton, state):
    cfg = GaitConfig()
    via, candidate = _solve_first_via(skeleton, state, cfg)
    assert len(candidate.residuals) == 6
    assert max(candidate.residuals.values()) < 1e-3
    np.testing.assert_allclose(candidate.posture.left.ankle, state.pins["left"], atol=1e-12)
    assert candidate.posture.phase is Phase.LEFT
    assert set(candidate.velocities) == {"hip", "knee", "ankle"}
    for side, leg in candidate.posture.legs():
        for joint, angles in zip(("hip", "knee", "ankle"), leg.angles):
            rng = skeleton.limits.for_joint(joint)
            assert rng.sagittal.contains(angles.theta) and rng.frontal.contains(angles.alpha)


def test_solve_is_deterministic(skeleton, state):
    cfg = GaitConfig()
    _, a = _solve_first_via(skeleton, state, cfg)
    _, b = _solve_first_via(skeleton, state, cfg)
    assert a.residuals == b.residuals
    assert a.posture.right.angles == b.posture.right.angles


def test_unattainable_tolerance_raises(skeleton, state):
    cfg = GaitConfig(residual_tolerance=1e-12, swarm=SwarmConfig(n1=5))
    via = plan_step_targets(state, cfg, skeleton.lengths, skeleton.limits).via_points[0]
    with pytest.raises(NoConvergence) as info:
        solve_posture(skeleton, via, state, cfg)
    assert info.value.residual > 1e-12


# ==================== Validation and commit ====================

def test_standing_is_validated(skeleton):
    outcome = validate_step(standing_posture(skeleton), skeleton.masses, skeleton.lengths, GaitConfig())
    assert isinstance(outcome, Validated)
    assert outcome.report.polygon.phase is Phase.DOUBLE
    assert outcome.fitness >= 0.0


def test_com_outside_the_single_foot_is_rejected(skeleton):
    posture = standing_posture(skeleton).with_phase(Phase.LEFT)
    outcome = validate_step(posture, skeleton.masses, skeleton.lengths, GaitConfig())
    assert isinstance(outcome, Rejected)
    assert outcome.reason is RejectReason.COM_OUTSIDE_POLYGON
    assert outcome.margin < 0
    assert str(outcome).startswith("ComOutsidePolygon")


def test_airborne_support_is_rejected(skeleton):
    posture = standing_posture(skeleton).translated(np.array([0.0, 0.0, 0.02]))
    outcome = validate_step(posture, skeleton.masses, skeleton.lengths, GaitConfig())
    assert isinstance(outcome, Rejected)
    assert outcome.reason is RejectReason.SUPPORT_FOOT_AIRBORNE


def test_lower_fitness_ranks_first(skeleton):
    cfg = GaitConfig()
    base = standing_posture(skeleton)
    centered = validate_step(base, skeleton.masses, skeleton.lengths, cfg)
    forward = replace(base, right=base.right.translated(np.array([0.25, 0.0, 0.0])))
    offset = validate_step(forward, skeleton.masses, skeleton.lengths, cfg)
    assert isinstance(offset, Validated)
    assert centered.fitness < offset.fitness


def _landing(skeleton):
    base = standing_posture(skeleton)
    posture = replace(base, right=base.right.translated(np.array([0.25, 0.0, 0.0])))
    return validate_step(posture, skeleton.masses, skeleton.lengths, GaitConfig())


def test_landing_commit_toggles_the_support(skeleton, state):
    validated = _landing(skeleton)
    new = commit_step(state, validated)
    assert new.support == "right"
    assert new.swing == "left"
    assert new.step_index == 1
    np.testing.assert_allclose(new.pins["right"], validated.posture.right.ankle)
    assert np.array_equal(new.pins["left"], state.pins["left"])
    assert new.posture is validated.posture


def test_mid_swing_commit_keeps_the_support(skeleton, state):
    landing = _landing(skeleton)
    mid = Validated(Candidate(landing.posture.with_phase(Phase.LEFT)), landing.report, 0.0)
    new = commit_step(state, mid)
    assert new.support == "left"
    assert new.step_index == 0
    assert new.posture.phase is Phase.LEFT


def test_commit_without_advance(skeleton, state):
    standing = validate_step(state.posture, skeleton.masses, skeleton.lengths, GaitConfig())
    with pytest.raises(NotForward):
        commit_step(state, standing)


def test_velocity_transfer_mirrors_and_scales(state):
    done = replace(state, swing_velocities={"hip": np.array([0.1, 0.04])})
    carried = transfer_particle_dynamics(done, 0.5).carried
    np.testing.assert_allclose(carried["hip"], [0.05, -0.02])
    assert np.array_equal(transfer_particle_dynamics(done, 0.0).carried["hip"], np.zeros(2))
    again = transfer_particle_dynamics(done, 0.5).carried
    assert np.array_equal(again["hip"], carried["hip"])


# ==================== Trajectory ====================

def test_trajectory_rejects_out_of_order_records(make_trajectory):
    traj = make_trajectory(2)
    with pytest.raises(InvalidInputError):
        traj.append(traj[0])


def test_empty_trajectory_cannot_be_normalized():
    with pytest.raises(EmptyTrajectory):
        GaitTrajectory().normalized()


def test_channels_without_lengths_have_no_feet(make_trajectory):
    assert "foot_left_x" in make_trajectory(2).channels()
    channels = make_trajectory(2, with_lengths=False).channels()
    assert "foot_left_x" not in channels
    assert {"com_x", "com_y", "pelvis_z", "knee_right_theta", "fitness"} <= set(channels)


# ==================== Generation ====================

def test_empty_walk_is_the_standing_posture(skeleton):
    traj = generate_gait(skeleton, GaitConfig(n2=0))
    assert len(traj) == 1
    record = traj[0]
    assert (record.step, record.via) == (0, 0)
    assert record.phase is Phase.DOUBLE
    assert record.stable


def test_default_walk(walk):
    assert len(walk) == 1 + 8 * 4
    assert all(rec.stable for rec in walk)
    assert walk[-1].step == 8
    pelvis_x = [rec.posture.pelvis[0] for rec in walk]
    assert all(b >= a for a, b in zip(pelvis_x, pelvis_x[1:]))
    assert pelvis_x[-1] > 0
    assert all(max(rec.residuals.values()) <= 1e-3 for rec in walk[1:])


def test_default_walk_keeps_ankles_off_the_floor(walk):
    for rec in walk:
        for side, leg in rec.posture.legs():
            assert leg.ankle[2] >= -1e-6, (rec.step, rec.via, side)


def test_default_walk_support_ankle_stays_pinned(walk):
    records = list(walk)
    for step in range(1, walk[-1].step + 1):
        first = next(i for i, rec in enumerate(records) if rec.step == step)
        support = "left" if records[first].phase is Phase.LEFT else "right"
        pin = records[first - 1].posture.leg(support).ankle
        for rec in records[first:]:
            if rec.step != step:
                break
            assert np.max(np.abs(rec.posture.leg(support).ankle - pin)) < 1e-9


def test_default_walk_advances_one_step_length_per_cycle(walk):
    s = GaitConfig().step_length
    landings = [walk[0]] + [rec for rec in walk if rec.via == 4]
    pelvis_x = [rec.posture.pelvis[0] for rec in landings]
    cycles = np.diff(pelvis_x[::2])
    assert len(cycles) == 4
    assert np.all(np.abs(cycles - s) <= 0.2 * s)


def test_default_walk_keeps_segment_lengths(walk, lengths):
    foot_reach = np.hypot(lengths.foot_length / 2.0, lengths.foot_breadth / 2.0)
    for rec in walk:
        pelvis = rec.posture.pelvis
        for side, leg in rec.posture.legs():
            assert np.linalg.norm(leg.hip - pelvis) == pytest.approx(lengths.inter_hip / 2.0, abs=1e-9)
            assert np.linalg.norm(leg.knee - leg.hip) == pytest.approx(lengths.femur_length, abs=1e-9)
            assert np.linalg.norm(leg.ankle - leg.knee) == pytest.approx(lengths.tibia_length, abs=1e-9)
            assert np.linalg.norm(leg.foot - leg.ankle) == pytest.approx(foot_reach, abs=1e-9)


def test_default_walk_alternates_support(walk):
    landings = [rec for rec in walk if rec.via == 4]
    assert len(landings) == 8
    assert all(rec.phase is Phase.DOUBLE for rec in landings)
    single = [rec.phase for rec in walk if rec.via == 1]
    expected = [Phase.LEFT, Phase.RIGHT] * 4
    assert single == expected


def test_committed_records_revalidate(walk, skeleton):
    for rec in walk:
        assert isinstance(recheck(rec, skeleton.masses, skeleton.lengths), Validated)


def _same(a, b):
    ca, cb = a.channels(), b.channels()
    return ca.keys() == cb.keys() and all(np.array_equal(ca[k], cb[k]) for k in ca)


def test_generation_is_deterministic(skeleton):
    cfg = GaitConfig(n2=2)
    first = generate_gait(skeleton, cfg)
    assert _same(first, generate_gait(skeleton, cfg))
    threaded = replace(cfg, swarm=replace(cfg.swarm, workers=2))
    assert _same(first, generate_gait(skeleton, threaded))


def test_infeasible_step_keeps_the_partial_walk(skeleton):
    cfg = GaitConfig(n2=2, max_retries=0, residual_tolerance=1e-12, swarm=SwarmConfig(n1=5))
    with pytest.raises(StepInfeasible) as info:
        generate_gait(skeleton, cfg)
    assert info.value.step_index == 1
    assert len(info.value.trajectory) == 1


def test_record_type(walk):
    assert isinstance(walk[0], GaitRecord)


def test_threaded_generation_shares_one_pool(skeleton, monkeypatch):
    import bipedswarm.gaitgen as gaitgen
    import bipedswarm.swarm as swarm

    made = []
    real = swarm.make_pool

    def counting(cfg):
        pool = real(cfg)
        made.append(pool)
        return pool

    def forbidden(cfg):
        raise AssertionError("sub-swarm made its own pool")

    monkeypatch.setattr(gaitgen, "make_pool", counting)
    monkeypatch.setattr(swarm, "make_pool", forbidden)
    cfg = GaitConfig(n2=1, swarm=SwarmConfig(workers=2))
    assert len(generate_gait(skeleton, cfg)) == 5
    assert len(made) == 1 and made[0] is not None
