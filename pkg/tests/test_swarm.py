import numpy as np
import pytest

from bipedswarm.anthro import AngleRange, JointLimits, JointRange
from bipedswarm.errors import EmptySearchSpace, InvalidInputError
from bipedswarm.kinematics import child_joint_positions, point3
from bipedswarm.swarm import (
    Particle,
    ParticleRole,
    SubSwarm,
    SwarmConfig,
    init_search_particles,
    local_fitness,
    make_pool,
    run_subswarm,
    substream,
    update_position,
    update_velocity,
)

HIP = point3(0.0, 0.0, 0.874)
FEMUR = 0.4828
WIDE = JointRange(AngleRange(-5.0, 5.0), AngleRange(-5.0, 5.0))


def test_velocity_fixed_point():
    x = np.array([0.2, -0.1])
    v = update_velocity(x, np.zeros(2), x, x, SwarmConfig(), r1=np.ones(2), r2=np.ones(2))
    assert np.array_equal(v, np.zeros(2))


def test_velocity_hand_example():
    cfg = SwarmConfig(c1=2.0, c2=2.0)
    half = np.full(1, 0.5)
    kwargs = dict(r1=half, r2=half)
    raw = update_velocity(np.zeros(1), np.full(1, 0.1), np.ones(1), np.full(1, 2.0), cfg,
                          clamp=False, **kwargs)
    assert raw[0] == pytest.approx(3.1)
    clamped = update_velocity(np.zeros(1), np.full(1, 0.1), np.ones(1), np.full(1, 2.0), cfg, **kwargs)
    assert clamped[0] == pytest.approx(cfg.velocity_clamp)


def test_zero_coefficients_keep_the_velocity():
    cfg = SwarmConfig(c1=0.0, c2=0.0)
    rng = np.random.default_rng(0)
    v = np.array([0.01, -0.015])
    out = update_velocity(np.zeros(2), v, np.ones(2), np.ones(2), cfg, rng)
    assert np.array_equal(out, v)


def test_velocity_draws_one_number_per_component():
    cfg = SwarmConfig()
    a = update_velocity(np.zeros((4, 2)), np.zeros((4, 2)), np.full((4, 2), 0.001),
                        np.zeros((4, 2)), cfg, np.random.default_rng(5))
    assert a.shape == (4, 2)
    assert len(set(a.ravel().tolist())) == 8


def test_position_update():
    x = np.array([0.1, 0.05])
    assert np.array_equal(update_position(x, np.zeros(2), WIDE), x)
    hip = JointLimits().hip
    moved = update_position(np.zeros(2), np.array([3.1, 0.0]), hip)
    assert moved[0] == pytest.approx(hip.sagittal.hi)
    rng = np.random.default_rng(1)
    for _ in range(100):
        p = update_position(rng.uniform(-1, 1, 2), rng.uniform(-2, 2, 2), hip)
        assert hip.sagittal.contains(p[0]) and hip.frontal.contains(p[1])


def test_local_fitness():
    a, b = np.array([0.0, 0.0, 0.0]), np.array([1.0, 2.0, 2.0])
    assert local_fitness(a, a) == 0.0
    assert local_fitness(a, b) == pytest.approx(3.0)
    assert local_fitness(b, a) == local_fitness(a, b)


def test_init_radius_zero_stacks_particles_on_the_memory():
    memory = Particle.memory([0.1, -0.05])
    particles = init_search_particles(memory, SwarmConfig(init_radius=0.0), WIDE, substream(1, 0))
    assert len(particles) == 30
    for p in particles:
        assert np.array_equal(p.position, memory.position)
        assert p.role is ParticleRole.SEARCH
    assert memory.role is ParticleRole.MEMORY


def test_init_stays_inside_limits_and_is_seeded():
    knee = JointLimits().knee
    memory = Particle.memory([0.0, 0.0])
    a = init_search_particles(memory, SwarmConfig(), knee, substream(42, 1, 2))
    b = init_search_particles(memory, SwarmConfig(), knee, substream(42, 1, 2))
    for pa, pb in zip(a, b):
        assert np.array_equal(pa.position, pb.position)
        assert knee.sagittal.contains(pa.position[0]) and knee.frontal.contains(pa.position[1])


def test_init_carries_the_initial_velocity():
    v = np.array([0.01, -0.005])
    particles = init_search_particles(Particle.memory([0.0, 0.0]), SwarmConfig(), WIDE,
                                      substream(0), initial_velocity=v)
    assert all(np.array_equal(p.velocity, v) for p in particles)


def test_sub_swarm_checks_particle_roles():
    memory = Particle.memory([0.0, 0.0])
    search = init_search_particles(memory, SwarmConfig(), WIDE, substream(2))
    with pytest.raises(InvalidInputError):
        SubSwarm("hip_left", search[0], search[1:], WIDE, substream(2))
    with pytest.raises(InvalidInputError):
        SubSwarm("hip_left", memory, search + [Particle.memory([0.1, 0.0])], WIDE, substream(2))
    assert len(SubSwarm("hip_left", memory, search, WIDE, substream(2)).positions) == 30


def test_memory_far_outside_the_envelope():
    with pytest.raises(EmptySearchSpace):
        init_search_particles(Particle.memory([2.0, 0.0]), SwarmConfig(), JointLimits().hip, substream(0))


def test_substreams_are_independent_of_order():
    first = substream(42, 1, 2, 0, 0, 3).random(4)
    substream(42, 9).random(100)
    again = substream(42, 1, 2, 0, 0, 3).random(4)
    other = substream(42, 1, 2, 0, 0, 4).random(4)
    assert np.array_equal(first, again)
    assert not np.array_equal(first, other)


@pytest.mark.parametrize("change", [
    dict(particle_count=1), dict(n1=0), dict(c1=-1.0), dict(c2=-1.0), dict(velocity_clamp=0.0),
    dict(init_radius=-0.1), dict(convergence_eps=0.0), dict(workers=0), dict(eval_chunk=0),
])
def test_config_validation(change):
    with pytest.raises(InvalidInputError) as info:
        SwarmConfig(**change).validate()
    assert info.value.field == next(iter(change))


def test_flat_landscape_keeps_the_memory():
    cfg = SwarmConfig(n1=10)
    sw = SubSwarm.create("hip_left", [0.1, 0.0], cfg, WIDE, substream(3))
    result = run_subswarm(sw, lambda a: np.ones(len(a)), cfg)
    assert result.best_fitness == 1.0
    assert np.array_equal(result.best_position, [0.1, 0.0])
    assert result.iterations == 10
    assert np.array_equal(result.best_velocity, np.zeros(2))


def test_zero_coefficients_and_velocity_keep_every_particle_still():
    cfg = SwarmConfig(c1=0.0, c2=0.0, n1=25)
    sw = SubSwarm.create("knee_left", [0.3, 0.0], cfg, JointLimits().knee, substream(5))
    start = sw.positions.copy()
    target = np.array([1.0, 0.2])
    result = run_subswarm(sw, lambda a: np.linalg.norm(a - target, axis=1), cfg)
    assert result.iterations == 25
    assert np.array_equal(sw.positions, start)
    assert np.array_equal(sw.velocities, np.zeros_like(start))
    assert np.array_equal(sw.best_positions, start)


def test_memory_on_target_stops_immediately():
    cfg = SwarmConfig()
    target = child_joint_positions(HIP, 0.2, 0.05, FEMUR)[0]
    sw = SubSwarm.create("hip_left", [0.2, 0.05], cfg, JointLimits().hip, substream(3))

    def fitness(a):
        return local_fitness(child_joint_positions(HIP, a[:, 0], a[:, 1], FEMUR), target)

    result = run_subswarm(sw, fitness, cfg)
    assert result.iterations == 0
    assert np.array_equal(result.best_position, [0.2, 0.05])


def _knee_target_run(seed, cfg, pool=None):
    hip = JointLimits().hip
    rng = np.random.default_rng(seed)
    theta = rng.uniform(0.9 * hip.sagittal.lo, 0.9 * hip.sagittal.hi)
    alpha = rng.uniform(0.9 * hip.frontal.lo, 0.9 * hip.frontal.hi)
    target = child_joint_positions(HIP, theta, alpha, FEMUR)[0]

    def fitness(a):
        return local_fitness(child_joint_positions(HIP, a[:, 0], a[:, 1], FEMUR), target)

    sw = SubSwarm.create("hip_left", [0.0, 0.0], cfg, hip, substream(seed, 0))
    return run_subswarm(sw, fitness, cfg, pool)


def test_swarm_reaches_reachable_targets():
    cfg = SwarmConfig()
    results = [_knee_target_run(seed, cfg) for seed in range(100)]
    converged = sum(r.best_fitness < 1e-3 for r in results)
    assert converged >= 95
    for r in results:
        assert all(b <= a for a, b in zip(r.history, r.history[1:]))
        assert r.iterations <= cfg.n1


def test_worker_count_does_not_change_the_result():
    serial = _knee_target_run(17, SwarmConfig())
    threaded = _knee_target_run(17, SwarmConfig(workers=3))
    assert np.array_equal(serial.best_position, threaded.best_position)
    assert serial.history == threaded.history


def test_a_shared_pool_gives_the_same_result_and_stays_open():
    cfg = SwarmConfig(workers=3)
    own = _knee_target_run(17, cfg)
    with make_pool(cfg) as pool:
        for _ in range(2):
            shared = _knee_target_run(17, cfg, pool)
            assert np.array_equal(shared.best_position, own.best_position)
            assert shared.history == own.history
        assert pool.submit(abs, -1).result() == 1


def test_serial_config_needs_no_pool():
    assert make_pool(SwarmConfig()) is None
