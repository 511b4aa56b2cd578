"""Global-best particle swarm over one joint's angle pair.

A sub-swarm holds one memory particle (the joint's last validated angles,
which never moves here) and a set of search particles initialized around
it. Particles move by the original velocity/position rules without inertia
weight; velocities are clamped per component and positions are clamped to
the joint's angular envelope.
"""

from __future__ import annotations

import logging
from concurrent.futures import Executor, ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from bipedswarm.anthro import JointRange
from bipedswarm.errors import EmptySearchSpace, InvalidInputError

logger = logging.getLogger(__name__)

# Batched objective: (m, 2) angle pairs -> (m,) fitness values.
BatchFitness = Callable[[np.ndarray], np.ndarray]


class ParticleRole(Enum):
    MEMORY = "memory"
    SEARCH = "search"


@dataclass
class Particle:
    position: np.ndarray
    velocity: np.ndarray
    best_position: np.ndarray
    best_fitness: float = float("inf")
    role: ParticleRole = ParticleRole.SEARCH

    @classmethod
    def memory(cls, position: Sequence[float]) -> "Particle":
        """A particle at rest on ``position``; sub-swarms never move it."""
        pos = np.asarray(position, dtype=float)
        return cls(position=pos, velocity=np.zeros(2), best_position=pos.copy(),
                   role=ParticleRole.MEMORY)


@dataclass(frozen=True)
class SwarmConfig:
    """PSO parameters shared by every sub-swarm."""
    c1: float = 2.0
    c2: float = 2.0
    particle_count: int = 30
    n1: int = 200
    velocity_clamp: float = 0.02
    init_radius: float = 0.3
    convergence_eps: float = 1e-4
    workers: int = 1
    eval_chunk: int = 8

    def validate(self) -> None:
        for name in ("c1", "c2"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be non-negative", field=name)
        if self.particle_count < 2:
            raise InvalidInputError("particle_count must be at least 2", field="particle_count")
        if self.n1 < 1:
            raise InvalidInputError("n1 must be at least 1", field="n1")
        if not self.velocity_clamp > 0:
            raise InvalidInputError("velocity_clamp must be positive", field="velocity_clamp")
        if self.init_radius < 0:
            raise InvalidInputError("init_radius must be non-negative", field="init_radius")
        if not self.convergence_eps > 0:
            raise InvalidInputError("convergence_eps must be positive", field="convergence_eps")
        for name in ("workers", "eval_chunk"):
            if getattr(self, name) < 1:
                raise InvalidInputError(f"{name} must be at least 1", field=name)


@dataclass
class SwarmResult:
    best_position: np.ndarray
    best_fitness: float
    iterations: int
    history: List[float] = field(default_factory=list)
    best_velocity: np.ndarray = field(default_factory=lambda: np.zeros(2))


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for one (seed, key) pair.

    Keys are mixed into the seed by ``SeedSequence`` so the order in which
    sub-swarms run never changes the numbers any of them draws.
    """
    seq = np.random.SeedSequence(entropy=int(seed) & 0xFFFF_FFFF_FFFF_FFFF,
                                 spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(seq))


def _bounds(joint_range: JointRange) -> Tuple[np.ndarray, np.ndarray]:
    return np.array(joint_range.lower), np.array(joint_range.upper)


def update_velocity(
    x: np.ndarray,
    v: np.ndarray,
    p_lbest: np.ndarray,
    p_gbest: np.ndarray,
    cfg: SwarmConfig,
    rng: Optional[np.random.Generator] = None,
    *,
    r1: Optional[np.ndarray] = None,
    r2: Optional[np.ndarray] = None,
    clamp: bool = True,
) -> np.ndarray:
    """New velocity of one particle or a batch (rows) of particles.

    ``r1``/``r2`` default to fresh uniform draws, one per component.
    """
    x = np.asarray(x, dtype=float)
    if r1 is None:
        r1 = rng.random(x.shape)
    if r2 is None:
        r2 = rng.random(x.shape)
    v_new = v + cfg.c1 * r1 * (p_lbest - x) + cfg.c2 * r2 * (p_gbest - x)
    if clamp:
        v_new = np.clip(v_new, -cfg.velocity_clamp, cfg.velocity_clamp)
    return v_new


def update_position(x: np.ndarray, v: np.ndarray, joint_range: JointRange) -> np.ndarray:
    lo, hi = _bounds(joint_range)
    return np.clip(np.asarray(x, dtype=float) + v, lo, hi)


def local_fitness(candidate_pos: np.ndarray, target_pos: np.ndarray) -> np.ndarray:
    """Euclidean distance between candidate joint position(s) and the target."""
    diff = np.asarray(candidate_pos, dtype=float) - np.asarray(target_pos, dtype=float)
    return np.linalg.norm(diff, axis=-1)


def init_search_particles(
    memory: Particle,
    cfg: SwarmConfig,
    joint_range: JointRange,
    rng: np.random.Generator,
    initial_velocity: Optional[np.ndarray] = None,
) -> List[Particle]:
    """Search particles drawn uniformly around the memory, inside the envelope."""
    lo, hi = _bounds(joint_range)
    box_lo = np.maximum(memory.position - cfg.init_radius, lo)
    box_hi = np.minimum(memory.position + cfg.init_radius, hi)
    if np.any(box_lo > box_hi):
        raise EmptySearchSpace(
            f"memory {memory.position} leaves no room inside [{lo}, {hi}]"
        )
    positions = rng.uniform(box_lo, box_hi, size=(cfg.particle_count, 2))
    velocity = np.zeros(2) if initial_velocity is None else np.asarray(initial_velocity, dtype=float)
    return [
        Particle(position=pos, velocity=velocity.copy(), best_position=pos.copy())
        for pos in positions
    ]


class SubSwarm:
    """Memory particle plus search particles for one joint."""

    def __init__(
        self,
        joint: str,
        memory: Particle,
        particles: List[Particle],
        joint_range: JointRange,
        rng: np.random.Generator,
    ):
        if len(particles) < 2:
            raise InvalidInputError("a sub-swarm needs at least 2 search particles")
        if memory.role is not ParticleRole.MEMORY:
            raise InvalidInputError(f"{joint}: the memory slot holds a {memory.role.value} particle")
        if any(p.role is not ParticleRole.SEARCH for p in particles):
            raise InvalidInputError(f"{joint}: a memory particle cannot search")
        self.joint = joint
        self.memory = memory
        self.joint_range = joint_range
        self.rng = rng
        self.positions = np.array([p.position for p in particles], dtype=float)
        self.velocities = np.array([p.velocity for p in particles], dtype=float)
        self.best_positions = self.positions.copy()
        self.best_fitness = np.full(len(particles), np.inf)
        self.gbest_position = memory.position.copy()
        self.gbest_fitness = float("inf")
        # Index into the search particles, -1 while the memory holds the global best.
        self.gbest_index = -1

    @classmethod
    def create(
        cls,
        joint: str,
        memory_position: Sequence[float],
        cfg: SwarmConfig,
        joint_range: JointRange,
        rng: np.random.Generator,
        initial_velocity: Optional[np.ndarray] = None,
    ) -> "SubSwarm":
        memory = Particle.memory(memory_position)
        particles = init_search_particles(memory, cfg, joint_range, rng, initial_velocity)
        return cls(joint, memory, particles, joint_range, rng)

    @property
    def gbest_velocity(self) -> np.ndarray:
        if self.gbest_index < 0:
            return np.zeros(2)
        return self.velocities[self.gbest_index].copy()


def _evaluate(
    fitness: BatchFitness, positions: np.ndarray, cfg: SwarmConfig, pool: Optional[Executor]
) -> np.ndarray:
    # Fixed chunking, whatever the worker count, keeps results bit-identical.
    chunks = [positions[i:i + cfg.eval_chunk] for i in range(0, len(positions), cfg.eval_chunk)]
    results = pool.map(fitness, chunks) if pool is not None else map(fitness, chunks)
    return np.concatenate([np.asarray(r, dtype=float).reshape(-1) for r in results])


def make_pool(cfg: SwarmConfig) -> Optional[ThreadPoolExecutor]:
    """Evaluation pool for ``cfg.workers`` threads, or None when serial."""
    return ThreadPoolExecutor(max_workers=cfg.workers) if cfg.workers > 1 else None


def run_subswarm(
    sw: SubSwarm, fitness: BatchFitness, cfg: SwarmConfig, pool: Optional[Executor] = None
) -> SwarmResult:
    """Iterate the swarm until the global best drops below ``convergence_eps``
    or ``n1`` iterations are spent. Non-convergence is reported, not raised.

    A caller-owned ``pool`` is used as given and left running; without one a
    private pool is made for the run when ``cfg.workers > 1``.
    """
    if pool is not None:
        return _run(sw, fitness, cfg, pool)
    own = make_pool(cfg)
    try:
        return _run(sw, fitness, cfg, own)
    finally:
        if own is not None:
            own.shutdown(wait=True)


def _run(sw: SubSwarm, fitness: BatchFitness, cfg: SwarmConfig, pool: Optional[Executor]) -> SwarmResult:
    memory_fitness = float(_evaluate(fitness, sw.memory.position[None, :], cfg, pool)[0])
    sw.memory.best_fitness = memory_fitness
    sw.gbest_fitness = memory_fitness
    sw.gbest_position = sw.memory.position.copy()
    sw.gbest_index = -1

    values = _evaluate(fitness, sw.positions, cfg, pool)
    sw.best_fitness = values.copy()
    sw.best_positions = sw.positions.copy()
    _elect(sw, values)

    history = [sw.gbest_fitness]
    iterations = 0
    while iterations < cfg.n1 and not sw.gbest_fitness < cfg.convergence_eps:
        iterations += 1
        sw.velocities = update_velocity(
            sw.positions, sw.velocities, sw.best_positions, sw.gbest_position, cfg, sw.rng
        )
        sw.positions = update_position(sw.positions, sw.velocities, sw.joint_range)
        values = _evaluate(fitness, sw.positions, cfg, pool)

        improved = values < sw.best_fitness
        sw.best_fitness = np.where(improved, values, sw.best_fitness)
        sw.best_positions = np.where(improved[:, None], sw.positions, sw.best_positions)
        _elect(sw, values)
        history.append(sw.gbest_fitness)

    logger.debug(
        "sub-swarm %s: best %.3g after %d iterations", sw.joint, sw.gbest_fitness, iterations
    )
    return SwarmResult(
        best_position=sw.gbest_position.copy(),
        best_fitness=sw.gbest_fitness,
        iterations=iterations,
        history=history,
        best_velocity=sw.gbest_velocity,
    )


def _elect(sw: SubSwarm, values: np.ndarray) -> None:
    """Move the global best to the lowest-index particle that strictly beats it."""
    i = int(np.argmin(values))
    if values[i] < sw.gbest_fitness:
        sw.gbest_fitness = float(values[i])
        sw.gbest_position = sw.positions[i].copy()
        sw.gbest_index = i
