# Standard library imports
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import List, Optional, Sequence, Tuple

# Third-party imports
import numpy as np

# Local application imports
from src.database.records import DatasetManifest, Frame, Suite, Trajectory
from src.language.templates import describe_stage
from src.scripted.policies import NOISE_SIGMA, make_controller, suite_horizon
from src.sim.domains import DomainConfig
from src.sim.render import render
from src.sim.tasks import CCW, CW, TaskSpec, default_tasks
from src.sim.world import WorldState, proprio, reset, step, success
from src.training.randomization import domain_randomize

logger = logging.getLogger(__name__)

# Cap on attempted episodes per requested trajectory when failures are dropped
MAX_ATTEMPTS_FACTOR = 5


def episode_seed(master_seed: int, index: int) -> int:
    """Independent per-episode seed split from the master seed"""
    return int(np.random.SeedSequence([master_seed, index]).generate_state(1)[0])


def run_episode(
    task: TaskSpec,
    domain: DomainConfig,
    seed: int,
    noise: bool = True,
    initial_state: Optional[WorldState] = None,
    horizon: Optional[int] = None,
) -> Tuple[Trajectory, List[WorldState]]:
    """Roll out the scripted expert and record every frame with its stage and description"""
    state = initial_state if initial_state is not None else reset(task, domain, seed=seed)
    rng = np.random.default_rng([seed, 1]) if noise else None
    controller = make_controller(task, domain, rng=rng, noise_sigma=NOISE_SIGMA if noise else 0.0)
    horizon = horizon or suite_horizon(task.suite, domain)

    frames = []
    history = [state]
    for _ in range(horizon):
        action, stage = controller.act(state)
        action = action.astype(np.float32)
        frames.append(Frame(
            image=render(state, domain),
            proprio=proprio(state, domain),
            action=action,
            stage=stage,
            description=describe_stage(stage, task),
        ))
        state = step(state, action, domain)
        history.append(state)

    ok, _ = success(history, task.suite)
    trajectory = Trajectory(
        frames=tuple(frames),
        task_id=task.task_id,
        task_instruction=task.instruction,
        domain=domain.name,
        suite=task.suite,
        seed=seed,
        success=ok,
    )
    return trajectory, history


def _check_suite(task: TaskSpec, suite: Suite) -> None:
    if task.suite != suite:
        raise ValueError(f"task {task.task_id} belongs to {task.suite.value}, not {suite.value}")


def stack_policy(task: TaskSpec, domain: DomainConfig, seed: int = 0, noise: bool = False,
                 initial_state: Optional[WorldState] = None) -> Trajectory:
    _check_suite(task, Suite.STACK)
    return run_episode(task, domain, seed, noise=noise, initial_state=initial_state)[0]


def two_step_policy(task: TaskSpec, domain: DomainConfig, seed: int = 0, noise: bool = False,
                    initial_state: Optional[WorldState] = None) -> Trajectory:
    _check_suite(task, Suite.TWO_STEP)
    return run_episode(task, domain, seed, noise=noise, initial_state=initial_state)[0]


def wrap_policy(task: TaskSpec, domain: DomainConfig, direction: Optional[str] = None, seed: int = 0,
                noise: bool = False, initial_state: Optional[WorldState] = None) -> Trajectory:
    _check_suite(task, Suite.WRAP)
    if direction is not None:
        if direction not in (CW, CCW):
            raise ValueError(f"direction must be '{CW}' or '{CCW}', got '{direction}'")
        task = replace(task, direction=direction)
        if initial_state is not None:
            initial_state = replace(initial_state, wrap_direction=task.direction_sign)
    return run_episode(task, domain, seed, noise=noise, initial_state=initial_state)[0]


def collect(
    suite: Suite,
    domain: DomainConfig,
    n: int,
    seed: int,
    noise: bool = True,
    keep_failures: bool = False,
    tasks: Optional[Sequence[TaskSpec]] = None,
    randomize: bool = False,
    workers: int = 1,
) -> Tuple[List[Trajectory], DatasetManifest]:
    """Collect n scripted demonstrations, cycling through tasks by episode index"""
    if n < 1:
        raise ValueError(f"n must be at least 1, got {n}")
    tasks = list(tasks) if tasks else default_tasks(suite, domain.name)
    for task in tasks:
        _check_suite(task, suite)

    def attempt(index: int) -> Trajectory:
        episode = episode_seed(seed, index)
        episode_domain = domain
        if randomize:
            episode_domain = domain_randomize(domain, np.random.default_rng([episode, 2]))
        return run_episode(tasks[index % len(tasks)], episode_domain, episode, noise=noise)[0]

    kept: List[Trajectory] = []
    next_index = 0
    max_attempts = n if keep_failures else n * MAX_ATTEMPTS_FACTOR
    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        while len(kept) < n and next_index < max_attempts:
            batch = range(next_index, min(next_index + max(1, workers) * 4, max_attempts))
            next_index = batch.stop
            for trajectory in pool.map(attempt, batch):
                if len(kept) >= n:
                    break
                if trajectory.success or keep_failures:
                    kept.append(trajectory)
                else:
                    logger.debug(f"Dropping failed episode seed={trajectory.seed} task={trajectory.task_id}")

    if len(kept) < n:
        logger.warning(f"Only {len(kept)} of {n} episodes succeeded after {next_index} attempts")

    image_shape = (domain.image_size, domain.image_size, 3)
    suffix = '-dr' if randomize else ''
    manifest = DatasetManifest(
        dataset_id=f"{suite.value}-{domain.name.value}-s{seed}-n{len(kept)}{suffix}",
        domain=domain.name,
        suite=suite,
        task_ids=sorted({t.task_id for t in kept}),
        trajectory_count=len(kept),
        image_shape=image_shape,
        proprio_dim=domain.proprio_dim,
        control_hz=domain.control_hz,
        created_seed=seed,
    )
    logger.info(f"Collected {len(kept)} {suite.value} trajectories in {domain.name.value} (seed {seed})")
    return kept, manifest
