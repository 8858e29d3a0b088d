"""Grid-scenario evaluation of policies, scripted experts and a null policy."""
# Standard library imports
import json
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

# Third-party imports
import numpy as np

# Local application imports
from src.database.records import Domain, Suite
from src.models.policy import FilmPolicy
from src.scripted.policies import make_controller, suite_horizon
from src.services.embedding_service import EmbeddingService
from src.sim.domains import DomainConfig
from src.sim.render import render
from src.sim.tasks import TaskSpec
from src.sim.world import GRID_SIZE, EvalScenario, WorldState, proprio, reset, step, success
from src.training.bc import load_policy
from src.utils.file_helpers import read_json, write_json
from src.utils.run_actions import ActionType, log_action

logger = logging.getLogger(__name__)

EVAL_RESULT_FILE = 'eval_result.json'

Actor = Callable[[WorldState, np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class EvalProtocol:
    trials_per_seed: int = 10
    seeds: Tuple[int, ...] = (0, 1)
    horizon: Optional[int] = None

    def __post_init__(self):
        if not 1 <= self.trials_per_seed <= GRID_SIZE:
            raise ValueError(f"trials_per_seed must be in [1, {GRID_SIZE}], got {self.trials_per_seed}")
        if not self.seeds:
            raise ValueError("need at least one evaluation seed")
        if self.horizon is not None and self.horizon < 1:
            raise ValueError(f"horizon must be positive, got {self.horizon}")

    @property
    def total_trials(self) -> int:
        return self.trials_per_seed * len(self.seeds)

    def to_json(self) -> dict:
        return {'trials_per_seed': self.trials_per_seed, 'seeds': list(self.seeds), 'horizon': self.horizon}

    @classmethod
    def from_json(cls, data: dict) -> "EvalProtocol":
        return cls(trials_per_seed=int(data['trials_per_seed']), seeds=tuple(data['seeds']),
                   horizon=data.get('horizon'))


@dataclass(frozen=True)
class TrialRecord:
    seed: int
    init_index: int
    success: bool
    subtasks: int
    length: int
    # step at which the task first looked solved; success is judged at the horizon only
    first_success: Optional[int] = None

    def to_json(self) -> dict:
        return {'seed': self.seed, 'init_index': self.init_index, 'success': self.success,
                'subtasks': self.subtasks, 'length': self.length, 'first_success': self.first_success}


@dataclass
class EvalResult:
    task_id: str
    suite: Suite
    domain: Domain
    protocol: EvalProtocol
    trials: List[TrialRecord]
    agent: str = 'policy'
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def successes(self) -> int:
        return sum(t.success for t in self.trials)

    @property
    def success_rate(self) -> float:
        """Percentage of successful trials"""
        return 100.0 * self.successes / len(self.trials) if self.trials else 0.0

    @property
    def mean_subtasks(self) -> float:
        return float(np.mean([t.subtasks for t in self.trials])) if self.trials else 0.0

    def to_json(self) -> dict:
        return {
            'task_id': self.task_id,
            'suite': self.suite.value,
            'domain': self.domain.value,
            'protocol': self.protocol.to_json(),
            'agent': self.agent,
            'meta': self.meta,
            'success_rate': self.success_rate,
            'mean_subtasks': self.mean_subtasks,
            'trials': [t.to_json() for t in self.trials],
        }

    @classmethod
    def from_json(cls, data: dict) -> "EvalResult":
        return cls(
            task_id=data['task_id'],
            suite=Suite(data['suite']),
            domain=Domain(data['domain']),
            protocol=EvalProtocol.from_json(data['protocol']),
            trials=[TrialRecord(**t) for t in data['trials']],
            agent=data.get('agent', 'policy'),
            meta=dict(data.get('meta') or {}),
        )

    def save(self, out_dir: Union[str, Path]) -> Path:
        return write_json(Path(out_dir) / EVAL_RESULT_FILE, self.to_json())

    @classmethod
    def load(cls, path: Union[str, Path]) -> "EvalResult":
        path = Path(path)
        if path.is_dir():
            path = path / EVAL_RESULT_FILE
        return cls.from_json(read_json(path))


class Agent:
    """Produces a fresh actor per trial so trials can run concurrently"""
    name = 'agent'

    def start(self, task: TaskSpec, domain: DomainConfig, scenario: EvalScenario) -> Actor:
        raise NotImplementedError


class PolicyAgent(Agent):
    name = 'policy'

    def __init__(self, policy: FilmPolicy, task_embeddings: Dict[str, np.ndarray],
                 embedder: Optional[EmbeddingService] = None):
        self.policy = policy.eval()
        self.task_embeddings = task_embeddings
        self.embedder = embedder

    @classmethod
    def from_checkpoint(cls, path: Union[str, Path], embedder: Optional[EmbeddingService] = None) -> "PolicyAgent":
        policy, _, embeddings = load_policy(path)
        return cls(policy, embeddings, embedder)

    def task_embedding(self, task: TaskSpec, domain: DomainConfig) -> np.ndarray:
        key = f"{domain.name.value}/{task.task_id}"
        if key in self.task_embeddings:
            return self.task_embeddings[key]
        for name, vector in self.task_embeddings.items():
            if name.endswith(f"/{task.task_id}"):
                return vector
        if self.embedder is None:
            raise ValueError(f"policy was not trained on task {task.task_id} and no embedder is configured")
        return self.embedder.embed(task.instruction)

    def start(self, task: TaskSpec, domain: DomainConfig, scenario: EvalScenario) -> Actor:
        embedding = self.task_embedding(task, domain)
        return lambda state, image, obs: self.policy.act(image, obs, embedding)


class ScriptedAgent(Agent):
    """Noise-free scripted expert acting on the true simulator state"""
    name = 'scripted'

    def start(self, task: TaskSpec, domain: DomainConfig, scenario: EvalScenario) -> Actor:
        controller = make_controller(task, domain, rng=None, noise_sigma=0.0)
        return lambda state, image, obs: controller.act(state)[0]


class RandomAgent(Agent):
    """Uniform random actions, seeded per trial"""
    name = 'random'

    def __init__(self, seed: int = 0):
        self.seed = seed

    def start(self, task: TaskSpec, domain: DomainConfig, scenario: EvalScenario) -> Actor:
        rng = np.random.default_rng([self.seed, scenario.seed, scenario.init_index])
        return lambda state, image, obs: np.append(rng.uniform(-1.0, 1.0, 3), rng.uniform(-1.0, 0.0))


def run_trial(agent: Agent, task: TaskSpec, domain: DomainConfig, scenario: EvalScenario,
              horizon: int) -> TrialRecord:
    """Roll out one grid scenario for the full horizon and score the final state"""
    state = reset(task, domain, scenario)
    actor = agent.start(task, domain, scenario)
    history = [state]
    first_success = None
    for t in range(horizon):
        action = actor(state, render(state, domain), proprio(state, domain))
        state = step(state, action, domain)
        history.append(state)
        if first_success is None and success(history, task.suite)[0]:
            first_success = t + 1
    ok, subtasks = success(history, task.suite)
    return TrialRecord(scenario.seed, scenario.init_index, ok, subtasks, horizon, first_success)


def evaluate(
    agent: Agent,
    task: TaskSpec,
    domain: DomainConfig,
    protocol: EvalProtocol = EvalProtocol(),
    workers: int = 1,
    run_dir: Optional[Union[str, Path]] = None,
    meta: Optional[dict] = None,
) -> EvalResult:
    """Every grid scenario under every protocol seed; deterministic for a deterministic agent"""
    horizon = protocol.horizon or suite_horizon(task.suite, domain)
    if horizon < 1:
        raise ValueError(f"horizon misconfigured for {task.suite.value}/{domain.name.value}: {horizon}")
    scenarios = [EvalScenario(task.suite, domain.name, i, seed)
                 for seed in protocol.seeds for i in range(protocol.trials_per_seed)]

    with ThreadPoolExecutor(max_workers=max(1, workers)) as pool:
        trials = list(pool.map(lambda s: run_trial(agent, task, domain, s, horizon), scenarios))
    for trial in trials:
        log_action(ActionType.EVAL_TRIAL, run_dir, metadata=trial.to_json())

    result = EvalResult(task_id=task.task_id, suite=task.suite, domain=domain.name, protocol=protocol,
                        trials=trials, agent=agent.name, meta=dict(meta or {}))
    log_action(ActionType.EVAL_COMPLETED, run_dir, metadata={
        'task_id': task.task_id, 'success_rate': result.success_rate, 'trials': len(trials)})
    logger.info(f"{agent.name} on {task.task_id} ({domain.name.value}): "
                f"{result.successes}/{len(trials)} = {result.success_rate:.1f}%")
    return result


def summarize(results: Sequence[EvalResult]) -> Dict[str, float]:
    """Mean success rate and its standard error across repeated evaluations"""
    rates = np.array([r.success_rate for r in results], dtype=np.float64)
    if rates.size == 0:
        return {'mean': float('nan'), 'stderr': float('nan'), 'n': 0}
    stderr = float(rates.std(ddof=1) / np.sqrt(rates.size)) if rates.size > 1 else 0.0
    return {'mean': float(rates.mean()), 'stderr': stderr, 'n': int(rates.size)}
