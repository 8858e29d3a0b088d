# Standard library imports
import argparse
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Tuple

# Local application imports
from src.commands.constants import CMD_REPRODUCE
from src.commands.router import CommandRouter
from src.commands.training_commands import train_policy
from src.database.records import DatasetManifest, Domain, Suite, Trajectory
from src.evaluation.analysis import action_distribution_analysis
from src.evaluation.evaluate import EvalProtocol, PolicyAgent, evaluate
from src.evaluation.report import make_report
from src.language.granularity import GranularityLevel
from src.middleware.errors import handle_command_errors, record_run_config
from src.models.encoder import EncoderSpec
from src.models.policy import PolicyHeadSpec
from src.scripted.collect import collect
from src.services.service_container import ServiceContainer
from src.sim.domains import get_domain
from src.sim.tasks import SOURCE_TASKS, TARGET_TASKS, get_task
from src.training.bc import AUX_MMD, AUX_NONE, BCConfig
from src.training.pretrain import PretrainConfig, PretrainVariant, pretrain
from src.training.sampler import BatchSpec
from src.utils.command_helpers import run_dir
from src.utils.run_actions import ActionType, log_action

logger = logging.getLogger(__name__)

Dataset = Tuple[List[Trajectory], DatasetManifest]

PRETRAINED_METHODS = {
    'lang_reg': PretrainVariant.REG,
    'lang_dist': PretrainVariant.DIST,
    'stage': PretrainVariant.STAGE,
}
BASELINE_METHODS = ('no_pretrain_target', 'no_pretrain', 'mmd', 'domain_rand')
ALL_METHODS = BASELINE_METHODS + tuple(PRETRAINED_METHODS)
DEFAULT_METHODS = 'no_pretrain,lang_reg,stage'
DEFAULT_GRANULARITIES = 'all,one_per_domain'


@dataclass(frozen=True)
class ExperimentScale:
    image_size: int
    source_per_task: int
    pretrain_steps: int
    bc_steps: int
    batch_spec: BatchSpec
    pretrain_batch: int
    trials_per_seed: int
    encoder_kernels: Tuple[int, ...]
    head_hidden: Tuple[int, ...]
    max_target_demos: int


SCALES: Dict[str, ExperimentScale] = {
    'desk': ExperimentScale(
        image_size=64, source_per_task=100, pretrain_steps=2000, bc_steps=3000,
        batch_spec=BatchSpec(), pretrain_batch=228, trials_per_seed=10,
        encoder_kernels=(16, 32, 64, 128), head_hidden=(1024, 512, 256), max_target_demos=100,
    ),
    # plumbing check in seconds; numbers are meaningless
    'smoke': ExperimentScale(
        image_size=32, source_per_task=2, pretrain_steps=3, bc_steps=3,
        batch_spec=BatchSpec(2, 4), pretrain_batch=8, trials_per_seed=1,
        encoder_kernels=(8, 8, 8, 8), head_hidden=(32,), max_target_demos=3,
    ),
}


def run_name(method: str, granularity: GranularityLevel) -> str:
    if method in PRETRAINED_METHODS and granularity != GranularityLevel.ALL:
        return f"{method}-{granularity.value}"
    return method


def reproduce_desk(
    services: ServiceContainer,
    out: Path,
    budget: int,
    seeds: Tuple[int, ...],
    eval_seeds: int,
    scale: ExperimentScale,
    methods: Tuple[str, ...],
    granularities: Tuple[GranularityLevel, ...],
    workers: int = 1,
) -> Path:
    """Collect, pretrain, clone, evaluate and report the stack-suite transfer experiment"""
    suite = Suite.STACK
    source_domain = get_domain(Domain.SOURCE, scale.image_size)
    target_domain = get_domain(Domain.TARGET, scale.image_size)
    target_task = get_task(TARGET_TASKS[suite])
    target_demos = min(budget, scale.max_target_demos)
    encoder_spec = EncoderSpec(input_shape=(scale.image_size, scale.image_size, 3), kernels=scale.encoder_kernels,
                               min_groups=min(8, min(scale.encoder_kernels)))
    protocol = EvalProtocol(trials_per_seed=scale.trials_per_seed, seeds=tuple(range(eval_seeds)))

    for seed in seeds:
        seed_dir = out / f"seed{seed}"
        source_n = scale.source_per_task * len(SOURCE_TASKS[suite])
        source = collect(suite, source_domain, source_n, seed, workers=workers)
        target = collect(suite, target_domain, target_demos, seed + 1000, workers=workers)
        services.store.save(*source, seed_dir / 'data' / 'source')
        services.store.save(*target, seed_dir / 'data' / 'target')
        randomized = None
        if 'domain_rand' in methods:
            randomized = collect(suite, source_domain, source_n, seed, randomize=True, workers=workers)
            services.store.save(*randomized, seed_dir / 'data' / 'source-dr')
        log_action(ActionType.DATASET_COLLECTED, out, metadata={
            'seed': seed, 'source': source[1].dataset_id, 'target': target[1].dataset_id})

        if seed == seeds[0]:
            action_distribution_analysis(source[0], target[0], out_dir=out / 'analysis')

        for method in methods:
            levels = granularities if method in PRETRAINED_METHODS else (GranularityLevel.ALL,)
            for level in levels:
                name = run_name(method, level)
                method_dir = seed_dir / name
                encoder_path = None
                if method in PRETRAINED_METHODS:
                    encoder_path = method_dir / 'encoder.ckpt'
                    config = PretrainConfig(variant=PRETRAINED_METHODS[method], max_steps=scale.pretrain_steps,
                                            seed=seed, granularity=level, batch_size=scale.pretrain_batch,
                                            encoder_spec=encoder_spec)
                    pretrain(config, source[0] + target[0], services.embedder, services.similarity,
                             run_dir=method_dir, out_path=encoder_path)

                datasets: List[Dataset] = [randomized if method == 'domain_rand' else source, target]
                bc_config = BCConfig(
                    encoder_checkpoint=str(encoder_path) if encoder_path else None,
                    aux=AUX_MMD if method == 'mmd' else AUX_NONE,
                    max_steps=scale.bc_steps, seed=seed, batch_spec=scale.batch_spec,
                    head_spec=PolicyHeadSpec(hidden=scale.head_hidden),
                    encoder_spec=None if encoder_path else encoder_spec,
                    method=method,
                )
                policy_path = method_dir / 'policy.ckpt'
                result = train_policy(services, datasets, bc_config, policy_path,
                                      target_demos=target_demos, no_source=method == 'no_pretrain_target',
                                      domain_randomize=method == 'domain_rand')
                meta = {key: result.header.get(key) for key in ('method', 'target_demos', 'granularity', 'seed')}
                meta['policy'] = str(policy_path)
                evaluation = evaluate(PolicyAgent.from_checkpoint(policy_path, services.embedder), target_task,
                                      target_domain, protocol, workers=workers, run_dir=method_dir, meta=meta)
                evaluation.save(method_dir)
                print(f"seed {seed} {name}: {evaluation.success_rate:.1f}% on {target_task.task_id}")

    report = make_report(out, out, ('md', 'csv'))
    print(report.markdown)
    return out / 'report.md'


def register_pipeline_handlers(router: CommandRouter, services: ServiceContainer):
    parser = router.add_command(CMD_REPRODUCE)
    parser.add_argument('--budget', type=int, default=25, help="target-domain target-task demos")
    parser.add_argument('--seed', type=int, default=0, help="first training seed")
    parser.add_argument('--seeds', type=int, default=2, help="number of training seeds")
    parser.add_argument('--eval-seeds', type=int, default=2, help="evaluation seeds per policy")
    parser.add_argument('--scale', default='desk', choices=sorted(SCALES))
    parser.add_argument('--methods', default=DEFAULT_METHODS, help=f"comma-separated subset of {','.join(ALL_METHODS)}")
    parser.add_argument('--granularities', default=DEFAULT_GRANULARITIES,
                        help="granularity levels for the pretrained methods")
    parser.add_argument('--workers', type=int, default=1)
    parser.add_argument('--out', default='desk', help="experiment directory")

    @router.command_handler(CMD_REPRODUCE)
    @handle_command_errors(CMD_REPRODUCE)
    @record_run_config(CMD_REPRODUCE)
    def reproduce_command(args: argparse.Namespace):
        """Handle the reproduce-paper-desk command"""
        methods = tuple(m.strip() for m in args.methods.split(',') if m.strip())
        unknown = [m for m in methods if m not in ALL_METHODS]
        if unknown or not methods:
            raise ValueError(f"unknown methods {unknown}; choose from {', '.join(ALL_METHODS)}")
        granularities = tuple(GranularityLevel(g.strip()) for g in args.granularities.split(',') if g.strip())
        if args.budget < 1 or args.seeds < 1:
            raise ValueError("--budget and --seeds must be positive")
        seeds = tuple(range(args.seed, args.seed + args.seeds))
        path = reproduce_desk(services, run_dir(args), args.budget, seeds, args.eval_seeds, SCALES[args.scale],
                              methods, granularities or (GranularityLevel.ALL,), workers=args.workers)
        print(f"report: {path}")
