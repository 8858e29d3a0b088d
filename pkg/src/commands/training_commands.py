# Standard library imports
import argparse
import logging
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

# Local application imports
from src.commands.constants import CMD_BC, CMD_PRETRAIN
from src.commands.router import CommandRouter
from src.database.records import DatasetManifest, Domain, Trajectory
from src.evaluation.evaluate import EvalProtocol, PolicyAgent, evaluate
from src.evaluation.report import EVAL_HISTORY_FILE
from src.language.granularity import GranularityLevel
from src.middleware.errors import handle_command_errors, record_run_config
from src.models.policy import FilmPolicy
from src.services.service_container import ServiceContainer
from src.sim.domains import get_domain
from src.sim.tasks import TARGET_TASKS, TaskSpec, get_task
from src.training.bc import AUX_MMD, AUX_NONE, CROP_PADDING, DEFAULT_AUX_WEIGHT, BCConfig, BCResult, bc_train
from src.training.pretrain import (
    DEFAULT_BATCH_SIZE,
    DEFAULT_LR,
    PretrainConfig,
    PretrainVariant,
    load_encoder,
    pretrain,
)
from src.training.sampler import BatchSpec, build_task_pools
from src.utils.command_helpers import (
    append_jsonl,
    infer_method,
    load_datasets,
    run_dir,
    select_bc_trajectories,
    split_paths,
)

logger = logging.getLogger(__name__)

Dataset = Tuple[List[Trajectory], DatasetManifest]


def eval_history_hook(task: TaskSpec, image_size: int, protocol: EvalProtocol, pools, out_dir: Path,
                      embedder=None, workers: int = 1):
    """Evaluate the in-training policy and append the result to eval_history.jsonl"""
    domain = get_domain(Domain.TARGET, image_size)
    embeddings = {pool.key: pool.task_embedding for pool in pools}
    history_path = out_dir / EVAL_HISTORY_FILE

    def hook(policy: FilmPolicy, step: int) -> None:
        result = evaluate(PolicyAgent(policy, embeddings, embedder), task, domain, protocol, workers=workers)
        append_jsonl(history_path, {'step': step, 'success_rate': result.success_rate,
                                    'successes': result.successes, 'trials': len(result.trials)})
        logger.info(f"step {step}: in-training success {result.success_rate:.1f}%")
    return hook


def train_policy(
    services: ServiceContainer,
    datasets: Sequence[Dataset],
    config: BCConfig,
    out_path: Path,
    target_demos: Optional[int] = None,
    no_source: bool = False,
    domain_randomize: bool = False,
    prior: Sequence[Dataset] = (),
    eval_task: Optional[TaskSpec] = None,
    eval_protocol: Optional[EvalProtocol] = None,
) -> BCResult:
    """Select demos, fill in the method name and run behaviour cloning with optional in-training evaluation"""
    trajectories = select_bc_trajectories(datasets, target_demos, no_source, domain_randomize)
    for prior_trajectories, _ in prior:
        trajectories += prior_trajectories
    pools = build_task_pools(trajectories, services.embedder)

    encoder_header = load_encoder(config.encoder_checkpoint)[1] if config.encoder_checkpoint else None
    if config.method == 'bc':
        config.method = infer_method(encoder_header, config.aux, no_source, domain_randomize)

    hook = None
    if config.eval_every:
        if eval_task is None:
            target_suites = [m.suite for _, m in datasets if m.domain == Domain.TARGET]
            eval_task = get_task(TARGET_TASKS[(target_suites or [datasets[0][1].suite])[0]])
        hook = eval_history_hook(eval_task, int(pools[0].images.shape[1]), eval_protocol or EvalProtocol(),
                                 pools, out_path.parent, services.embedder)

    header_extra = {
        'target_demos': target_demos,
        'no_source': no_source,
        'domain_randomize': domain_randomize,
        'granularity': encoder_header['granularity'] if encoder_header else None,
        'pretrain_variant': encoder_header['variant'] if encoder_header else None,
        'datasets': [m.dataset_id for _, m in list(datasets) + list(prior)],
    }
    return bc_train(config, pools, run_dir=out_path.parent, out_path=out_path, eval_hook=hook,
                    header_extra=header_extra)


def register_training_handlers(router: CommandRouter, services: ServiceContainer):
    parser = router.add_command(CMD_PRETRAIN)
    parser.add_argument('--variant', required=True, choices=[v.value for v in PretrainVariant])
    parser.add_argument('--data', action='append', required=True,
                        help="dataset directories; repeat the flag or separate with commas")
    parser.add_argument('--granularity', default=GranularityLevel.ALL.value,
                        choices=[g.value for g in GranularityLevel])
    parser.add_argument('--epochs', type=int, default=1)
    parser.add_argument('--max-steps', type=int, default=None, help="overrides --epochs")
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--lr', type=float, default=DEFAULT_LR)
    parser.add_argument('--batch-size', type=int, default=DEFAULT_BATCH_SIZE)
    parser.add_argument('--out', default='encoder.ckpt', help="encoder checkpoint path")

    @router.command_handler(CMD_PRETRAIN)
    @handle_command_errors(CMD_PRETRAIN)
    @record_run_config(CMD_PRETRAIN)
    def pretrain_command(args: argparse.Namespace):
        """Handle the pretrain command"""
        datasets = load_datasets(services.store, split_paths(args.data))
        trajectories = [t for trajectories, _ in datasets for t in trajectories]
        config = PretrainConfig(
            variant=PretrainVariant(args.variant), lr=args.lr, epochs=args.epochs, max_steps=args.max_steps,
            seed=args.seed, granularity=GranularityLevel(args.granularity), batch_size=args.batch_size,
        )
        out_path = services.store.resolve(args.out)
        result = pretrain(config, trajectories, services.embedder, services.similarity,
                          run_dir=run_dir(args), out_path=out_path)
        print(f"{args.variant} encoder after {result.header['step']} steps, "
              f"final loss {result.header['final_loss']:.5f}: {out_path}")

    parser = router.add_command(CMD_BC)
    parser.add_argument('--encoder', default='none', metavar='CKPT|none',
                        help="pretrained encoder checkpoint, or none to train from scratch")
    parser.add_argument('--data', action='append', required=True,
                        help="source and target dataset directories; repeat or separate with commas")
    parser.add_argument('--prior-data', action='append', default=None,
                        help="extra action-labelled prior-task datasets, used in full")
    parser.add_argument('--target-demos', type=int, default=None,
                        help="keep only the first N target-domain demos of --data")
    parser.add_argument('--no-source', action='store_true', help="drop source-domain demos (target-only baseline)")
    parser.add_argument('--aux', default=AUX_NONE, choices=[AUX_NONE, AUX_MMD])
    parser.add_argument('--aux-weight', type=float, default=DEFAULT_AUX_WEIGHT)
    parser.add_argument('--domain-randomize', action='store_true',
                        help="source data must come from collect --domain-randomize")
    parser.add_argument('--method', default=None, help="report row name (inferred when omitted)")
    parser.add_argument('--eval-every', type=int, default=None,
                        help="evaluate every N steps and append to eval_history.jsonl")
    parser.add_argument('--eval-task', default=None, help="task for in-training evaluation")
    parser.add_argument('--eval-trials', type=int, default=10)
    parser.add_argument('--eval-seeds', type=int, default=1)
    parser.add_argument('--epochs', type=int, default=1)
    parser.add_argument('--max-steps', type=int, default=None, help="overrides --epochs")
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--lr', type=float, default=DEFAULT_LR)
    parser.add_argument('--batch-tasks', type=int, default=4)
    parser.add_argument('--batch-samples', type=int, default=57)
    parser.add_argument('--crop-padding', type=int, default=CROP_PADDING)
    parser.add_argument('--checkpoint-every', type=int, default=None)
    parser.add_argument('--out', default='policy.ckpt', help="policy checkpoint path")

    @router.command_handler(CMD_BC)
    @handle_command_errors(CMD_BC)
    @record_run_config(CMD_BC)
    def bc_command(args: argparse.Namespace):
        """Handle the bc command"""
        encoder = None if args.encoder.lower() == 'none' else str(services.store.resolve(args.encoder))
        config = BCConfig(
            encoder_checkpoint=encoder, aux=args.aux, aux_weight=args.aux_weight, crop_padding=args.crop_padding,
            epochs=args.epochs, max_steps=args.max_steps, seed=args.seed, lr=args.lr,
            batch_spec=BatchSpec(args.batch_tasks, args.batch_samples),
            eval_every=args.eval_every, checkpoint_every=args.checkpoint_every, method=args.method or 'bc',
        )
        result = train_policy(
            services,
            load_datasets(services.store, split_paths(args.data)),
            config,
            services.store.resolve(args.out),
            target_demos=args.target_demos,
            no_source=args.no_source,
            domain_randomize=args.domain_randomize,
            prior=load_datasets(services.store, split_paths(args.prior_data)) if args.prior_data else (),
            eval_task=get_task(args.eval_task) if args.eval_task else None,
            eval_protocol=EvalProtocol(args.eval_trials, tuple(range(args.eval_seeds))),
        )
        print(f"{result.header['method']} policy after {result.header['step']} steps, "
              f"final loss {result.history[-1]['loss']:.4f}: {services.store.resolve(args.out)}")
