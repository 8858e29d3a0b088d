# Standard library imports
import argparse
import logging

# Local application imports
from src.commands.constants import CMD_ANALYZE, CMD_EVAL, CMD_REPORT
from src.commands.router import CommandRouter
from src.database.records import Domain, Suite
from src.evaluation.analysis import action_distribution_analysis
from src.evaluation.evaluate import EvalProtocol, PolicyAgent, RandomAgent, ScriptedAgent, evaluate
from src.evaluation.report import TRAILING_WINDOW, make_report
from src.middleware.errors import handle_command_errors, record_run_config
from src.models.checkpoint import load_checkpoint
from src.services.service_container import ServiceContainer
from src.sim.domains import get_domain
from src.sim.tasks import TARGET_TASKS, default_tasks, get_task
from src.utils.command_helpers import run_dir, split_paths

logger = logging.getLogger(__name__)

POLICY_SCRIPTED = 'scripted'
POLICY_RANDOM = 'random'
REPORT_FORMATS = ('md', 'csv')
POLICY_META_KEYS = ('method', 'target_demos', 'granularity', 'pretrain_variant', 'seed', 'aux', 'step')


def register_evaluation_handlers(router: CommandRouter, services: ServiceContainer):
    parser = router.add_command(CMD_EVAL)
    parser.add_argument('--policy', required=True, metavar='CKPT|scripted|random')
    parser.add_argument('--suite', required=True, choices=[s.value for s in Suite])
    parser.add_argument('--domain', required=True, choices=[d.value for d in Domain])
    parser.add_argument('--task', default=None, help="task id (default: the suite's target task in the target "
                                                     "domain, the first source task in the source domain)")
    parser.add_argument('--trials', type=int, default=10, help="grid scenarios per seed")
    parser.add_argument('--seeds', type=int, default=2, help="number of evaluation seeds (0..N-1)")
    parser.add_argument('--horizon', type=int, default=None, help="override the suite horizon")
    parser.add_argument('--workers', type=int, default=1)
    parser.add_argument('--image-size', type=int, default=None,
                        help="for scripted and random agents (default 64, or the --domain-config value)")
    parser.add_argument('--domain-config', default=None, metavar='FILE', help="JSON DomainConfig override")
    parser.add_argument('--out', required=True, help="run directory for eval_result.json")

    @router.command_handler(CMD_EVAL)
    @handle_command_errors(CMD_EVAL)
    @record_run_config(CMD_EVAL)
    def eval_command(args: argparse.Namespace):
        """Handle the eval command"""
        suite, domain_name = Suite(args.suite), Domain(args.domain)
        if args.task:
            task = get_task(args.task)
            if task.suite != suite:
                raise ValueError(f"task {task.task_id} belongs to {task.suite.value}, not {suite.value}")
        elif domain_name == Domain.TARGET:
            task = get_task(TARGET_TASKS[suite])
        else:
            task = default_tasks(suite, domain_name)[0]

        image_size = args.image_size
        meta = {}
        if args.policy == POLICY_SCRIPTED:
            agent = ScriptedAgent()
            meta['method'] = POLICY_SCRIPTED
        elif args.policy == POLICY_RANDOM:
            agent = RandomAgent(seed=0)
            meta['method'] = POLICY_RANDOM
        else:
            path = services.store.resolve(args.policy)
            header, _ = load_checkpoint(path)
            image_size = int(header['encoder_spec']['input_shape'][0])
            agent = PolicyAgent.from_checkpoint(path, services.embedder)
            meta = {key: header.get(key) for key in POLICY_META_KEYS}
            meta['policy'] = str(path)

        domain = get_domain(domain_name, image_size, args.domain_config)
        protocol = EvalProtocol(trials_per_seed=args.trials, seeds=tuple(range(args.seeds)), horizon=args.horizon)
        out = run_dir(args)
        result = evaluate(agent, task, domain, protocol, workers=args.workers, run_dir=out, meta=meta)
        path = result.save(out)
        print(f"{task.task_id} ({domain_name.value}): {result.successes}/{len(result.trials)} successes "
              f"= {result.success_rate:.1f}%, mean subtasks {result.mean_subtasks:.2f}; {path}")

    parser = router.add_command(CMD_ANALYZE)
    parser.add_argument('kind', choices=['actions'], help="analysis to run")
    parser.add_argument('--src', required=True, help="source-domain dataset directory")
    parser.add_argument('--tgt', required=True, help="target-domain dataset directory")
    parser.add_argument('--bins', type=int, default=20)
    parser.add_argument('--out', required=True)

    @router.command_handler(CMD_ANALYZE)
    @handle_command_errors(CMD_ANALYZE)
    @record_run_config(CMD_ANALYZE)
    def analyze_command(args: argparse.Namespace):
        """Handle the analyze command"""
        source, _ = services.store.load(args.src)
        target, _ = services.store.load(args.tgt)
        analysis = action_distribution_analysis(source, target, out_dir=run_dir(args), bins=args.bins)
        for bucket, scores in analysis.divergence.items():
            print(f"{bucket:>9}: " + ", ".join(f"{c} {v:.4f}" for c, v in scores.items()))
        print(f"similar < different for: {', '.join(analysis.similar_below_different()) or 'none'}")

    parser = router.add_command(CMD_REPORT)
    parser.add_argument('--runs', required=True, help="directory searched recursively for eval_result.json")
    parser.add_argument('--format', default='md', help="md, csv or md,csv")
    parser.add_argument('--window', type=int, default=TRAILING_WINDOW,
                        help="in-training evaluations averaged by the trailing-window table")
    parser.add_argument('--out', default=None, help="output directory (default: --runs)")

    @router.command_handler(CMD_REPORT)
    @handle_command_errors(CMD_REPORT)
    @record_run_config(CMD_REPORT)
    def report_command(args: argparse.Namespace):
        """Handle the report command"""
        formats = split_paths([args.format])
        unknown = [f for f in formats if f not in REPORT_FORMATS]
        if unknown or not formats:
            raise ValueError(f"--format must be md, csv or both, got '{args.format}'")
        runs = services.store.resolve(args.runs)
        out = services.store.resolve(args.out) if args.out else runs
        report = make_report(runs, out, formats, window=args.window)
        if 'md' in formats:
            print(report.markdown)
        for path in report.files:
            logger.info(f"Wrote {path}")
