# Standard library imports
import argparse
import logging
from dataclasses import replace

# Local application imports
from src.commands.constants import CMD_COLLECT, CMD_LABEL
from src.commands.router import CommandRouter
from src.database.records import Domain, Suite
from src.language.hindsight import (
    hindsight_label,
    load_gripper_predictor,
    relabel,
    save_gripper_predictor,
    stage_agreement,
    train_gripper_predictor,
)
from src.middleware.errors import handle_command_errors, record_run_config
from src.scripted.collect import collect
from src.services.service_container import ServiceContainer
from src.sim.domains import get_domain
from src.sim.tasks import get_task
from src.utils.command_helpers import run_dir, split_paths
from src.utils.file_helpers import directory_size, format_file_size, write_json
from src.utils.run_actions import ActionType, log_action

logger = logging.getLogger(__name__)

PREDICTOR_FILE = 'predictor.ckpt'
LABEL_REPORT_FILE = 'label_report.json'


def register_data_handlers(router: CommandRouter, services: ServiceContainer):
    parser = router.add_command(CMD_COLLECT)
    parser.add_argument('--suite', required=True, choices=[s.value for s in Suite])
    parser.add_argument('--domain', required=True, choices=[d.value for d in Domain])
    parser.add_argument('--n', type=int, required=True, help="number of trajectories to keep")
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--out', required=True, help="dataset directory")
    parser.add_argument('--noise', action=argparse.BooleanOptionalAction, default=True,
                        help="Gaussian noise on the scripted xyz deltas")
    parser.add_argument('--keep-failures', action='store_true', help="keep unsuccessful episodes")
    parser.add_argument('--tasks', default=None, help="comma-separated task ids (default: the domain's tasks)")
    parser.add_argument('--domain-randomize', action='store_true',
                        help="fresh palette and lag per episode; marks the dataset id with -dr")
    parser.add_argument('--workers', type=int, default=1)
    parser.add_argument('--image-size', type=int, default=None, help="default 64, or the --domain-config value")
    parser.add_argument('--domain-config', default=None, metavar='FILE', help="JSON DomainConfig override")

    @router.command_handler(CMD_COLLECT)
    @handle_command_errors(CMD_COLLECT)
    @record_run_config(CMD_COLLECT)
    def collect_command(args: argparse.Namespace):
        """Handle the collect command"""
        domain = get_domain(Domain(args.domain), args.image_size, args.domain_config)
        tasks = [get_task(t) for t in split_paths([args.tasks])] if args.tasks else None
        out = run_dir(args)

        trajectories, manifest = collect(
            Suite(args.suite), domain, args.n, args.seed,
            noise=args.noise, keep_failures=args.keep_failures, tasks=tasks,
            randomize=args.domain_randomize, workers=args.workers,
        )
        log_action(ActionType.DATASET_COLLECTED, out, metadata={
            'dataset_id': manifest.dataset_id, 'trajectories': len(trajectories),
            'successes': sum(t.success for t in trajectories)})
        if len(trajectories) < args.n:
            raise RuntimeError(f"only {len(trajectories)} of {args.n} episodes could be collected")

        path = services.store.save(trajectories, manifest, out)
        log_action(ActionType.DATASET_SAVED, out, metadata={'path': str(path), 'bytes': directory_size(path)})
        print(f"{manifest.dataset_id}: {len(trajectories)} trajectories, "
              f"{format_file_size(directory_size(path))} at {path}")

    parser = router.add_command(CMD_LABEL)
    parser.add_argument('--data', required=True, help="dataset to relabel")
    parser.add_argument('--train', action='append', default=None,
                        help="dataset(s) with proprioception to fit the gripper predictor on (default: --data)")
    parser.add_argument('--predictor', default=None, metavar='CKPT', help="reuse a saved gripper predictor")
    parser.add_argument('--epochs', type=int, default=10)
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--domain-config', default=None, metavar='FILE', help="JSON DomainConfig override")
    parser.add_argument('--out', required=True, help="relabelled dataset directory")

    @router.command_handler(CMD_LABEL)
    @handle_command_errors(CMD_LABEL)
    @record_run_config(CMD_LABEL)
    def label_command(args: argparse.Namespace):
        """Handle the label command"""
        out = run_dir(args)
        if services.store.resolve(args.data).resolve() == out.resolve():
            raise ValueError("--out must differ from --data; labelling never rewrites its input")
        trajectories, manifest = services.store.load(args.data)
        domain = get_domain(manifest.domain, manifest.image_shape[0], args.domain_config)

        if args.predictor:
            predictor = load_gripper_predictor(services.store.resolve(args.predictor))
            report = None
        else:
            train_set = []
            for path in split_paths(args.train) or [args.data]:
                train_set += services.store.load(path)[0]
            predictor, report = train_gripper_predictor(train_set, epochs=args.epochs, seed=args.seed)
            save_gripper_predictor(out / PREDICTOR_FILE, predictor, report)
            log_action(ActionType.PREDICTOR_TRAINED, out, metadata=report.to_json())

        labelled, agreements = [], []
        for trajectory in trajectories:
            task = get_task(trajectory.task_id)
            stages = hindsight_label(trajectory.images, task, domain, predictor)
            agreements.append(stage_agreement(stages, trajectory.stages))
            labelled.append(relabel(trajectory, stages, task))

        relabelled = replace(manifest, dataset_id=f"{manifest.dataset_id}-hl")
        path = services.store.save(labelled, relabelled, out)
        summary = {
            'dataset_id': relabelled.dataset_id,
            'trajectories': len(labelled),
            'agreement': float(sum(agreements) / len(agreements)),
            'predictor': report.to_json() if report else str(args.predictor),
        }
        write_json(path / LABEL_REPORT_FILE, summary)
        log_action(ActionType.DATASET_LABELED, out, metadata=summary)
        print(f"{relabelled.dataset_id}: stage agreement with the scripted labels {summary['agreement']:.1%}")
