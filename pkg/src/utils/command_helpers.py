# Standard library imports
import argparse
import json
import logging
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

# Local application imports
from src.database.dataset_store import DatasetStore
from src.database.records import DatasetManifest, Domain, Trajectory
from src.utils.file_helpers import resolve_path

logger = logging.getLogger(__name__)

RANDOMIZED_SUFFIX = '-dr'


def run_dir(args: argparse.Namespace) -> Optional[Path]:
    """Directory a command writes into: --out itself, or its parent when --out names a file"""
    out = getattr(args, 'out', None) or getattr(args, 'runs', None)
    if not out:
        return None
    path = resolve_path(out)
    return path.parent if path.suffix else path


def split_paths(values: Optional[Iterable[str]]) -> List[str]:
    """Flatten repeated and comma-separated path flags"""
    paths: List[str] = []
    for value in values or []:
        paths += [p.strip() for p in str(value).split(',') if p.strip()]
    return paths


def load_datasets(store: DatasetStore, paths: Sequence[str]) -> List[Tuple[List[Trajectory], DatasetManifest]]:
    if not paths:
        raise ValueError("at least one --data directory is required")
    loaded = []
    for path in paths:
        trajectories, manifest = store.load(path)
        logger.info(f"Loaded {manifest.dataset_id}: {len(trajectories)} trajectories")
        loaded.append((trajectories, manifest))
    return loaded


def is_randomized(manifest: DatasetManifest) -> bool:
    return manifest.dataset_id.endswith(RANDOMIZED_SUFFIX)


def select_bc_trajectories(
    datasets: Sequence[Tuple[List[Trajectory], DatasetManifest]],
    target_demos: Optional[int] = None,
    no_source: bool = False,
    domain_randomize: bool = False,
) -> List[Trajectory]:
    """Source demos plus the first target_demos target-domain demos, in dataset order"""
    selected: List[Trajectory] = []
    target_kept = 0
    for trajectories, manifest in datasets:
        if manifest.domain == Domain.SOURCE:
            if no_source:
                continue
            if domain_randomize and not is_randomized(manifest):
                raise ValueError(f"--domain-randomize needs source data collected with --domain-randomize; "
                                 f"{manifest.dataset_id} is not")
            selected += trajectories
            continue
        if target_demos is None:
            selected += trajectories
            continue
        take = trajectories[:max(0, target_demos - target_kept)]
        target_kept += len(take)
        selected += take
    if target_demos is not None and target_kept < target_demos:
        raise ValueError(f"asked for {target_demos} target demos, datasets hold only {target_kept}")
    if not selected:
        raise ValueError("no trajectories selected for training")
    return selected


def infer_method(encoder_header: Optional[dict], aux: str, no_source: bool, domain_randomize: bool) -> str:
    """Report row name for a bc run"""
    if encoder_header is not None:
        return {'reg': 'lang_reg', 'dist': 'lang_dist', 'stage': 'stage'}[encoder_header['variant']]
    if no_source:
        return 'no_pretrain_target'
    if aux == 'mmd':
        return 'mmd'
    if domain_randomize:
        return 'domain_rand'
    return 'no_pretrain'


def append_jsonl(path: Path, entry: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'a', encoding='utf-8') as f:
        f.write(json.dumps(entry, sort_keys=True) + '\n')
