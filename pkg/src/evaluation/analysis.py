"""Cross-domain action distributions grouped by whether scene descriptions match."""
# Standard library imports
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

# Third-party imports
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
from scipy.stats import wasserstein_distance

# Local application imports
from src.database.records import Trajectory
from src.utils.file_helpers import write_json
from src.utils.run_actions import ActionType, log_action

logger = logging.getLogger(__name__)

COMPONENTS = ('xy_magnitude', 'z', 'gripper')
SIMILAR = 'similar'
DIFFERENT = 'different'
BUCKETS = (SIMILAR, DIFFERENT)
ANALYSIS_FILE = 'analysis.json'


def action_components(actions: np.ndarray) -> Dict[str, np.ndarray]:
    actions = np.asarray(actions, dtype=np.float64).reshape(-1, 4)
    return {
        'xy_magnitude': np.linalg.norm(actions[:, :2], axis=1),
        'z': actions[:, 2],
        'gripper': actions[:, 3],
    }


def actions_by_description(trajectories: Sequence[Trajectory]) -> Dict[str, np.ndarray]:
    grouped: Dict[str, List[np.ndarray]] = {}
    for trajectory in trajectories:
        for frame in trajectory.frames:
            if frame.action is None or frame.description is None:
                continue
            grouped.setdefault(frame.description, []).append(np.asarray(frame.action, dtype=np.float64))
    return {text: np.stack(actions) for text, actions in grouped.items()}


@dataclass
class ActionAnalysis:
    divergence: Dict[str, Dict[str, float]]
    per_description: Dict[str, Dict[str, Dict[str, float]]]
    histograms: Dict[str, Dict[str, Dict[str, np.ndarray]]] = field(repr=False, default_factory=dict)
    plots: List[str] = field(default_factory=list)

    def similar_below_different(self) -> List[str]:
        """Components whose similar-language divergence is strictly below the different-language one"""
        return [c for c in COMPONENTS if self.divergence[SIMILAR][c] < self.divergence[DIFFERENT][c]]

    def to_json(self) -> dict:
        return {
            'divergence': self.divergence,
            'per_description': self.per_description,
            'similar_below_different': self.similar_below_different(),
            'plots': self.plots,
        }


def action_distribution_analysis(
    source: Sequence[Trajectory],
    target: Sequence[Trajectory],
    out_dir: Optional[Union[str, Path]] = None,
    bins: int = 20,
) -> ActionAnalysis:
    """1-D Wasserstein divergence per action component, same-description vs different-description pairs.

    For every description present in both datasets, source actions under it are
    compared with target actions under the same description (similar bucket) and
    with target actions under every other description (different bucket);
    bucket scores average over those descriptions.
    """
    src = actions_by_description(source)
    tgt = actions_by_description(target)
    if len(src) < 2 or len(tgt) < 2:
        raise ValueError(f"need at least 2 descriptions per dataset, got {len(src)} and {len(tgt)}")
    shared = sorted(set(src) & set(tgt))
    if not shared:
        raise ValueError("no description appears in both datasets")

    per_description: Dict[str, Dict[str, Dict[str, float]]] = {}
    pooled = {bucket: {'source': [], 'target': []} for bucket in BUCKETS}
    for text in shared:
        others = np.concatenate([actions for other, actions in tgt.items() if other != text])
        src_c = action_components(src[text])
        buckets = {SIMILAR: action_components(tgt[text]), DIFFERENT: action_components(others)}
        per_description[text] = {
            bucket: {c: float(wasserstein_distance(src_c[c], comps[c])) for c in COMPONENTS}
            for bucket, comps in buckets.items()
        }
        for bucket in BUCKETS:
            pooled[bucket]['source'].append(src[text])
        pooled[SIMILAR]['target'].append(tgt[text])
        pooled[DIFFERENT]['target'].append(others)

    divergence = {
        bucket: {c: float(np.mean([per_description[t][bucket][c] for t in shared])) for c in COMPONENTS}
        for bucket in BUCKETS
    }
    histograms = {
        bucket: {
            side: action_components(np.concatenate(pooled[bucket][side]))
            for side in ('source', 'target')
        }
        for bucket in BUCKETS
    }
    analysis = ActionAnalysis(divergence=divergence, per_description=per_description, histograms=histograms)

    if out_dir is not None:
        out_dir = Path(out_dir)
        analysis.plots = [str(p) for p in plot_action_histograms(analysis, out_dir, bins)]
        write_json(out_dir / ANALYSIS_FILE, analysis.to_json())
        log_action(ActionType.ANALYSIS_COMPLETED, out_dir, metadata={'divergence': divergence})
    logger.info(f"Action analysis over {len(shared)} shared descriptions: "
                f"similar {divergence[SIMILAR]}, different {divergence[DIFFERENT]}")
    return analysis


def plot_action_histograms(analysis: ActionAnalysis, out_dir: Path, bins: int = 20) -> List[Path]:
    """One figure per bucket, one panel per action component"""
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for bucket in BUCKETS:
        fig, axes = plt.subplots(1, len(COMPONENTS), figsize=(4 * len(COMPONENTS), 3))
        for ax, component in zip(axes, COMPONENTS):
            source = analysis.histograms[bucket]['source'][component]
            target = analysis.histograms[bucket]['target'][component]
            edges = np.histogram_bin_edges(np.concatenate([source, target]), bins=bins)
            ax.hist(source, bins=edges, density=True, alpha=0.5, label='source')
            ax.hist(target, bins=edges, density=True, alpha=0.5, label='target')
            ax.set_title(f"{component} (W1 = {analysis.divergence[bucket][component]:.3f})")
        axes[0].legend()
        fig.suptitle(f"{bucket} language")
        fig.tight_layout()
        path = out_dir / f"actions_{bucket}.png"
        fig.savefig(path)
        plt.close(fig)
        paths.append(path)
    return paths
