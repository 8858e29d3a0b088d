"""Success-rate tables (markdown and CSV from the same cells) and plots over a directory of runs."""
# Standard library imports
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

# Third-party imports
import matplotlib
matplotlib.use('Agg')
import matplotlib.pyplot as plt
import numpy as np
import pandas as pd

# Local application imports
from src.evaluation.analysis import ANALYSIS_FILE, COMPONENTS
from src.evaluation.evaluate import EVAL_RESULT_FILE, EvalResult
from src.utils.file_helpers import read_json
from src.utils.run_actions import ActionType, log_action

logger = logging.getLogger(__name__)

EVAL_HISTORY_FILE = 'eval_history.jsonl'
BUDGETS = (25, 50, 100)
TRAILING_WINDOW = 3
GRANULARITY_METHOD = 'lang_reg'
GRANULARITY_ROWS = (
    ('all', 'All stages'),
    ('half', 'Half of the stages'),
    ('two', '2 stages'),
    ('one', '1 stage'),
    ('one_per_domain', '1 stage per domain'),
)

# (group label, [(method key, row label), ...]) in table order
METHOD_GROUPS: Tuple[Tuple[str, Tuple[Tuple[str, str], ...]], ...] = (
    ('Non-pretrained', (
        ('no_pretrain_target', 'No pretrain (target only)'),
        ('no_pretrain', 'No pretrain (source + target)'),
    )),
    ('Sim2real baselines', (
        ('mmd', 'MMD'),
        ('domain_rand', 'Domain randomization'),
    )),
    ('Ours / ablation', (
        ('lang_reg', 'Language regression'),
        ('lang_dist', 'Language distance'),
        ('stage', 'Stage classification'),
    )),
)


@dataclass
class RunRecord:
    path: Path
    result: EvalResult
    history: List[dict] = field(default_factory=list)

    @property
    def method(self) -> str:
        return str(self.result.meta.get('method', self.result.agent))

    @property
    def budget(self) -> Optional[int]:
        value = self.result.meta.get('target_demos')
        return None if value is None else int(value)

    @property
    def granularity(self) -> Optional[str]:
        value = self.result.meta.get('granularity')
        return None if value is None else str(value)

    def trailing_rate(self, window: int = TRAILING_WINDOW) -> Optional[float]:
        rates = [entry['success_rate'] for entry in self.history[-window:]]
        return float(np.mean(rates)) if rates else None


@dataclass
class Cell:
    values: List[float] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.values)

    @property
    def mean(self) -> float:
        return float(np.mean(self.values)) if self.values else float('nan')

    @property
    def stderr(self) -> float:
        if len(self.values) < 2:
            return 0.0
        return float(np.std(self.values, ddof=1) / np.sqrt(len(self.values)))

    def text(self) -> str:
        """Blank when no run supplies the cell"""
        if not self.values:
            return ''
        if self.n > 1:
            return f"{self.mean:.1f} ± {self.stderr:.1f}"
        return f"{self.mean:.1f}"


@dataclass
class Report:
    tables: Dict[str, pd.DataFrame]
    markdown: str
    files: List[Path] = field(default_factory=list)


def read_eval_history(path: Path) -> List[dict]:
    if not path.exists():
        return []
    with open(path, encoding='utf-8') as f:
        return [json.loads(line) for line in f if line.strip()]


def collect_runs(runs_dir: Union[str, Path]) -> List[RunRecord]:
    """Every eval_result.json below runs_dir, with the training run's eval history when present"""
    records = []
    for path in sorted(Path(runs_dir).rglob(EVAL_RESULT_FILE)):
        result = EvalResult.load(path)
        history = read_eval_history(path.parent / EVAL_HISTORY_FILE)
        if not history and result.meta.get('policy'):
            history = read_eval_history(Path(str(result.meta['policy'])).parent / EVAL_HISTORY_FILE)
        records.append(RunRecord(path=path.parent, result=result, history=history))
    logger.info(f"Found {len(records)} evaluated runs below {runs_dir}")
    return records


def _method_rows(records: Sequence[RunRecord]) -> List[Tuple[str, str, str]]:
    rows = [(group, key, label) for group, methods in METHOD_GROUPS for key, label in methods]
    known = {key for _, key, _ in rows}
    extra = sorted({r.method for r in records} - known)
    rows += [('Other', key, key) for key in extra]
    return rows


def _budgets(records: Sequence[RunRecord]) -> List[int]:
    seen = {r.budget for r in records if r.budget is not None}
    return sorted(set(BUDGETS) | seen)


def _frame(rows: List[Tuple[str, str]], budgets: Sequence[int], cells: Dict[Tuple[str, int], Cell],
           first_columns: Sequence[str]) -> pd.DataFrame:
    data = []
    for labels, key in rows:
        data.append(list(labels) + [cells.get((key, b), Cell()).text() for b in budgets])
    return pd.DataFrame(data, columns=list(first_columns) + [str(b) for b in budgets])


def method_table(records: Sequence[RunRecord], trailing: bool = False,
                 window: int = TRAILING_WINDOW) -> pd.DataFrame:
    """Rows = methods grouped as non-pretrained / baselines / ours, columns = target-demo budgets"""
    budgets = _budgets(records)
    cells: Dict[Tuple[str, int], Cell] = {}
    for record in records:
        if record.budget is None:
            continue
        if record.granularity not in (None, 'all') and record.method == GRANULARITY_METHOD:
            continue
        value = record.trailing_rate(window) if trailing else record.result.success_rate
        if value is None:
            continue
        cells.setdefault((record.method, record.budget), Cell()).values.append(value)
    rows = [((group, label), key) for group, key, label in _method_rows(records)]
    return _frame(rows, budgets, cells, ('group', 'method'))


def granularity_table(records: Sequence[RunRecord], method: str = GRANULARITY_METHOD) -> pd.DataFrame:
    budgets = _budgets(records)
    cells: Dict[Tuple[str, int], Cell] = {}
    for record in records:
        if record.method != method or record.budget is None:
            continue
        level = record.granularity or 'all'
        cells.setdefault((level, record.budget), Cell()).values.append(record.result.success_rate)
    rows = [((label,), key) for key, label in GRANULARITY_ROWS]
    return _frame(rows, budgets, cells, ('granularity',))


def analysis_table(runs_dir: Path) -> Optional[pd.DataFrame]:
    rows = []
    for path in sorted(runs_dir.rglob(ANALYSIS_FILE)):
        divergence = read_json(path)['divergence']
        for bucket, scores in divergence.items():
            rows.append([str(path.parent.relative_to(runs_dir)), bucket] + [f"{scores[c]:.4f}" for c in COMPONENTS])
    if not rows:
        return None
    return pd.DataFrame(rows, columns=['run', 'language'] + list(COMPONENTS))


def plot_success(records: Sequence[RunRecord], path: Path) -> Optional[Path]:
    """Success rate against target-demo budget, one line per method"""
    by_method: Dict[str, Dict[int, List[float]]] = {}
    for record in records:
        if record.budget is None:
            continue
        by_method.setdefault(record.method, {}).setdefault(record.budget, []).append(record.result.success_rate)
    if not by_method:
        return None
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, budgets in sorted(by_method.items()):
        xs = sorted(budgets)
        ax.plot(xs, [np.mean(budgets[x]) for x in xs], marker='o', label=method)
    ax.set_xlabel('target demonstrations')
    ax.set_ylabel('success rate (%)')
    ax.legend(fontsize='small')
    fig.tight_layout()
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_markdown(tables: Dict[str, pd.DataFrame], titles: Dict[str, str]) -> str:
    sections = []
    for name, table in tables.items():
        sections.append(f"## {titles.get(name, name)}\n\n{table.to_markdown(index=False)}\n")
    return "\n".join(sections)


def make_report(
    runs_dir: Union[str, Path],
    out_dir: Optional[Union[str, Path]] = None,
    formats: Sequence[str] = ('md',),
    window: int = TRAILING_WINDOW,
) -> Report:
    """Tables and plots for every evaluated run below runs_dir; missing runs stay blank"""
    runs_dir = Path(runs_dir)
    out_dir = Path(out_dir) if out_dir is not None else runs_dir
    records = collect_runs(runs_dir)

    tables = {
        'methods': method_table(records),
        'granularity': granularity_table(records),
        'trailing': method_table(records, trailing=True, window=window),
    }
    titles = {
        'methods': 'Target-task success rate (%), final checkpoint',
        'granularity': f'Target-task success rate (%) by language granularity ({GRANULARITY_METHOD})',
        'trailing': f'Target-task success rate (%), mean of the last {window} evaluations during training',
        'analysis': 'Cross-domain action divergence (1-D Wasserstein)',
    }
    analysis = analysis_table(runs_dir)
    if analysis is not None:
        tables['analysis'] = analysis

    out_dir.mkdir(parents=True, exist_ok=True)
    files: List[Path] = []
    markdown = render_markdown(tables, titles)
    for fmt in formats:
        if fmt == 'md':
            path = out_dir / 'report.md'
            path.write_text(f"# Sim2sim transfer report\n\n{markdown}", encoding='utf-8')
            files.append(path)
        elif fmt == 'csv':
            for name, table in tables.items():
                path = out_dir / f"report_{name}.csv"
                table.to_csv(path, index=False)
                files.append(path)
        else:
            raise ValueError(f"unknown report format '{fmt}'")
    plot = plot_success(records, out_dir / 'report_success.png')
    if plot is not None:
        files.append(plot)

    log_action(ActionType.REPORT_WRITTEN, out_dir, metadata={'runs': len(records), 'files': [str(f) for f in files]})
    return Report(tables=tables, markdown=markdown, files=files)
