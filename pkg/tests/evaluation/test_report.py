# Standard library imports
import json

# Third-party imports
import pandas as pd
import pytest

# Local application imports
from src.database.records import Domain, Suite
from src.evaluation.evaluate import EvalProtocol, EvalResult, TrialRecord
from src.evaluation.report import Cell, collect_runs, make_report, method_table


def write_run(run_dir, successes, meta, history=None):
    trials = [TrialRecord(0, i, i < successes, 0, 10) for i in range(10)]
    result = EvalResult('stack_can', Suite.STACK, Domain.TARGET, EvalProtocol(trials_per_seed=10, seeds=(0,)),
                        trials, meta=meta)
    result.save(run_dir)
    if history:
        with open(run_dir / 'eval_history.jsonl', 'w', encoding='utf-8') as f:
            for rate in history:
                f.write(json.dumps({'success_rate': rate}) + '\n')


def filled_cells(table: pd.DataFrame):
    budget_columns = [c for c in table.columns if c.isdigit()]
    return [(row['method'], column, row[column]) for _, row in table.iterrows()
            for column in budget_columns if row[column]]


def test_cell_text():
    assert Cell().text() == ''
    assert Cell([40.0]).text() == '40.0'
    assert Cell([40.0, 60.0]).text() == '50.0 ± 10.0'


def test_single_run_fills_one_cell(tmp_path):
    """One evaluated run yields exactly one filled cell, identical in markdown and CSV"""
    write_run(tmp_path / 'seed0' / 'lang_reg', 7, {'method': 'lang_reg', 'target_demos': 25, 'granularity': 'all'})

    report = make_report(tmp_path, formats=('md', 'csv'))

    cells = filled_cells(report.tables['methods'])
    assert cells == [('Language regression', '25', '70.0')]
    csv = pd.read_csv(tmp_path / 'report_methods.csv', dtype=str, keep_default_na=False)
    assert filled_cells(csv) == cells
    markdown = (tmp_path / 'report.md').read_text(encoding='utf-8')
    assert markdown.startswith('# Sim2sim transfer report')
    assert '70.0' in markdown
    assert (tmp_path / 'report_success.png').exists()


def test_seeds_average_with_standard_error(tmp_path):
    for seed, successes in enumerate((4, 6)):
        write_run(tmp_path / f'seed{seed}' / 'no_pretrain', successes, {'method': 'no_pretrain', 'target_demos': 50})

    table = method_table(collect_runs(tmp_path))

    assert filled_cells(table) == [('No pretrain (source + target)', '50', '50.0 ± 10.0')]


def test_granularity_runs_are_kept_out_of_method_table(tmp_path):
    write_run(tmp_path / 'a', 5, {'method': 'lang_reg', 'target_demos': 25, 'granularity': 'one'})
    write_run(tmp_path / 'b', 9, {'method': 'lang_reg', 'target_demos': 25, 'granularity': 'all'})

    report = make_report(tmp_path)

    assert filled_cells(report.tables['methods']) == [('Language regression', '25', '90.0')]
    granularity = report.tables['granularity'].set_index('granularity')
    assert granularity.loc['1 stage', '25'] == '50.0'
    assert granularity.loc['All stages', '25'] == '90.0'


def test_trailing_window_table(tmp_path):
    write_run(tmp_path / 'run', 10, {'method': 'stage', 'target_demos': 25}, history=[0.0, 50.0, 100.0, 100.0])

    report = make_report(tmp_path, window=3)

    assert filled_cells(report.tables['trailing']) == [('Stage classification', '25', '83.3')]


def test_unknown_method_lands_in_other_group(tmp_path):
    write_run(tmp_path / 'run', 3, {'method': 'scripted'})
    write_run(tmp_path / 'run2', 3, {'method': 'coral', 'target_demos': 25})

    table = method_table(collect_runs(tmp_path))

    other = table[table['group'] == 'Other']
    assert set(other['method']) == {'coral', 'scripted'}


def test_empty_runs_directory_still_reports(tmp_path):
    report = make_report(tmp_path, formats=('csv',))
    assert filled_cells(report.tables['methods']) == []
    assert (tmp_path / 'report_granularity.csv').exists()


def test_unknown_format(tmp_path):
    with pytest.raises(ValueError):
        make_report(tmp_path, formats=('html',))
