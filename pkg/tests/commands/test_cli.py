# Third-party imports
import pytest

# Local application imports
from src.database.dataset_store import DatasetStore
from src.evaluation.evaluate import EvalResult
from src.main import main
from src.utils.file_helpers import read_json
from src.utils.run_actions import ActionType, get_run_actions


@pytest.fixture
def target_data(tmp_path):
    path = tmp_path / 'target'
    assert main(['collect', '--suite', 'stack', '--domain', 'target', '--n', '4', '--seed', '0',
                 '--image-size', '32', '--out', str(path)]) == 0
    return path


@pytest.fixture
def source_data(tmp_path):
    path = tmp_path / 'source'
    # stack_can shares descriptions with the target task
    assert main(['collect', '--suite', 'stack', '--domain', 'source', '--n', '2', '--seed', '0',
                 '--tasks', 'stack_can,stack_milk', '--image-size', '32', '--out', str(path)]) == 0
    return path


def test_collect_writes_dataset_and_ledger(target_data):
    trajectories, manifest = DatasetStore().load(target_data)

    assert len(trajectories) == 4
    assert manifest.dataset_id == 'stack-target-s0-n4'
    assert read_json(target_data / 'run_config.json')['flags']['n'] == 4
    assert get_run_actions(target_data, ActionType.COMMAND_SUCCESS)


def test_dist_pretraining_on_one_domain_fails(source_data, capsys):
    """Test the validation exit code and message"""
    code = main(['pretrain', '--variant', 'dist', '--data', str(source_data), '--max-steps', '1'])

    assert code == 1
    assert "dist requires both domains" in capsys.readouterr().err


def test_pretrain_then_bc_then_eval_then_report(source_data, target_data, tmp_path):
    encoder = tmp_path / 'reg' / 'encoder.ckpt'
    policy = tmp_path / 'reg' / 'policy.ckpt'

    assert main(['pretrain', '--variant', 'reg', '--data', f"{source_data},{target_data}", '--max-steps', '2',
                 '--batch-size', '4', '--out', str(encoder)]) == 0
    assert encoder.exists()

    assert main(['bc', '--encoder', str(encoder), '--data', str(source_data), '--data', str(target_data),
                 '--target-demos', '2', '--max-steps', '2', '--batch-tasks', '2', '--batch-samples', '2',
                 '--eval-every', '2', '--eval-trials', '1', '--eval-seeds', '1', '--out', str(policy)]) == 0
    assert (tmp_path / 'reg' / 'eval_history.jsonl').exists()

    eval_dir = tmp_path / 'eval' / 'reg'
    assert main(['eval', '--policy', str(policy), '--suite', 'stack', '--domain', 'target',
                 '--trials', '1', '--seeds', '1', '--horizon', '3', '--out', str(eval_dir)]) == 0
    result = EvalResult.load(eval_dir)
    assert result.meta['method'] == 'lang_reg'
    assert result.meta['target_demos'] == 2
    assert result.meta['granularity'] == 'all'

    assert main(['report', '--runs', str(tmp_path / 'eval'), '--format', 'md,csv']) == 0
    assert (tmp_path / 'eval' / 'report.md').exists()
    assert (tmp_path / 'eval' / 'report_methods.csv').exists()


def test_bc_target_only_baseline(target_data, tmp_path):
    policy = tmp_path / 'scratch' / 'policy.ckpt'
    assert main(['bc', '--data', str(target_data), '--no-source', '--max-steps', '1',
                 '--batch-tasks', '1', '--batch-samples', '2', '--out', str(policy)]) == 0
    assert policy.exists()


def test_label_writes_relabelled_copy(target_data, tmp_path):
    out = tmp_path / 'labelled'
    assert main(['label', '--data', str(target_data), '--epochs', '1', '--out', str(out)]) == 0

    trajectories, manifest = DatasetStore().load(out)
    assert manifest.dataset_id == 'stack-target-s0-n4-hl'
    assert len(trajectories) == 4
    assert (out / 'predictor.ckpt').exists()
    assert 0.0 <= read_json(out / 'label_report.json')['agreement'] <= 1.0


def test_label_refuses_to_overwrite_input(target_data):
    assert main(['label', '--data', str(target_data), '--out', str(target_data)]) == 1


def test_scripted_eval(tmp_path):
    out = tmp_path / 'scripted'
    assert main(['eval', '--policy', 'scripted', '--suite', 'stack', '--domain', 'target',
                 '--trials', '2', '--seeds', '1', '--image-size', '32', '--out', str(out)]) == 0
    assert EvalResult.load(out).agent == 'scripted'


def test_missing_checkpoint_is_a_runtime_failure(tmp_path):
    assert main(['eval', '--policy', str(tmp_path / 'none.ckpt'), '--suite', 'stack', '--domain', 'target',
                 '--out', str(tmp_path / 'e')]) == 2


def test_analyze(source_data, target_data, tmp_path):
    out = tmp_path / 'analysis'
    assert main(['analyze', 'actions', '--src', str(source_data), '--tgt', str(target_data), '--out', str(out)]) == 0
    assert (out / 'analysis.json').exists()


def test_unknown_flag_and_help(capsys):
    assert main(['collect', '--bogus']) == 1
    assert main(['--help']) == 0
    assert 'reproduce-paper-desk' in capsys.readouterr().out


def test_reproduce_at_smoke_scale(tmp_path):
    """Test the whole pipeline end to end on a tiny budget"""
    out = tmp_path / 'desk'
    code = main(['reproduce-paper-desk', '--scale', 'smoke', '--seeds', '1', '--eval-seeds', '1', '--budget', '2',
                 '--methods', 'no_pretrain,lang_reg', '--granularities', 'all', '--out', str(out)])

    assert code == 0
    assert (out / 'report.md').exists()
    assert (out / 'analysis' / 'analysis.json').exists()
    assert EvalResult.load(out / 'seed0' / 'lang_reg').meta['method'] == 'lang_reg'
    assert EvalResult.load(out / 'seed0' / 'no_pretrain').meta['method'] == 'no_pretrain'


def test_reproduce_rejects_unknown_method(tmp_path):
    assert main(['reproduce-paper-desk', '--methods', 'magic', '--out', str(tmp_path / 'x')]) == 1
