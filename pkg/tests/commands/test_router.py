# Standard library imports
import json
import pytest
from unittest.mock import Mock

# Local application imports
from src.commands.constants import CMD_COLLECT, CMD_EVAL
from src.commands.router import CommandRouter, UsageError


@pytest.fixture
def router():
    """Router with a collect-like command whose handler is a Mock"""
    router = CommandRouter()
    parser = router.add_command(CMD_COLLECT)
    parser.add_argument('--n', type=int, required=True)
    parser.add_argument('--seed', type=int, default=0)
    parser.add_argument('--suite', choices=['stack', 'wrap'], default='stack')
    parser.add_argument('--noise', action='store_true')
    handler = Mock(return_value=0)
    router.command_handler(CMD_COLLECT)(handler)
    router.handler = handler
    return router


def write_config(path, data):
    path.write_text(json.dumps(data), encoding='utf-8')
    return str(path)


def test_dispatch_calls_handler(router):
    assert router.dispatch([CMD_COLLECT, '--n', '4']) == 0
    args = router.handler.call_args.args[0]
    assert args.n == 4 and args.seed == 0


def test_config_overlay_fills_missing_flags(router, tmp_path):
    """Test that flags on the command line win over the config file"""
    config = write_config(tmp_path / 'c.json', {'n': 7, 'seed': 3, 'suite': 'wrap'})

    assert router.dispatch([CMD_COLLECT, '--config', config, '--seed=5']) == 0

    args = router.handler.call_args.args[0]
    assert args.n == 7
    assert args.seed == 5
    assert args.suite == 'wrap'


def test_run_config_file_replays_a_run(router, tmp_path):
    config = write_config(tmp_path / 'run_config.json',
                          {'command': CMD_COLLECT, 'flags': {'n': 2, 'seed': 9, 'noise': True}, 'seed': 9})

    assert router.dispatch([CMD_COLLECT, '--n', '1', '--config', config]) == 0

    args = router.handler.call_args.args[0]
    assert (args.n, args.seed, args.noise) == (1, 9, True)


def test_run_config_from_another_command(router, tmp_path, capsys):
    config = write_config(tmp_path / 'run_config.json', {'command': CMD_EVAL, 'flags': {}})
    assert router.dispatch([CMD_COLLECT, '--n', '1', '--config', config]) == 1
    assert CMD_EVAL in capsys.readouterr().err
    router.handler.assert_not_called()


@pytest.mark.parametrize("overlay", [{'bogus': 1}, {'suite': 'two_step'}])
def test_bad_config_values(router, tmp_path, overlay):
    config = write_config(tmp_path / 'c.json', overlay)
    assert router.dispatch([CMD_COLLECT, '--n', '1', '--config', config]) == 1
    router.handler.assert_not_called()


def test_string_config_values_are_converted(router, tmp_path):
    config = write_config(tmp_path / 'c.json', {'--seed': '11'})
    router.dispatch([CMD_COLLECT, '--n', '1', '--config', config])
    assert router.handler.call_args.args[0].seed == 11


def test_unreadable_config(router, tmp_path):
    assert router.dispatch([CMD_COLLECT, '--n', '1', '--config', str(tmp_path / 'missing.json')]) == 1


def test_unknown_flag_exits_one(router, capsys):
    assert router.dispatch([CMD_COLLECT, '--n', '1', '--frobnicate']) == 1
    assert 'unrecognized arguments' in capsys.readouterr().err


def test_missing_required_flag_exits_one(router):
    assert router.dispatch([CMD_COLLECT]) == 1


def test_help_exits_zero(router, capsys):
    assert router.dispatch(['--help']) == 0
    assert CMD_COLLECT in capsys.readouterr().out


def test_no_command_prints_help(router, capsys):
    assert router.dispatch([]) == 1
    assert 'usage' in capsys.readouterr().err


def test_handler_needs_a_parser():
    with pytest.raises(KeyError):
        CommandRouter().command_handler('nonexistent')(Mock())


def test_usage_error_is_a_value_error():
    assert issubclass(UsageError, ValueError)
