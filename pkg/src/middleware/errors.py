# Standard library imports
import argparse
import logging
import sys
from functools import wraps
from typing import Callable, Optional

# Local application imports
from src.utils.command_helpers import run_dir
from src.utils.file_helpers import write_json
from src.utils.run_actions import ActionType, log_action

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2
RUN_CONFIG_FILE = 'run_config.json'


def handle_command_errors(command: str):
    """
    Decorator mapping a handler's outcome onto the process exit code.

    ValueError and its subclasses (validation, usage, dataset format) exit 1,
    anything else exits 2. Failures are logged and written to the run ledger.
    """
    def decorator(func: Callable[[argparse.Namespace], Optional[int]]):
        @wraps(func)
        def wrapper(args: argparse.Namespace) -> int:
            ledger = run_dir(args)
            log_action(ActionType.COMMAND_STARTED, ledger, metadata={'command': command})
            try:
                code = func(args)
            except ValueError as e:
                logger.error(f"{command}: {str(e)}")
                print(f"error: {e}", file=sys.stderr)
                log_action(ActionType.COMMAND_FAILED, ledger, metadata={'command': command, 'exit_code': EXIT_VALIDATION},
                           status='failed', error_message=str(e))
                return EXIT_VALIDATION
            except Exception as e:
                logger.exception(f"{command} failed: {str(e)}")
                print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
                log_action(ActionType.COMMAND_FAILED, ledger, metadata={'command': command, 'exit_code': EXIT_RUNTIME},
                           status='failed', error_message=str(e))
                return EXIT_RUNTIME
            log_action(ActionType.COMMAND_SUCCESS, ledger, metadata={'command': command})
            return EXIT_OK if code is None else code
        return wrapper
    return decorator


def record_run_config(command: str):
    """Decorator writing the fully resolved flags to run_config.json before the handler runs"""
    def decorator(func: Callable[[argparse.Namespace], Optional[int]]):
        @wraps(func)
        def wrapper(args: argparse.Namespace) -> Optional[int]:
            ledger = run_dir(args)
            if ledger is not None:
                flags = {k: v for k, v in vars(args).items() if k not in ('command', 'config')}
                write_json(ledger / RUN_CONFIG_FILE, {
                    'command': command,
                    'flags': flags,
                    'seed': flags.get('seed'),
                    'config': args.config,
                })
            return func(args)
        return wrapper
    return decorator
