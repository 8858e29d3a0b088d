# Standard library imports
import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence

# Local application imports
from src.commands.constants import COMMANDS

logger = logging.getLogger(__name__)

Handler = Callable[[argparse.Namespace], int]

PROG = 's2l'
CONFIG_FLAG = '--config'


class UsageError(ValueError):
    """Unparseable command line or config overlay"""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.format_usage().strip()}\n{self.prog}: error: {message}")


class CommandRouter:
    """Subcommand registry over argparse; handlers return the process exit code"""

    def __init__(self, prog: str = PROG):
        descriptions = "\n".join(f"  {c.command:<22}{c.description}" for c in COMMANDS)
        self.parser = _Parser(
            prog=prog,
            description="Language-grounded sim2sim transfer: data, pretraining, behaviour cloning and evaluation.",
            epilog=f"commands:\n{descriptions}",
            formatter_class=argparse.RawDescriptionHelpFormatter,
        )
        self.subparsers = self.parser.add_subparsers(dest='command', metavar='COMMAND', parser_class=_Parser)
        self.commands: Dict[str, argparse.ArgumentParser] = {}
        self.handlers: Dict[str, Handler] = {}

    def add_command(self, name: str) -> argparse.ArgumentParser:
        description = next((c.description for c in COMMANDS if c.command == name), None)
        parser = self.subparsers.add_parser(
            name, help=description, description=description,
            formatter_class=argparse.ArgumentDefaultsHelpFormatter,
        )
        parser.add_argument(CONFIG_FLAG, metavar='FILE', default=None,
                            help="JSON object of flag values; flags given on the command line win")
        self.commands[name] = parser
        return parser

    def command_handler(self, name: str) -> Callable[[Handler], Handler]:
        def decorator(func: Handler) -> Handler:
            if name not in self.commands:
                raise KeyError(f"command '{name}' has no parser; call add_command first")
            self.handlers[name] = func
            return func
        return decorator

    def apply_config(self, name: str, args: argparse.Namespace, argv: Sequence[str]) -> argparse.Namespace:
        """Overlay the --config JSON onto args for every flag not given explicitly"""
        if not args.config:
            return args
        path = Path(args.config)
        try:
            overlay = json.loads(path.read_text(encoding='utf-8'))
        except (OSError, json.JSONDecodeError) as e:
            raise UsageError(f"cannot read config {path}: {e}")
        if not isinstance(overlay, dict):
            raise UsageError(f"config {path} must hold a JSON object")
        if 'command' in overlay and isinstance(overlay.get('flags'), dict):
            # a run_config.json written by an earlier run
            if overlay['command'] != name:
                raise UsageError(f"config {path} was written by '{overlay['command']}', not '{name}'")
            overlay = overlay['flags']

        actions = {a.dest: a for a in self.commands[name]._actions if a.dest not in ('help', 'config')}
        for key, value in overlay.items():
            dest = key.lstrip('-').replace('-', '_')
            action = actions.get(dest)
            if action is None:
                raise UsageError(f"config {path}: unknown option '{key}' for {name}")
            if _given(action, argv):
                continue
            if isinstance(value, str) and action.type is not None:
                value = action.type(value)
            if action.choices is not None and value not in action.choices:
                raise UsageError(f"config {path}: {key}={value!r} not one of {list(action.choices)}")
            setattr(args, dest, value)
        logger.debug(f"Applied config overlay {path}")
        return args

    def dispatch(self, argv: Optional[Sequence[str]] = None) -> int:
        argv = list(sys.argv[1:] if argv is None else argv)
        try:
            args = self.parser.parse_args(argv)
            if args.command is None:
                self.parser.print_help(sys.stderr)
                return 1
            args = self.apply_config(args.command, args, argv)
        except UsageError as e:
            print(str(e), file=sys.stderr)
            return 1
        except SystemExit as e:
            # --help
            return int(e.code or 0)
        return self.handlers[args.command](args)


def _given(action: argparse.Action, argv: List[str]) -> bool:
    for token in argv:
        for option in action.option_strings:
            if token == option or token.startswith(f"{option}="):
                return True
    return False
