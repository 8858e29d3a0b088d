# Local application imports
from src.commands.constants import (
    CMD_ANALYZE,
    CMD_BC,
    CMD_COLLECT,
    CMD_EVAL,
    CMD_LABEL,
    CMD_PRETRAIN,
    CMD_REPORT,
    CMD_REPRODUCE,
    COMMANDS,
    Command,
)
