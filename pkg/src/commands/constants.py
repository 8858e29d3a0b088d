# Standard library imports
from collections import namedtuple

# Type definitions
Command = namedtuple('Command', ['command', 'description'])

# Command constants
CMD_COLLECT = 'collect'
CMD_LABEL = 'label'
CMD_PRETRAIN = 'pretrain'
CMD_BC = 'bc'
CMD_EVAL = 'eval'
CMD_ANALYZE = 'analyze'
CMD_REPORT = 'report'
CMD_REPRODUCE = 'reproduce-paper-desk'

# Data commands
DATA_COMMANDS = [
    Command(CMD_COLLECT, "Collect scripted demonstrations into a dataset"),
    Command(CMD_LABEL, "Hindsight-label a dataset's stages from its images"),
]

# Training commands
TRAINING_COMMANDS = [
    Command(CMD_PRETRAIN, "Pretrain an image encoder with language or stage supervision"),
    Command(CMD_BC, "Train a language-conditioned policy by behaviour cloning"),
]

# Evaluation commands
EVALUATION_COMMANDS = [
    Command(CMD_EVAL, "Evaluate a policy on the fixed scenario grid"),
    Command(CMD_ANALYZE, "Compare cross-domain action distributions"),
    Command(CMD_REPORT, "Tabulate evaluated runs as markdown or CSV"),
]

# Pipeline commands
PIPELINE_COMMANDS = [
    Command(CMD_REPRODUCE, "Run the desk-scale sim2sim transfer experiment end to end"),
]

COMMANDS = DATA_COMMANDS + TRAINING_COMMANDS + EVALUATION_COMMANDS + PIPELINE_COMMANDS
