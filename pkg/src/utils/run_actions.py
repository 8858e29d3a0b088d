# Standard library imports
import json
import logging
from datetime import datetime, timezone
UTC = timezone.utc  # datetime.UTC alias is 3.11+
from enum import Enum
from pathlib import Path
from typing import Any, Dict, List, Optional, Union

logger = logging.getLogger(__name__)

LEDGER_FILE = 'actions.jsonl'


class ActionType(Enum):
    # Data
    DATASET_COLLECTED = "dataset_collected"
    DATASET_SAVED = "dataset_saved"
    DATASET_LABELED = "dataset_labeled"
    PREDICTOR_TRAINED = "predictor_trained"

    # Training
    PRETRAIN_STARTED = "pretrain_started"
    PRETRAIN_STEP = "pretrain_step"
    PRETRAIN_COMPLETED = "pretrain_completed"
    BC_STARTED = "bc_started"
    TRAIN_STEP = "train_step"
    BC_COMPLETED = "bc_completed"
    CHECKPOINT_SAVED = "checkpoint_saved"
    TRAINING_DIVERGED = "training_diverged"

    # Evaluation
    EVAL_TRIAL = "eval_trial"
    EVAL_COMPLETED = "eval_completed"
    ANALYSIS_COMPLETED = "analysis_completed"
    REPORT_WRITTEN = "report_written"

    # Command Status
    COMMAND_STARTED = "command_started"
    COMMAND_SUCCESS = "command_success"
    COMMAND_FAILED = "command_failed"


def log_action(
    action_type: ActionType,
    run_dir: Optional[Union[str, Path]] = None,
    metadata: Optional[Dict[str, Any]] = None,
    status: str = "success",
    error_message: Optional[str] = None
) -> bool:
    """
    Append an action to the run ledger

    Args:
        action_type: Type of action being recorded
        run_dir: Directory holding actions.jsonl (only logged when omitted)
        metadata: Additional data about the action (optional)
        status: Status of the action (success/failed)
        error_message: Error message if action failed (optional)

    Returns:
        bool: True if the entry was written, False otherwise
    """
    entry = {
        'action_type': action_type.value,
        'timestamp': datetime.now(UTC).isoformat(),
        'status': status,
    }
    if metadata:
        entry['metadata'] = metadata
    if error_message:
        entry['error_message'] = error_message

    logger.debug(f"Action: {action_type.value} {metadata or ''}")
    if run_dir is None:
        return False

    try:
        path = Path(run_dir)
        path.mkdir(parents=True, exist_ok=True)
        with open(path / LEDGER_FILE, 'a', encoding='utf-8') as f:
            f.write(json.dumps(entry, sort_keys=True, default=str) + '\n')
        return True
    except OSError as e:
        logger.error(f"Failed to log action {action_type.value}: {str(e)}")
        return False


def get_run_actions(
    run_dir: Union[str, Path],
    action_type: Optional[ActionType] = None,
    status: Optional[str] = None,
    limit: Optional[int] = None
) -> List[Dict[str, Any]]:
    """
    Read ledger entries back, oldest first

    Args:
        run_dir: Directory holding actions.jsonl
        action_type: Filter by action type (optional)
        status: Filter by status (optional)
        limit: Maximum number of entries to return

    Returns:
        list: Matching ledger entries
    """
    path = Path(run_dir) / LEDGER_FILE
    if not path.exists():
        return []

    entries = []
    with open(path, encoding='utf-8') as f:
        for line in f:
            if not line.strip():
                continue
            entry = json.loads(line)
            if action_type and entry['action_type'] != action_type.value:
                continue
            if status and entry['status'] != status:
                continue
            entries.append(entry)
    return entries[:limit] if limit else entries
