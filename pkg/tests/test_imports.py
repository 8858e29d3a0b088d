import pytest

def test_all_imports():
    """Test that all necessary imports work"""
    # Third-party imports
    from dotenv import load_dotenv
    import matplotlib
    import numpy
    import pandas
    import scipy.stats
    import torch

    # Local application imports
    from src.commands import (
        CMD_ANALYZE,
        CMD_BC,
        CMD_COLLECT,
        CMD_EVAL,
        CMD_LABEL,
        CMD_PRETRAIN,
        CMD_REPORT,
        CMD_REPRODUCE,
        COMMANDS,
    )
    from src.commands.data_commands import register_data_handlers
    from src.commands.evaluation_commands import register_evaluation_handlers
    from src.commands.pipeline_commands import register_pipeline_handlers
    from src.commands.training_commands import register_training_handlers
    from src.database.dataset_store import DatasetStore
    from src.main import build_router, main
    from src.middleware.errors import handle_command_errors
    from src.services.service_container import ServiceContainer

    assert True, "All imports successful"


def test_every_command_is_registered():
    from src.commands import COMMANDS
    from src.main import build_router
    from src.services.service_container import ServiceContainer

    router = build_router(ServiceContainer())
    assert set(router.handlers) == {c.command for c in COMMANDS}
