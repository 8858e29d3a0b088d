# Standard library imports
import atexit
import logging
import os
import signal
import sys
from typing import Optional, Sequence

# Third-party imports
from dotenv import load_dotenv

# Local application imports
from src.commands.data_commands import register_data_handlers
from src.commands.evaluation_commands import register_evaluation_handlers
from src.commands.pipeline_commands import register_pipeline_handlers
from src.commands.router import CommandRouter
from src.commands.training_commands import register_training_handlers
from src.services.service_container import ServiceContainer

logger = logging.getLogger(__name__)

NOISY_LOGGERS = ('matplotlib', 'PIL')


def configure_logging() -> None:
    logging.basicConfig(
        level=os.getenv('S2L_LOG_LEVEL', 'INFO').upper(),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    for name in NOISY_LOGGERS:
        logging.getLogger(name).setLevel(logging.WARNING)


def build_router(services: ServiceContainer) -> CommandRouter:
    """Register every command family with the shared services"""
    router = CommandRouter()
    register_data_handlers(router, services)
    register_training_handlers(router, services)
    register_evaluation_handlers(router, services)
    register_pipeline_handlers(router, services)
    return router


def main(argv: Optional[Sequence[str]] = None) -> int:
    load_dotenv()
    configure_logging()
    services = ServiceContainer()

    def cleanup_resources():
        """Cleanup function to be called on shutdown"""
        try:
            services.close()
        except Exception as e:
            logger.error(f"Error during cleanup: {str(e)}")

    def signal_handler(signum, frame):
        """Handle shutdown signals"""
        logger.info(f"Received signal {signal.Signals(signum).name}, shutting down")
        cleanup_resources()
        sys.exit(128 + signum)

    atexit.register(cleanup_resources)
    signal.signal(signal.SIGTERM, signal_handler)
    if hasattr(signal, 'SIGHUP'):
        signal.signal(signal.SIGHUP, signal_handler)

    try:
        return build_router(services).dispatch(argv)
    finally:
        cleanup_resources()
        atexit.unregister(cleanup_resources)


if __name__ == '__main__':
    sys.exit(main())
