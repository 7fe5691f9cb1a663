# Configure logging
import logging
import os

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

logging.basicConfig(level=os.environ.get("SEMMAP_LOG_LEVEL", "INFO").upper(), format=LOG_FORMAT)
logger = logging.getLogger(__name__)


def configure_logging(level: int) -> None:
    """Re-apply the root log level, used by the command line verbosity flags."""
    logging.getLogger().setLevel(level)
