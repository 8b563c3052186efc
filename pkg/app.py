import os
import logging
from dotenv import load_dotenv
load_dotenv()

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Process defaults, overridable from the environment or a .env file
LOG_LEVEL = os.environ.get("ESRF_LOG_LEVEL", "INFO")
OUT_DIR = os.environ.get("ESRF_OUT_DIR", "results")
DEFAULT_SEED = int(os.environ.get("ESRF_SEED", "1"))
DEFAULT_THREADS = int(os.environ.get("ESRF_THREADS", "1"))


def configure_logging(level: str = LOG_LEVEL) -> None:
    """Configure root logging once for the command-line process"""
    numeric_level = getattr(logging, str(level).upper(), None)
    if not isinstance(numeric_level, int):
        logging.warning(f"Unknown log level {level!r}, using INFO")
        numeric_level = logging.INFO
    logging.basicConfig(level=numeric_level, format=LOG_FORMAT)
