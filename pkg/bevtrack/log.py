import logging
import sys

from pythonjsonlogger import jsonlogger

LOG_FORMAT = '%(asctime)s %(name)s %(levelname)s %(filename)s %(lineno)d %(message)s'
PLAIN_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - [%(filename)s:%(lineno)d] - %(message)s'


def configure_logging(level: str = "INFO", json_format: bool = True) -> None:
    """
    Install the process-wide log handler on stderr.

    Args:
        level: Root log level name
        json_format: Emit one JSON object per line instead of plain text
    """
    handler = logging.StreamHandler(sys.stderr)
    if json_format:
        handler.setFormatter(jsonlogger.JsonFormatter(LOG_FORMAT))
    else:
        handler.setFormatter(logging.Formatter(PLAIN_FORMAT))

    root = logging.getLogger()
    for existing in list(root.handlers):
        root.removeHandler(existing)
    root.addHandler(handler)
    root.setLevel(level.upper())
    # matplotlib is chatty at INFO about font caching
    logging.getLogger("matplotlib").setLevel(logging.WARNING)
