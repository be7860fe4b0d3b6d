"""
Logging setup shared by the CLI and the pipeline workers.
"""
import logging
import sys

import coloredlogs

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s %(message)s"


def setup_logging(level: int = logging.INFO) -> None:
    """
    Install a line-oriented handler on standard error for the typoline loggers.

    Args:
        level (int): Logging level for the ``typoline`` logger hierarchy
    """
    # Colour only when stderr is a terminal
    coloredlogs.install(
        level=level,
        logger=logging.getLogger("typoline"),
        fmt=LOG_FORMAT,
        stream=sys.stderr,
        isatty=sys.stderr.isatty(),
    )
