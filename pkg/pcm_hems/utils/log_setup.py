import logging
import sys

LOG_FORMAT = "%(asctime)s %(levelname)-7s %(message)s"


def configure_logging(level: str = "INFO") -> None:
    """
    Install a single stream handler on the package logger.

    Module loggers tag their own messages ("[thermal] ...", "[coordinator:site] ...").
    """
    logger = logging.getLogger("pcm_hems")
    logger.setLevel(level.upper())
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt="%H:%M:%S"))
    logger.addHandler(handler)
    logger.propagate = False
