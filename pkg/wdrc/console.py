#!/usr/bin/env python3
"""
Shared rich consoles and logging setup.

Summaries go to stdout through `console`; log records go to stderr through a
RichHandler so that piping the CLI output stays clean.
"""

import logging

from rich.console import Console
from rich.logging import RichHandler

console = Console()
err_console = Console(stderr=True)

LOG_FORMAT = "%(message)s"


def setup_logging(verbosity: int = 0) -> None:
    """Configure the `wdrc` logger. verbosity: -1 quiet, 0 info, >=1 debug"""
    if verbosity < 0:
        level = logging.WARNING
    elif verbosity == 0:
        level = logging.INFO
    else:
        level = logging.DEBUG

    logger = logging.getLogger('wdrc')
    logger.setLevel(level)
    for handler in list(logger.handlers):
        logger.removeHandler(handler)
    handler = RichHandler(console=err_console, show_path=False, rich_tracebacks=True)
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logger.addHandler(handler)
    logger.propagate = False
