import logging
import os

from rich.console import Console
from rich.logging import RichHandler

from app.config.lab_config import LOG_LEVEL_ENV

stderr_console = Console(stderr=True)


def configure_logging(verbose: bool = False) -> None:
    """
    Installs one RichHandler on the root logger. The level comes from
    MULAB_LOG_LEVEL (default WARNING); ``verbose`` lifts it to at least INFO.
    """
    name = os.environ.get(LOG_LEVEL_ENV, "WARNING").upper()
    level = logging.getLevelName(name)
    if not isinstance(level, int):
        level = logging.WARNING
    if verbose:
        level = min(level, logging.INFO)

    root = logging.getLogger()
    for handler in list(root.handlers):
        if isinstance(handler, RichHandler):
            root.removeHandler(handler)
    root.addHandler(RichHandler(console=stderr_console, show_path=False, rich_tracebacks=False))
    root.setLevel(level)
