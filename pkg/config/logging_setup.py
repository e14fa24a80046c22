"""
Logging setup driven by LOGGING_CONFIG.
"""

import logging
import os
from logging.handlers import RotatingFileHandler
from typing import Dict, Any, Optional

from colorama import Fore, Style, init as colorama_init

from .settings import LOGGING_CONFIG

_LEVEL_COLORS = {
    "DEBUG": Fore.CYAN,
    "INFO": Fore.GREEN,
    "WARNING": Fore.YELLOW,
    "ERROR": Fore.RED,
    "CRITICAL": Fore.RED + Style.BRIGHT,
}

_HANDLER_TAG = "_cms_monitor_handler"


class ColoredFormatter(logging.Formatter):
    """Formatter that colors the level name for console output."""

    def format(self, record: logging.LogRecord) -> str:
        original = record.levelname
        color = _LEVEL_COLORS.get(original)
        if color:
            record.levelname = f"{color}{original}{Style.RESET_ALL}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


def setup_logging(config: Optional[Dict[str, Any]] = None, level: Optional[str] = None) -> logging.Logger:
    """Configure the root logger once; repeated calls replace our handlers."""
    config = dict(LOGGING_CONFIG if config is None else config)
    root = logging.getLogger()
    root.setLevel(level or config.get("level", "INFO"))

    for handler in list(root.handlers):
        if getattr(handler, _HANDLER_TAG, False):
            root.removeHandler(handler)

    fmt = config.get("format", "%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    if config.get("console_handler", True):
        colorama_init(strip=False)
        console = logging.StreamHandler()
        if config.get("colored", True):
            console.setFormatter(ColoredFormatter(fmt))
        else:
            console.setFormatter(logging.Formatter(fmt))
        setattr(console, _HANDLER_TAG, True)
        root.addHandler(console)

    if config.get("file_handler", False):
        log_path = config.get("log_path", os.path.join("logs", "cms_monitor.log"))
        os.makedirs(os.path.dirname(log_path) or ".", exist_ok=True)
        file_handler = RotatingFileHandler(
            log_path,
            maxBytes=int(config.get("max_file_size", 10)) * 1024 * 1024,
            backupCount=int(config.get("backup_count", 5)),
        )
        file_handler.setFormatter(logging.Formatter(fmt))
        setattr(file_handler, _HANDLER_TAG, True)
        root.addHandler(file_handler)

    return root
