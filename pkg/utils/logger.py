import logging
import sys
from typing import Optional

from config import config

def setup_logger(name: str = 'workflowforge', level: Optional[str] = None, log_file: Optional[str] = None) -> logging.Logger:
    """Setup logger with stderr and optional file output"""

    logger = logging.getLogger(name)
    level = level or config.get('output.log_level', 'WARNING')
    logger.setLevel(getattr(logging, level.upper(), logging.WARNING))
    logger.propagate = False

    # Clear existing handlers
    logger.handlers.clear()

    # Create formatter
    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # Console handler; stdout is reserved for command output
    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # File handler (optional)
    log_file = log_file or config.get('output.log_file')
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


def set_log_level(level: str) -> None:
    """Apply a level to every logger created so far"""
    value = getattr(logging, level.upper(), logging.WARNING)
    for logger in logging.Logger.manager.loggerDict.values():
        if isinstance(logger, logging.Logger):
            logger.setLevel(value)
