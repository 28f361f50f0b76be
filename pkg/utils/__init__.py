"""Utility functions and helpers"""

from .logger import setup_logger
from .file_utils import dump_canonical, read_json, write_canonical, write_text
from .report import ValidationReport, Violation

__all__ = ['setup_logger', 'dump_canonical', 'read_json', 'write_canonical', 'write_text',
           'ValidationReport', 'Violation']
