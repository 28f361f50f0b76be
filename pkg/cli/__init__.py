"""Command-line interface module"""

from .main import cli, main
from .report import RunReport

__all__ = ['cli', 'main', 'RunReport']
