"""Parsing module for goal clause splitting and token normalization"""

from .goal_parser import GoalParser
from .text_cleaner import TextCleaner

__all__ = ['GoalParser', 'TextCleaner']
