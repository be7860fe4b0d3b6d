"""
Base Stage class that all pipeline stages inherit from.
"""
import logging
from abc import ABC, abstractmethod


class BaseStage(ABC):
    """Base class for all stages in the tagging pipeline"""

    def __init__(self, name):
        """
        Initialize a base stage.

        Args:
            name (str): Name of the stage, e.g. ``Aligner[abc]`` for per-language stages
        """
        self.name = name
        self.logger = logging.getLogger(type(self).__module__)

    @abstractmethod
    def run(self, *args, **kwargs):
        """
        Run the stage's main functionality.

        Args:
            *args: Variable length argument list.
            **kwargs: Arbitrary keyword arguments.

        Returns:
            Any: Result of the stage's execution
        """
        pass

    def log(self, message, level=logging.INFO):
        """
        Log a message from this stage.

        Args:
            message (str): Message to log
            level (int): Logging level
        """
        self.logger.log(level, "[%s] %s", self.name, message)
