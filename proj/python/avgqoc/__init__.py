"""Averaged optimal control of finite-level quantum transfers."""

from ._avgqoc import *  # noqa: F401,F403
from ._avgqoc import __doc__  # noqa: F401

__version__ = "0.1.0"
