"""Octuple tokenization, corruption selection and evaluation metrics.

Thin re-export of the compiled ``_core`` extension.
"""

from ._core import *  # noqa: F401,F403
from ._core import OctomidiError

__all__ = [name for name in dir() if not name.startswith("_")]
