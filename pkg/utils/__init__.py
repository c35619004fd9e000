"""
Utils package for dlglm: errors, random streams and artifact I/O
"""

from .errors import DlglmError, StageError
from .rng import derive_rng

__all__ = ["DlglmError", "StageError", "derive_rng"]
