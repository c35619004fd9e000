"""
Exception hierarchy shared by every dlglm package
"""

from typing import Optional


class DlglmError(Exception):
    """Base class for all dlglm errors"""


class GraphError(DlglmError, ValueError):
    """Invalid computation graph (non-scalar root or cycle)"""


class MissingGradientError(DlglmError, RuntimeError):
    """Optimizer step requested for a parameter without a gradient"""

    def __init__(self, name: str):
        super().__init__(f"Parameter '{name}' has no gradient; run backward() first")
        self.name = name


class ShapeMismatchError(DlglmError, ValueError):
    """Array shapes disagree"""


class CalibrationError(DlglmError, RuntimeError):
    """Root search could not bracket the requested target"""


class MaskSimulationError(DlglmError, ValueError):
    """Mask simulation received values it cannot transform"""


class DataFormatError(DlglmError, ValueError):
    """Input table is malformed"""


class UnsupportedConfigurationError(DlglmError, ValueError):
    """Configuration outside what the models support"""


class IrlsError(DlglmError, RuntimeError):
    """IRLS failed to produce an estimate"""


class SeparationError(IrlsError):
    """Coefficient norms diverge because the classes are separable"""


class SingularMatrixError(IrlsError):
    """Weighted Gram matrix cannot be inverted"""


class NonFiniteBoundError(DlglmError, FloatingPointError):
    """A bound evaluated to NaN or infinity"""

    def __init__(self, message: str, row: Optional[int] = None):
        super().__init__(message if row is None else f"{message} (row {row})")
        self.row = row


class TrainingError(DlglmError, RuntimeError):
    """Training aborted"""


class GridSearchError(DlglmError, RuntimeError):
    """Every grid configuration failed"""

    def __init__(self, failures: dict[int, str]):
        details = "; ".join(f"config {idx}: {reason}" for idx, reason in sorted(failures.items()))
        super().__init__(f"All {len(failures)} grid configurations failed: {details}")
        self.failures = failures


class UndefinedMetricError(DlglmError, ValueError):
    """Metric is undefined for the given inputs"""


class StageError(DlglmError):
    """A pipeline stage failed; carries the stage name and the original error"""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"Stage '{stage}' failed: {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
