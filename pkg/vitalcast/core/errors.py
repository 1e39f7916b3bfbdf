"""
Error Types

Exception hierarchy shared by every vitalcast module.
"""

from typing import List, Optional, Tuple


class VitalcastError(Exception):
    """Base class for all vitalcast failures"""


class ContractViolation(VitalcastError, ValueError):
    """A precondition on shapes, dimensions or arguments was broken"""


class ConfigError(VitalcastError, ValueError):
    """Experiment configuration could not be loaded or validated"""


class NonFiniteError(VitalcastError, ValueError):
    """A NaN/Inf value showed up where finite numbers are required"""

    def __init__(self, message: str, index: Optional[int] = None):
        super().__init__(message)
        self.index = index


class CsvContractError(VitalcastError, ValueError):
    """Patient CSV does not match the documented contract"""

    def __init__(self, issues: List[Tuple[int, str]]):
        self.issues = sorted(issues)
        lines = [f"line {line}: {message}" for line, message in self.issues]
        super().__init__("; ".join(lines) if lines else "invalid patient CSV")


class ImputationError(VitalcastError, ValueError):
    """A vital has no observation to carry forward"""


class SplitError(VitalcastError, ValueError):
    """Patient-level split cannot be realised"""


class LeakageError(VitalcastError, ValueError):
    """A scaler was fitted on patients it is now asked to evaluate"""


class DegenerateInputError(VitalcastError, ValueError):
    """Estimator input has zero variance and no tie-breaking jitter"""


class GramMatrixError(VitalcastError, RuntimeError):
    """Kernel Gram matrix stayed non positive-definite after regularisation retries"""


class CheckpointError(VitalcastError, ValueError):
    """Checkpoint file is corrupt, truncated or of the wrong version"""


class TrainingDivergedError(VitalcastError, RuntimeError):
    """Training loss became non-finite"""

    def __init__(self, epoch: int, batch: int, loss: float):
        super().__init__(f"non-finite training loss {loss!r} at epoch {epoch}, batch {batch}")
        self.epoch = epoch
        self.batch = batch


class StageError(VitalcastError, RuntimeError):
    """A pipeline stage failed; wraps the original error with a stage label"""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"[{stage}] {type(cause).__name__}: {cause}")
        self.stage = stage
        self.cause = cause
