"""Exception types shared across the package.

The CLI maps these to process exit codes: dataset/input problems exit 1,
training divergence exits 2, degenerate training data exits 3.
"""


class DatasetError(ValueError):
    """Base class for dataset and input-file problems."""


class DatasetFormatError(DatasetError):
    """Malformed file content; message carries line/field context."""


class DuplicateIdError(DatasetError):
    """Two records share an identifier that must be unique."""


class DanglingReferenceError(DatasetError):
    """A record references an id that does not exist; names the missing id."""


class SpecInfeasibleError(DatasetError):
    """A generation spec cannot be satisfied; message explains the conflict."""


class TrainingDivergedError(RuntimeError):
    """Loss became non-finite during training."""

    def __init__(self, epoch: int, message: str | None = None):
        self.epoch = epoch
        super().__init__(message or f"training diverged at epoch {epoch}")


class DegenerateDataError(ValueError):
    """Training data cannot support the requested fit (e.g. one class only)."""


class TransferUnsupportedError(ValueError):
    """Requested transfer is not defined for this model head."""


class PolicyResolutionError(DatasetError):
    """A mitigation action references an edge with no resolvable policy."""
