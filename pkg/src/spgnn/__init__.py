"""Attack-path discovery and mitigation for zero-trust network graphs.

The package learns hop distances from network assets to critical assets
with a positional graph network, classifies attack-surface edges by path
criticality and compliance, and emits policy changes that break the
non-compliant paths.
"""

__version__ = "0.1.0"

from .errors import (
    DanglingReferenceError,
    DatasetError,
    DatasetFormatError,
    DegenerateDataError,
    DuplicateIdError,
    PolicyResolutionError,
    SpecInfeasibleError,
    TrainingDivergedError,
    TransferUnsupportedError,
)

__all__ = [
    "__version__",
    "DatasetError",
    "DatasetFormatError",
    "DuplicateIdError",
    "DanglingReferenceError",
    "DegenerateDataError",
    "PolicyResolutionError",
    "SpecInfeasibleError",
    "TrainingDivergedError",
    "TransferUnsupportedError",
]
