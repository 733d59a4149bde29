"""Preprocessing and boundary-aware evaluation of online handwriting trajectories."""

from csmkit.errors import CsmError
from csmkit.model import (
    CharacterTrajectory,
    CoordinateMode,
    Dataset,
    PenState,
    SentenceSample,
    TrajectoryPoint,
    boundary_label,
    load_dataset,
    save_dataset,
)

__all__ = [
    "CharacterTrajectory",
    "CoordinateMode",
    "CsmError",
    "Dataset",
    "PenState",
    "SentenceSample",
    "TrajectoryPoint",
    "boundary_label",
    "load_dataset",
    "save_dataset",
]
__version__ = "0.1.0"
