from .records import Recorder, SCHEMA_VERSION
from .dataset import Dataset, load_dataset, replay
from .deviation import Trajectory, deviation, extract_trajectory

__all__ = [
    "Recorder",
    "SCHEMA_VERSION",
    "Dataset",
    "load_dataset",
    "replay",
    "Trajectory",
    "deviation",
    "extract_trajectory",
]
