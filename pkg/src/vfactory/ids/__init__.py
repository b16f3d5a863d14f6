from .features import ChannelEvent, Observation, Transcriber, transcribe
from .detectors import (
    Alert,
    DETECTOR_KINDS,
    detect_dtmc,
    detect_iat,
    detect_minmax,
    detect_steadytime,
    load_model,
    save_model,
    train_dtmc,
    train_iat,
    train_minmax,
    train_steadytime,
)
from .evaluate import evaluate

__all__ = [
    "ChannelEvent",
    "Observation",
    "Transcriber",
    "transcribe",
    "Alert",
    "DETECTOR_KINDS",
    "train_minmax", "detect_minmax",
    "train_steadytime", "detect_steadytime",
    "train_iat", "detect_iat",
    "train_dtmc", "detect_dtmc",
    "save_model", "load_model",
    "evaluate",
]
