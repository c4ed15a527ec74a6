"""Python access to the STCL metrics, knee detector, difficulty rule and data helpers."""

from ._core import (
    CHECKPOINT_VERSION,
    PSNR_CAP,
    CheckpointError,
    DataError,
    Error,
    NumericError,
    ValidationError,
    analyze_knee,
    bce,
    bit_accuracy,
    classify,
    config_json,
    detect_knee,
    load_checkpoint,
    ms_ssim,
    ms_ssim_weights,
    open_corpus,
    parse_checkpoint,
    payload,
    psnr,
    rmse,
    ssim,
)

__version__ = "0.1.0"

__all__ = [
    "CHECKPOINT_VERSION",
    "PSNR_CAP",
    "CheckpointError",
    "DataError",
    "Error",
    "NumericError",
    "ValidationError",
    "analyze_knee",
    "bce",
    "bit_accuracy",
    "classify",
    "config_json",
    "detect_knee",
    "load_checkpoint",
    "ms_ssim",
    "ms_ssim_weights",
    "open_corpus",
    "parse_checkpoint",
    "payload",
    "psnr",
    "rmse",
    "ssim",
]
