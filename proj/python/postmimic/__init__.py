"""Ultrasound post-processing mimics: metrics, phantoms and trained models."""

import json

from ._core import (
    ContractError,
    DataError,
    Model,
    load_checkpoint,
    mae,
    mse,
    oracle_postprocess,
    preset,
    psnr,
    ssim,
)
from ._core import synth_cineloop as _synth_cineloop

__all__ = [
    "ContractError",
    "DataError",
    "Model",
    "benchmark",
    "load_checkpoint",
    "mae",
    "mse",
    "oracle_postprocess",
    "preset",
    "psnr",
    "ssim",
    "synth_cineloop",
]


def synth_cineloop(spec=None):
    """Frames (dB arrays) of one synthetic phantom; spec is a dict of phantom fields."""
    return _synth_cineloop(json.dumps(spec or {}))


def benchmark(model, height, width, repetitions=10):
    return json.loads(model.benchmark(height, width, repetitions))
