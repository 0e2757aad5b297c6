"""Learned frequency-domain spectrum shaping (FDSS) for low-PAPR DFT-s-OFDM."""
from .chain import SystemConfig, NoiseModel, run_chain, calibrate_noise
from .filters import (FilterTaps, PolyFilterModel, rrc_taps, rect_taps, eval_poly_filter,
                      resample, check_zero_isi)
from .kernels import BACKEND

__all__ = [
    "SystemConfig", "NoiseModel", "run_chain", "calibrate_noise", "FilterTaps",
    "PolyFilterModel", "rrc_taps", "rect_taps", "eval_poly_filter", "resample",
    "check_zero_isi", "BACKEND",
]
__version__ = "0.1.0"
