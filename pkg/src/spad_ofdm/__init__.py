"""SPAD-array DCO-OFDM link simulator and closed-form analytics."""

from .analytics import (
    LinkMetrics,
    OperatingPoint,
    ber_mqam,
    distortion_noise_var,
    gain_factor,
    link_metrics,
    mean_distorted,
    operating_point,
    se_upper,
    second_moment_distorted,
    shot_noise_var_freq,
    snr,
)
from .ofdm import ClippingConfig, OfdmFrame, QamConstellation, SaturationError
from .spad import RateCoeffs, SpadParams, rate_coeffs

__all__ = [
    "ClippingConfig",
    "LinkMetrics",
    "OfdmFrame",
    "OperatingPoint",
    "QamConstellation",
    "RateCoeffs",
    "SaturationError",
    "SpadParams",
    "ber_mqam",
    "distortion_noise_var",
    "gain_factor",
    "link_metrics",
    "mean_distorted",
    "operating_point",
    "rate_coeffs",
    "se_upper",
    "second_moment_distorted",
    "shot_noise_var_freq",
    "snr",
]

__version__ = "0.1.0"
