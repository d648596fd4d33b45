"""Statistics of a passively-quenched SPAD array receiver.

Incident photon rate, dead-time-distorted mean/variance of the detected
count per OFDM sample, Gaussian-approximation sampling and the
saturation landmarks.  Dead time 0 models the ideal photon counter.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import c as _c_light
from scipy.constants import h as _h_planck


@dataclass(frozen=True)
class SpadParams:
    """Physical parameters of the SPAD array and the sampling clock."""

    n_pixels: int = 8192          # pixels in the array
    dead_time: float = 10e-9      # s; 0 selects the ideal photon counter
    pde: float = 0.35             # photon detection efficiency
    dcr: float = 0.5e6            # dark count rate of the array, counts/s
    afterpulse: float = 0.0075    # afterpulsing probability
    crosstalk: float = 0.025      # crosstalk probability
    background_power: float = 10e-9   # W of ambient light on the array
    wavelength: float = 450e-9    # m
    sample_duration: float = 20e-9    # s per time-domain OFDM sample

    def __post_init__(self):
        if self.n_pixels < 1:
            raise ValueError(f"n_pixels={self.n_pixels} must be >= 1")
        if not 0 < self.pde <= 1:
            raise ValueError(f"pde={self.pde} must be in (0, 1]")
        if self.dead_time < 0:
            raise ValueError(f"dead_time={self.dead_time} must be >= 0")
        if self.sample_duration < self.dead_time:
            raise ValueError(
                f"sample_duration={self.sample_duration} must be >= dead_time={self.dead_time}"
            )
        if self.sample_duration <= 0:
            raise ValueError("sample_duration must be positive")

    @property
    def photon_energy(self):
        """Photon energy h*c/wavelength in joules."""
        return _h_planck * _c_light / self.wavelength

    @property
    def background_rate(self):
        """Detected background photon rate pde * P_B / E_ph, counts/s."""
        return self.pde * self.background_power / self.photon_energy


@dataclass(frozen=True)
class RateCoeffs:
    """Affine map from instantaneous optical power to incident photon rate.

    rate = c_s * x_t + c_n with the channel loss zeta folded into c_s;
    psi1/psi2 are the same map re-based onto the normalized clipped
    signal: rate = psi1 * x_c + psi2.
    """

    c_s: float    # counts/s per W of transmitted power
    c_n: float    # counts/s from dark counts and background
    psi1: float   # counts/s per unit normalized amplitude
    psi2: float   # counts/s at zero normalized amplitude
    zeta: float   # channel loss embedded in c_s

    def __post_init__(self):
        if self.psi1 <= 0 or self.psi2 <= 0:
            raise ValueError(f"psi1={self.psi1} and psi2={self.psi2} must be positive")


def incident_rate_coeffs(spad, zeta=1.0):
    """(c_s, c_n) of the affine power-to-rate map for channel loss zeta."""
    mult = 1.0 + spad.afterpulse + spad.crosstalk
    c_s = spad.pde * zeta * mult / spad.photon_energy
    c_n = (spad.dcr + spad.background_rate) * mult
    return c_s, c_n


def rate_coeffs(spad, zeta, clip_cfg):
    """Full RateCoeffs for a channel loss and a clipping configuration."""
    c_s, c_n = incident_rate_coeffs(spad, zeta)
    return RateCoeffs(
        c_s=c_s,
        c_n=c_n,
        psi1=c_s * clip_cfg.delta,
        psi2=c_s * clip_cfg.p_bias + c_n,
        zeta=zeta,
    )


def photon_rate(x_t, coeffs):
    """Incident photon rate c_s * x_t + c_n for optical power x_t >= 0."""
    x_t = np.asarray(x_t, dtype=np.float64)
    if np.any(x_t < 0):
        raise ValueError("optical power must be non-negative")
    return coeffs.c_s * x_t + coeffs.c_n


def mean_count(rate, params):
    """Mean detected count over one sample: rate*T_s*exp(-rate*tau_d/N_a).

    The exponential factor is the paralyzable dead-time loss; it peaks at
    rate = N_a/tau_d and vanishes for the ideal receiver (tau_d = 0).
    """
    rate = np.asarray(rate, dtype=np.float64)
    t = params.sample_duration
    return rate * t * np.exp(-rate * params.dead_time / params.n_pixels)


def var_count(rate, params):
    """Variance of the detected array count over one sample duration.

    Sub-Poisson for tau_d > 0: the dead time regularizes detections.
    Equals the mean (Poisson) when tau_d = 0.
    """
    rate = np.asarray(rate, dtype=np.float64)
    t, tau, n = params.sample_duration, params.dead_time, params.n_pixels
    e1 = np.exp(-rate * tau / n)
    return rate * t * e1 - (rate * rate * t * tau / n) * e1 * e1 * (2.0 - tau / t)


def var_count_per_pixel_form(rate, params):
    """Same variance via N_a * [mu_s - mu_s^2 (1 - (1 - tau_d/T_s)^2)].

    Independent regrouping of var_count, kept for consistency checks.
    """
    rate = np.asarray(rate, dtype=np.float64)
    t, tau, n = params.sample_duration, params.dead_time, params.n_pixels
    mu_s = rate * t / n * np.exp(-rate * tau / n)
    frac = 1.0 - (1.0 - tau / t) ** 2
    return n * (mu_s - mu_s * mu_s * frac)


def sample_count(rate, params, rng):
    """Draw Gaussian-approximated counts: Normal(mean_count, var_count).

    Values are continuous and may be slightly negative at tiny rates;
    they are passed through unmodified (the FFT averages them and
    clamping would bias the Bussgang gain estimate).
    """
    mu = mean_count(rate, params)
    sigma = np.sqrt(var_count(rate, params))
    return mu + sigma * rng.standard_normal(size=np.shape(mu))


def saturation_rate(params):
    """Incident photon rate N_a/tau_d at which the mean count peaks."""
    if params.dead_time == 0:
        return math.inf
    return params.n_pixels / params.dead_time


def saturation_count(params):
    """Peak mean count N_a*T_s/(e*tau_d) of the paralyzable array."""
    if params.dead_time == 0:
        return math.inf
    return params.n_pixels * params.sample_duration / (math.e * params.dead_time)
