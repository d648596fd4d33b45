"""Channel-loss models yielding the end-to-end optical loss zeta.

Deterministic VLC line-of-sight loss and FSO geometric loss with
Gamma-Gamma turbulence fading (shape parameters, PDF, sampler).  The
fading value multiplies zeta; the performance sweeps hold zeta fixed.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import erf, gammaln, kve

# Shape values above this behave as "no turbulence"; expm1 of a tiny
# argument would otherwise overflow the reciprocal.
SHAPE_CAP = 1e9


@dataclass(frozen=True)
class FsoParams:
    """Free-space link geometry and turbulence strength."""

    aperture: float            # receiver aperture diameter, m
    divergence: float          # transmitter beam divergence, rad
    distance: float            # link length, m
    cn2: float                 # refraction structure parameter, m^(-2/3)
    wavelength: float = 450e-9  # m

    def __post_init__(self):
        for name in ("aperture", "divergence", "distance", "wavelength"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.cn2 < 0:
            raise ValueError("cn2 must be non-negative")

    @property
    def wavenumber(self):
        return 2.0 * math.pi / self.wavelength

    @property
    def rytov_var(self):
        """chi^2 = 0.5 * Cn^2 * k^(7/6) * L^(11/6)."""
        return 0.5 * self.cn2 * self.wavenumber ** (7.0 / 6.0) * self.distance ** (11.0 / 6.0)

    @property
    def aperture_var(self):
        """xi^2 = k * omega^2 / (4 L)."""
        return self.wavenumber * self.aperture**2 / (4.0 * self.distance)


@dataclass(frozen=True)
class VlcParams:
    """Line-of-sight VLC geometry; intensity/gain supplied as values."""

    detector_area: float       # m^2
    distance: float            # m
    radiance_angle: float      # rad, at the source
    incidence_angle: float     # rad, at the receiver
    radiant_intensity: float   # R_o(radiance_angle), 1/sr
    concentrator_gain: float = 1.0

    def __post_init__(self):
        if self.detector_area <= 0 or self.distance <= 0:
            raise ValueError("detector_area and distance must be positive")
        if math.cos(self.incidence_angle) <= 0:
            raise ValueError("incidence_angle must be within the receiver field-of-view")


def lambertian_intensity(angle, order=1):
    """Lambertian radiant intensity (m+1)/(2*pi) * cos(angle)^m."""
    return (order + 1) / (2.0 * math.pi) * math.cos(angle) ** order


def fso_geometric_loss(p):
    """Diffraction loss of a Gaussian beam over a circular aperture.

    h_g = erf(sqrt(pi)*omega / (2*sqrt(2)*theta*L))^2, in (0, 1).
    """
    arg = math.sqrt(math.pi) * p.aperture / (2.0 * math.sqrt(2.0) * p.divergence * p.distance)
    return float(erf(arg)) ** 2


def gamma_gamma_shape(p):
    """Shape parameters (rho, beta) of the aperture-averaged fading.

    Both are 1/expm1(...) in the Rytov variance chi^2 and the aperture
    parameter xi^2; chi^2 -> 0 gives the no-turbulence limit, capped at
    SHAPE_CAP.
    """
    chi2 = p.rytov_var
    xi2 = p.aperture_var
    chi_125 = chi2 ** (6.0 / 5.0)  # chi^(12/5)
    rho_arg = 0.49 * chi2 / (1.0 + 0.18 * xi2 + 0.56 * chi_125) ** (7.0 / 6.0)
    beta_arg = (
        0.51 * chi2 * (1.0 + 0.69 * chi_125) ** (-5.0 / 6.0)
        / (1.0 + 0.9 * xi2 + 0.62 * xi2 * chi_125) ** (5.0 / 6.0)
    )
    if rho_arg < 0 or beta_arg < 0:
        raise ValueError("turbulence parameters outside the model range")
    rho = 1.0 / math.expm1(rho_arg) if rho_arg > 1.0 / SHAPE_CAP else SHAPE_CAP
    beta = 1.0 / math.expm1(beta_arg) if beta_arg > 1.0 / SHAPE_CAP else SHAPE_CAP
    return min(rho, SHAPE_CAP), min(beta, SHAPE_CAP)


def gamma_gamma_pdf(x, rho, beta):
    """Unit-mean Gamma-Gamma density.

    F(x) = 2 (rho*beta)^((rho+beta)/2) / (Gamma(rho) Gamma(beta))
           * x^((rho+beta)/2 - 1) * K_(rho-beta)(2 sqrt(rho*beta*x)).

    Evaluated in the log domain with the exponentially scaled Bessel
    function so large shapes do not overflow.  Zero for x <= 0.
    """
    x = np.asarray(x, dtype=np.float64)
    out = np.zeros_like(x)
    pos = x > 0
    if np.any(pos):
        xp = x[pos]
        z = 2.0 * np.sqrt(rho * beta * xp)
        nu = rho - beta
        scaled = kve(nu, z)  # K_nu(z) * exp(z)
        logpdf = (
            math.log(2.0)
            + 0.5 * (rho + beta) * math.log(rho * beta)
            - gammaln(rho)
            - gammaln(beta)
            + (0.5 * (rho + beta) - 1.0) * np.log(xp)
            + np.log(scaled)
            - z
        )
        out[pos] = np.exp(logpdf)
    if out.ndim == 0:
        return float(out)
    return out


def sample_gamma_gamma(rho, beta, rng, size=None):
    """Draw fading values as a product of two independent Gamma variates.

    Gamma(rho, 1/rho) * Gamma(beta, 1/beta) has the Gamma-Gamma law with
    unit mean.
    """
    return rng.gamma(rho, 1.0 / rho, size=size) * rng.gamma(beta, 1.0 / beta, size=size)


def vlc_los_loss(p):
    """Line-of-sight VLC loss (A_d/L^2) R_o(v_t) G(v_r) cos(v_r)."""
    return (
        p.detector_area / p.distance**2
        * p.radiant_intensity
        * p.concentrator_gain
        * math.cos(p.incidence_angle)
    )
