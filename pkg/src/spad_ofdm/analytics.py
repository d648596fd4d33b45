"""Closed-form link analytics for the clipped OFDM + dead-time receiver.

Bussgang gain, first/second moments of the nonlinearly distorted count
signal, distortion- and shot-noise variances in the frequency domain,
SNR decomposition, M-QAM BER and the spectral-efficiency upper bound.

Numerics: the exponents psi1*tau_d/N_a reach the thousands at high
received power, so products like exp(a^2/2) * Q(z + a) are always formed
jointly in the log domain.  Above a shifted-argument threshold the
edge/Q-bracket groupings also cancel catastrophically in float64; there
each expression switches to an algebraically equivalent per-edge form
built on the Mills ratio Q(w)/f(w), evaluated by continued fraction.
Validated against adaptive quadrature for psi1*tau_d/N_a up to ~2e3
(received power to 1 mW at Table-like parameters).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import log_ndtr, ndtr

from .ofdm import ClippingConfig, average_tx_power
from .spad import RateCoeffs, SpadParams, rate_coeffs, var_count

logger = logging.getLogger(__name__)

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)

# Shifted Gaussian argument above which the per-edge Mills-ratio form
# replaces the textbook edge/Q-bracket grouping.
_W_SWITCH = 8.0

# |negative variance| below this fraction of the second moment is treated
# as floating-point cancellation and clamped; anything worse is an error.
NEGATIVE_VAR_TOL = 1e-9

_clamp_warned = False


def qfunc(z):
    """Gaussian tail Q(z) = 0.5*erfc(z/sqrt(2))."""
    return ndtr(-z)


def gauss_pdf(z):
    """Standard normal density."""
    return np.exp(-0.5 * np.asarray(z) ** 2) / math.sqrt(2.0 * math.pi)


def _log_q(z):
    return log_ndtr(-z)


def _exp_q(log_pre, z):
    """exp(log_pre) * Q(z), formed in the log domain."""
    return math.exp(log_pre + _log_q(z))


def _exp_q_diff(log_pre, z_lo, z_hi):
    """exp(log_pre) * (Q(z_lo) - Q(z_hi)) for z_lo <= z_hi, stably."""
    la = log_pre + _log_q(z_lo)
    lb = log_pre + _log_q(z_hi)
    return -math.exp(la) * math.expm1(lb - la)


def _exp_gauss(log_pre, z):
    """exp(log_pre) * f(z) with f the standard normal density."""
    return math.exp(log_pre - 0.5 * z * z - _LOG_SQRT_2PI)


def _mills_tails(w):
    """Depth-1 and depth-2 tails of the Mills-ratio continued fraction.

    x1 = 1/(w + 2/(w + 3/(w + ...))), x2 = 2/(w + 3/(w + ...)), so that
    Q(w)/f(w) = 1/(w + x1), 1 - w/(w + x1) = x1/(w + x1) and
    1 - w*x1 = x2/(w + x2) are all available without subtractions.
    Accurate to machine precision for w >= ~10.
    """
    x = 0.0
    for k in range(160, 1, -1):
        x = k / (w + x)
    return 1.0 / (w + x), x


@dataclass(frozen=True)
class OperatingPoint:
    """Everything the closed forms need for one link condition."""

    spad: SpadParams
    clip: ClippingConfig
    coeffs: RateCoeffs
    K: int = 1024

    @property
    def sigma2_sym(self):
        """Data-subcarrier symbol variance K/(K-2)."""
        return self.K / (self.K - 2.0)

    @property
    def p_rx(self):
        """Average received optical power zeta * mean transmit power."""
        return self.coeffs.zeta * average_tx_power(self.clip)

    def _abt(self):
        """(psi1, psi2, a, b, T_s) with a, b the dead-time-scaled rates."""
        tau, n = self.spad.dead_time, self.spad.n_pixels
        p1, p2 = self.coeffs.psi1, self.coeffs.psi2
        return p1, p2, p1 * tau / n, p2 * tau / n, self.spad.sample_duration


def operating_point(spad, clip_cfg, p_rx, K=1024):
    """Build an OperatingPoint for a target average received power.

    The channel loss is inferred as zeta = p_rx / mean transmit power.
    """
    p_tx = average_tx_power(clip_cfg)
    zeta = p_rx / p_tx
    return OperatingPoint(spad=spad, clip=clip_cfg, coeffs=rate_coeffs(spad, zeta, clip_cfg), K=K)


def _alpha_total(p1, p2, a, b, t, kb, kt):
    """Gain factor: clip-boundary terms merged with the interior integral."""

    def piece(k):
        lam = p1 * k + p2
        v = k + a
        lg = -(a * k + b)
        if v >= _W_SWITCH:
            x1, x2 = _mills_tails(v)
            br = p1 * (x2 / (v + x2) + k * x1) - a * lam
            return t * _exp_gauss(lg, k) * br / (v + x1)
        return -a * p1 * t * _exp_gauss(lg, k) + p1 * t * (1.0 + a * a - b) * _exp_q(
            -b + 0.5 * a * a, v
        )

    if kb + a < _W_SWITCH and kt + a < _W_SWITCH:
        term1 = a * p1 * t * (_exp_gauss(-(a * kt + b), kt) - _exp_gauss(-(a * kb + b), kb))
        term2 = p1 * t * (1.0 + a * a - b) * _exp_q_diff(-b + 0.5 * a * a, kb + a, kt + a)
        return term1 + term2
    return piece(kb) - piece(kt)


def _mean_interior(p1, p2, a, b, t, kb, kt):
    """Integral of mu_a over the un-clipped region (shared with Prop. 4)."""

    def piece(k):
        lam = p1 * k + p2
        v = k + a
        lg = -(a * k + b)
        if v >= _W_SWITCH:
            x1, _ = _mills_tails(v)
            return t * _exp_gauss(lg, k) * (lam + p1 * x1) / (v + x1)
        return t * p1 * _exp_gauss(lg, k) - t * (a * p1 - p2) * _exp_q(-b + 0.5 * a * a, v)

    if kb + a < _W_SWITCH and kt + a < _W_SWITCH:
        mid1 = t * p1 * (_exp_gauss(-b - a * kb, kb) - _exp_gauss(-b - a * kt, kt))
        mid2 = -t * (a * p1 - p2) * _exp_q_diff(-b + 0.5 * a * a, kb + a, kt + a)
        return mid1 + mid2
    return piece(kb) - piece(kt)


def _second_moment_interior(p1, p2, a, b, kb, kt):
    """Integral of (psi1 x + psi2)^2 exp(-2(psi1 x + psi2) tau/N) f(x)
    over the un-clipped region (shared by Prop. 3 and Prop. 4)."""
    u = 2.0 * a
    qcoef = p1 * p1 + (u * p1 - p2) ** 2

    def piece(k):
        lam = p1 * k + p2
        w = k + u
        lg = -2.0 * (a * k + b)
        if w >= _W_SWITCH:
            x1, x2 = _mills_tails(w)
            br = lam * lam + 2.0 * p1 * lam * x1 + p1 * p1 * x2 / (w + x2)
            return _exp_gauss(lg, k) * br / (w + x1)
        c = p1 * p1 * (k - u) + 2.0 * p1 * p2
        return c * _exp_gauss(lg, k) + qcoef * _exp_q(-2.0 * b + 2.0 * a * a, w)

    if kb + u < _W_SWITCH and kt + u < _W_SWITCH:
        c_b = p1 * p1 * (kb - u) + 2.0 * p1 * p2
        c_t = p1 * p1 * (kt - u) + 2.0 * p1 * p2
        return (
            c_b * _exp_gauss(-2.0 * (a * kb + b), kb)
            - c_t * _exp_gauss(-2.0 * (a * kt + b), kt)
            + qcoef * _exp_q_diff(-2.0 * b + 2.0 * a * a, kb + u, kt + u)
        )
    return piece(kb) - piece(kt)


def gain_factor(op):
    """Bussgang gain alpha = E{x mu_a(x)} of the combined nonlinearity.

    Positive in the low-power regime, zero near receiver saturation and
    negative beyond it.
    """
    p1, p2, a, b, t = op._abt()
    return _alpha_total(p1, p2, a, b, t, op.clip.kappa_b, op.clip.kappa_t)


def gain_factor_ideal(op):
    """Ideal-receiver (tau_d = 0) gain psi1*T_s*[Q(kb) - Q(kt)]."""
    p1 = op.coeffs.psi1
    t = op.spad.sample_duration
    return p1 * t * (qfunc(op.clip.kappa_b) - qfunc(op.clip.kappa_t))


def mean_distorted(op):
    """First moment E{mu_a(x)} of the distorted count signal."""
    p1, p2, a, b, t = op._abt()
    kt, kb = op.clip.kappa_t, op.clip.kappa_b
    tau_n = op.spad.dead_time / op.spad.n_pixels
    lam_b = p1 * kb + p2
    lam_t = p1 * kt + p2
    edge = lam_b * t * _exp_q(-lam_b * tau_n, -kb) + lam_t * t * _exp_q(-lam_t * tau_n, kt)
    return edge + _mean_interior(p1, p2, a, b, t, kb, kt)


def second_moment_distorted(op):
    """Second moment E{mu_a^2(x)} of the distorted count signal."""
    p1, p2, a, b, t = op._abt()
    kt, kb = op.clip.kappa_t, op.clip.kappa_b
    tau_n = op.spad.dead_time / op.spad.n_pixels
    lam_b = p1 * kb + p2
    lam_t = p1 * kt + p2
    edge = lam_b * lam_b * _exp_q(-2.0 * lam_b * tau_n, -kb) + lam_t * lam_t * _exp_q(
        -2.0 * lam_t * tau_n, kt
    )
    return t * t * (edge + _second_moment_interior(p1, p2, a, b, kb, kt))


def distortion_noise_var(op):
    """Variance of the Bussgang distortion noise.

    sigma_wd^2 = E{mu_a^2} - E{mu_a}^2 - alpha^2; identical in time and
    frequency domain.  Tiny negatives from cancellation are clamped to
    zero, larger ones indicate an inconsistency and raise.
    """
    m2 = second_moment_distorted(op)
    m1 = mean_distorted(op)
    al = gain_factor(op)
    var = m2 - m1 * m1 - al * al
    if var < 0.0:
        if var < -NEGATIVE_VAR_TOL * m2:
            raise ArithmeticError(
                f"distortion variance {var} below -{NEGATIVE_VAR_TOL} * second moment {m2}"
            )
        global _clamp_warned
        if not _clamp_warned:
            logger.warning(
                "clamping tiny negative distortion variance %g to 0 "
                "(floating-point cancellation; further clamps logged at DEBUG)",
                var,
            )
            _clamp_warned = True
        else:
            logger.debug("clamping tiny negative distortion variance %g to 0", var)
        var = 0.0
    return var


def distortion_noise_var_ideal(op):
    """Clipping-only distortion variance of the ideal receiver (tau_d=0)."""
    p1 = op.coeffs.psi1
    t = op.spad.sample_duration
    kt, kb = op.clip.kappa_t, op.clip.kappa_b
    qb, qt = float(qfunc(kb)), float(qfunc(kt))
    fb, ft = float(gauss_pdf(kb)), float(gauss_pdf(kt))
    s = p1 * p1 * t * t
    out = s * (qb - qt + kb * fb - kt * ft)
    out += s * (kb * kb * float(qfunc(-kb)) + kt * kt * qt - (qb - qt) ** 2)
    out -= s * (fb - ft + kb * float(qfunc(-kb)) + kt * qt) ** 2
    return out


def shot_noise_var_freq(op):
    """Frequency-domain shot-noise variance = E{sigma_a^2(x)}.

    The FFT averages the signal-dependent time-domain shot noise into a
    signal-independent frequency-domain variance.
    """
    p1, p2, a, b, t = op._abt()
    kt, kb = op.clip.kappa_t, op.clip.kappa_b
    tau, n = op.spad.dead_time, op.spad.n_pixels
    lam_b = p1 * kb + p2
    lam_t = p1 * kt + p2
    edge = float(var_count(lam_b, op.spad)) * float(qfunc(-kb)) + float(
        var_count(lam_t, op.spad)
    ) * float(qfunc(kt))
    mid = _mean_interior(p1, p2, a, b, t, kb, kt)
    s2 = 0.0
    if tau > 0:
        s2 = (2.0 * t - tau) * (tau / n) * _second_moment_interior(p1, p2, a, b, kb, kt)
    return edge + mid - s2


def shot_noise_var_ideal(op):
    """Ideal-receiver shot-noise variance (Poisson counting, clipped drive)."""
    p1, p2 = op.coeffs.psi1, op.coeffs.psi2
    t = op.spad.sample_duration
    kt, kb = op.clip.kappa_t, op.clip.kappa_b
    return (
        (p1 * kb + p2) * t
        - p1 * kb * float(qfunc(kb)) * t
        + p1 * kt * float(qfunc(kt)) * t
        + p1 * t * float(gauss_pdf(kb))
        - p1 * t * float(gauss_pdf(kt))
    )


def snr(op):
    """(SDNR, SSNR, SNR): alpha^2 K/(K-2) over each noise variance.

    The total SNR is the harmonic combination of the two partial ratios.
    """
    al = gain_factor(op)
    sig = al * al * op.sigma2_sym
    var_wd = distortion_noise_var(op)
    var_ws = shot_noise_var_freq(op)
    gamma_d = math.inf if var_wd == 0.0 else sig / var_wd
    gamma_s = sig / var_ws
    gamma = sig / (var_wd + var_ws)
    return gamma_d, gamma_s, gamma


def ber_mqam(gamma, M):
    """Gray M-QAM bit error rate at symbol SNR gamma.

    Two-term Q-function expression; evaluated as written for every
    supported order, including the non-square ones.
    """
    if gamma < 0:
        raise ValueError("SNR must be non-negative")
    rm = math.sqrt(M)
    log2m = math.log2(M)
    arg = math.sqrt(3.0 * gamma / (M - 1.0))
    return (
        4.0 * (rm - 1.0) / (rm * log2m) * float(qfunc(arg))
        + 4.0 * (rm - 2.0) / (rm * log2m) * float(qfunc(3.0 * arg))
    )


def se_upper(gamma):
    """Spectral-efficiency upper bound log2(1 + gamma), bits/s/Hz."""
    return math.log2(1.0 + gamma)


@dataclass(frozen=True)
class LinkMetrics:
    """Analytic metric bundle for one operating point."""

    alpha: float
    var_wd: float
    var_ws: float
    sdnr: float
    ssnr: float
    snr: float
    ber: float | None
    se_upper: float


def link_metrics(op, M=None):
    """Evaluate all closed-form metrics at one operating point."""
    gamma_d, gamma_s, gamma = snr(op)
    al = gain_factor(op)
    return LinkMetrics(
        alpha=al,
        var_wd=distortion_noise_var(op),
        var_ws=shot_noise_var_freq(op),
        sdnr=gamma_d,
        ssnr=gamma_s,
        snr=gamma,
        ber=None if M is None else ber_mqam(gamma, M),
        se_upper=se_upper(gamma),
    )
