"""Independent numerical oracles for the closed-form analytics.

Each oracle integrates the defining expectation of a metric directly
(adaptive quadrature against the standard normal input density), using
only the primitive chain model (clip -> rate -> count moments) and never
the closed forms themselves.  Used by the test suite and the `validate`
CLI subcommand; never on the hot path.
"""

import math

import numpy as np
from scipy.integrate import quad

from .spad import var_count

_SQRT_2PI = math.sqrt(2.0 * math.pi)


def _norm_pdf(x):
    return np.exp(-0.5 * x * x) / _SQRT_2PI


def _mu_of_x(x, op):
    """Distorted mean count as a function of the unclipped amplitude."""
    p1, p2 = op.coeffs.psi1, op.coeffs.psi2
    xc = np.clip(x, op.clip.kappa_b, op.clip.kappa_t)
    lam = p1 * xc + p2
    t, tau, n = op.spad.sample_duration, op.spad.dead_time, op.spad.n_pixels
    return lam * t * np.exp(-lam * tau / n)


def _var_of_x(x, op):
    """Count variance as a function of the unclipped amplitude."""
    p1, p2 = op.coeffs.psi1, op.coeffs.psi2
    xc = np.clip(x, op.clip.kappa_b, op.clip.kappa_t)
    return var_count(p1 * xc + p2, op.spad)


def _interior_points(op):
    """Breakpoints resolving the exp(-psi1*tau_d*x/N_a) boundary layer.

    At high received power the integrand collapses into a layer of width
    N_a/(psi1*tau_d) at the lower clip level; plain adaptive quadrature
    can step right over it.
    """
    kb, kt = op.clip.kappa_b, op.clip.kappa_t
    a = op.coeffs.psi1 * op.spad.dead_time / op.spad.n_pixels
    pts = []
    if a > 1.0:
        for m in (0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0):
            x = kb + m / a
            if kb < x < kt:
                pts.append(x)
    mid = 0.5 * (kb + kt)
    if kb < mid < kt:
        pts.append(mid)
    return sorted(set(pts))


def _expectation(fn, op, epsabs_scale):
    """Integrate fn(x) * f(x) over the real line, split at the clip levels."""
    kb, kt = op.clip.kappa_b, op.clip.kappa_t

    def integrand(x):
        return fn(x) * _norm_pdf(x)

    opts = dict(epsabs=1e-13 * epsabs_scale, epsrel=1e-13, limit=800)
    total, err = 0.0, 0.0
    v, e = quad(integrand, -np.inf, kb, **opts)
    total += v
    err += e
    v, e = quad(integrand, kb, kt, points=_interior_points(op), **opts)
    total += v
    err += e
    v, e = quad(integrand, kt, np.inf, **opts)
    total += v
    err += e
    return total, err


def _grid_scale(fn, op):
    """Rough magnitude of fn over the relevant amplitude range."""
    kb, kt = op.clip.kappa_b, op.clip.kappa_t
    grid = np.linspace(kb - 2.0, kt + 2.0, 513)
    return float(np.max(np.abs(fn(grid)))) or 1.0


def gain_factor_quad(op):
    """alpha = integral of x * mu_a(x) * f(x); returns (value, abserr)."""
    fn = lambda x: x * _mu_of_x(x, op)
    return _expectation(fn, op, _grid_scale(fn, op))


def mean_distorted_quad(op):
    """E{mu_a(x)} by quadrature; returns (value, abserr)."""
    fn = lambda x: _mu_of_x(x, op)
    return _expectation(fn, op, _grid_scale(fn, op))


def second_moment_distorted_quad(op):
    """E{mu_a^2(x)} by quadrature; returns (value, abserr)."""
    fn = lambda x: _mu_of_x(x, op) ** 2
    return _expectation(fn, op, _grid_scale(fn, op))


def distortion_noise_var_quad(op):
    """Var(mu_a(x) - alpha x) via a squared (cancellation-free) integrand.

    Uses quadrature values of alpha and E{mu_a} so the oracle stays
    independent of the closed forms.
    """
    alpha, e1 = gain_factor_quad(op)
    m1, e2 = mean_distorted_quad(op)
    fn = lambda x: (_mu_of_x(x, op) - m1 - alpha * x) ** 2
    v, e3 = _expectation(fn, op, _grid_scale(fn, op))
    return v, e1 + e2 + e3


def shot_noise_var_freq_quad(op):
    """E{sigma_a^2(x)} by quadrature; returns (value, abserr)."""
    fn = lambda x: _var_of_x(x, op)
    return _expectation(fn, op, _grid_scale(fn, op))


def average_tx_power_quad(cfg, n=10_000_000, rng=None):
    """Monte Carlo oracle for the mean transmit power."""
    if rng is None:
        rng = np.random.default_rng(0)
    x = rng.standard_normal(n)
    xt = cfg.delta * np.clip(x, cfg.kappa_b, cfg.kappa_t) + cfg.p_bias
    return float(np.mean(xt))


def gamma_gamma_norm_and_mean(rho, beta, pdf):
    """(integral of pdf, integral of x*pdf) over (0, inf) by quadrature."""
    pieces = [0.0, 0.05, 0.3, 1.0, 3.0, 10.0, 40.0, np.inf]
    norm = mean = 0.0
    for lo, hi in zip(pieces[:-1], pieces[1:]):
        v, _ = quad(lambda x: pdf(x, rho, beta), lo, hi, epsabs=1e-11, epsrel=1e-11, limit=400)
        norm += v
        v, _ = quad(lambda x: x * pdf(x, rho, beta), lo, hi, epsabs=1e-11, epsrel=1e-11, limit=400)
        mean += v
    return norm, mean


def gamma_gamma_cdf_grid(rho, beta, pdf, x_max=60.0, n=300_001):
    """Dense-grid CDF of the Gamma-Gamma law for KS-style comparisons.

    Returns (x_grid, cdf) with the CDF accurate to ~1e-7 for moderate
    shape values; the grid extends far enough that the tail mass beyond
    x_max is negligible.
    """
    x = np.linspace(0.0, x_max, n)
    y = pdf(x, rho, beta)
    cdf = np.concatenate([[0.0], np.cumsum((y[1:] + y[:-1]) * 0.5 * np.diff(x))])
    return x, cdf


def ks_distance(samples, x_grid, cdf):
    """Kolmogorov-Smirnov distance between samples and a gridded CDF."""
    s = np.sort(np.asarray(samples))
    f = np.interp(s, x_grid, cdf, left=0.0, right=1.0)
    n = s.size
    i = np.arange(1, n + 1)
    return float(max(np.max(np.abs(f - i / n)), np.max(np.abs(f - (i - 1) / n))))


def exact_rect_qam_ber(gamma, M):
    """Exact Gray rectangular/square M-QAM BER in complex AWGN.

    Enumerates every per-axis PAM decision outcome with its Gaussian
    probability and Gray Hamming weight; this is the true BER of the
    simulated demapper under ideal Gaussian white noise at symbol SNR
    gamma, including the terms the two-term closed form drops.
    """
    from scipy.special import ndtr

    from .ofdm import constellation

    const = constellation(M)
    sigma1 = math.sqrt(1.0 / (2.0 * gamma))
    total_bits = 0
    err = 0.0
    for n, b in ((const.n_i, const.bits_i), (const.n_q, const.bits_q)):
        if b == 0:
            continue
        levels = (2 * np.arange(n) - (n - 1)) / const.norm
        thr = (levels[:-1] + levels[1:]) / 2
        upper = np.concatenate([thr, [np.inf]])
        lower = np.concatenate([[-np.inf], thr])
        gray = np.arange(n) ^ (np.arange(n) >> 1)
        pb = 0.0
        for j in range(n):
            probs = ndtr((upper - levels[j]) / sigma1) - ndtr((lower - levels[j]) / sigma1)
            hams = np.array([bin(gray[j] ^ gray[k]).count("1") for k in range(n)])
            pb += float(np.dot(probs, hams)) / n
        err += pb
        total_bits += b
    return err / total_bits


def bessel_k_integral(nu, z):
    """Integral representation of K_nu(z) for cross-checking the library."""
    v, _ = quad(
        lambda t: math.exp(-z * math.cosh(t)) * math.cosh(nu * t),
        0.0,
        60.0,
        epsabs=1e-14,
        epsrel=1e-13,
        limit=400,
    )
    return v
