"""Cross-validation suite behind the `validate` CLI subcommand.

Checks the closed forms against their quadrature oracles, the ideal
receiver reductions, the saturation landmarks, a Monte Carlo spot check
and the fading-model normalization.  Each check yields
(name, passed, detail); the CLI exits nonzero if any fail.
"""

import math

import numpy as np

from . import oracles
from .analytics import (
    distortion_noise_var,
    distortion_noise_var_ideal,
    gain_factor,
    gain_factor_ideal,
    mean_distorted,
    operating_point,
    second_moment_distorted,
    shot_noise_var_freq,
    shot_noise_var_ideal,
    snr,
)
from .channels import FsoParams, gamma_gamma_pdf, gamma_gamma_shape, sample_gamma_gamma
from .experiments import run_mc_point, sweep_moments
from .ofdm import ClippingConfig
from .spad import incident_rate_coeffs, saturation_count, saturation_rate


def random_operating_points(spad, n, seed, p_max=10e-3, p_lo=1e-9, p_hi=1e-3):
    """Randomized operating points spanning the validated envelope."""
    rng = np.random.default_rng(seed)
    points = []
    for _ in range(n):
        p_rx = float(np.exp(rng.uniform(np.log(p_lo), np.log(p_hi))))
        kt = float(rng.uniform(1.0, 6.0))
        kb = -float(rng.uniform(1.0, 6.0))
        clip = ClippingConfig(kappa_t=kt, kappa_b=kb, p_min=0.0, p_max=p_max)
        points.append(operating_point(spad, clip, p_rx))
    return points


def check_quadrature(spad, n_points=20, seed=2024):
    """Closed forms vs adaptive quadrature at randomized points.

    Relative tolerance 1e-8; alpha and the distortion variance compare
    against a subtraction-aware scale floor since both are intrinsically
    differences of much larger quantities.
    """
    worst = {"alpha": 0.0, "mean": 0.0, "second_moment": 0.0, "var_wd": 0.0, "var_ws": 0.0}
    for op in random_operating_points(spad, n_points, seed):
        p1t = op.coeffs.psi1 * op.spad.sample_duration
        alpha = gain_factor(op)
        val, _ = oracles.gain_factor_quad(op)
        worst["alpha"] = max(worst["alpha"], abs(alpha - val) / max(abs(val), 1e-6 * p1t))
        m1 = mean_distorted(op)
        val, _ = oracles.mean_distorted_quad(op)
        worst["mean"] = max(worst["mean"], abs(m1 - val) / abs(val))
        m2 = second_moment_distorted(op)
        val, _ = oracles.second_moment_distorted_quad(op)
        worst["second_moment"] = max(worst["second_moment"], abs(m2 - val) / abs(val))
        wd = distortion_noise_var(op)
        val, _ = oracles.distortion_noise_var_quad(op)
        scale = max(abs(val), 64 * np.finfo(float).eps * (m2 + m1 * m1 + alpha * alpha) / 1e-8)
        worst["var_wd"] = max(worst["var_wd"], abs(wd - val) / scale)
        ws = shot_noise_var_freq(op)
        val, _ = oracles.shot_noise_var_freq_quad(op)
        worst["var_ws"] = max(worst["var_ws"], abs(ws - val) / abs(val))
    ok = all(v < 1e-8 for v in worst.values())
    detail = ", ".join(f"{k}={v:.2e}" for k, v in worst.items())
    return ok, f"worst relative gaps: {detail}"


def check_ideal_reductions(spad_ideal, p_max=10e-3):
    """tau_d = 0 general formulas vs printed ideal expressions."""
    worst_alpha = worst_ws = worst_wd = 0.0
    for p_rx in np.geomspace(1e-9, 1e-3, 7):
        for kappa in np.linspace(1.0, 6.0, 6):
            op = operating_point(spad_ideal, ClippingConfig.symmetric(float(kappa), p_max), float(p_rx))
            worst_alpha = max(
                worst_alpha, abs(gain_factor(op) - gain_factor_ideal(op)) / abs(gain_factor_ideal(op))
            )
            worst_ws = max(
                worst_ws,
                abs(shot_noise_var_freq(op) - shot_noise_var_ideal(op)) / abs(shot_noise_var_ideal(op)),
            )
            scale = (
                second_moment_distorted(op) + mean_distorted(op) ** 2 + gain_factor(op) ** 2
            )
            worst_wd = max(
                worst_wd, abs(distortion_noise_var(op) - distortion_noise_var_ideal(op)) / scale
            )
    ok = worst_alpha < 1e-12 and worst_ws < 1e-12 and worst_wd < 1e-12
    return ok, f"alpha={worst_alpha:.2e} var_ws={worst_ws:.2e} var_wd(scaled)={worst_wd:.2e}"


def check_landmarks(spad):
    """Saturation rate/count and the power at the mean-count peak."""
    rate = saturation_rate(spad)
    count = saturation_count(spad)
    c_s, c_n = incident_rate_coeffs(spad, zeta=1.0)
    p_peak = (rate - c_n) / c_s
    grid = np.geomspace(1e-8, 1e-5, 400)
    mean, _ = sweep_moments(spad, grid)
    p_argmax = float(grid[int(np.argmax(mean))])
    ok = (
        abs(rate - 8.192e11) < 1e3
        and abs(count - 6027.336764) < 1.0
        and 1e-6 / 1.5 < p_peak < 1e-6 * 1.5
        and abs(math.log(p_argmax / p_peak)) < 0.05
    )
    return ok, f"rate={rate:.4g}/s count={count:.1f} p_peak={p_peak:.3e} W"


def check_monte_carlo(cfg):
    """Spot-check analytic alpha/shot-noise/BER against the full chain."""
    spad = cfg.spad_params()
    msgs = []
    ok = True
    for p_rx, m in ((100e-9, 16), (300e-9, 32)):
        op = operating_point(spad, ClippingConfig.symmetric(3.2, cfg.p_max, cfg.p_min), p_rx, cfg.fft_size)
        mc = run_mc_point(op, m, max(cfg.frames_per_point, 1000), np.random.SeedSequence(cfg.master_seed))
        alpha = gain_factor(op)
        var_ws = shot_noise_var_freq(op)
        gamma = snr(op)[2]
        ref = oracles.exact_rect_qam_ber(gamma, m)
        a_rel = abs(mc.alpha_hat - alpha) / abs(alpha)
        ws_rel = abs(mc.var_ws - var_ws) / var_ws
        band = max(3 * mc.ber_stderr, 3 * math.sqrt(ref * (1 - ref) / mc.n_bits), 0.10 * ref)
        ber_ok = abs(mc.ber - ref) <= band
        ok = ok and a_rel < 0.02 and ws_rel < 0.02 and ber_ok
        msgs.append(
            f"P={p_rx:.1e} M={m}: d_alpha={a_rel:.1e} d_ws={ws_rel:.1e} "
            f"ber_mc={mc.ber:.3e} ber_exact={ref:.3e}"
        )
    return ok, "; ".join(msgs)


def check_gamma_gamma(seed=7):
    """Fading PDF normalization, unit mean, and sampler consistency."""
    p = FsoParams(aperture=0.02, divergence=1e-3, distance=1000.0, cn2=5e-14, wavelength=1550e-9)
    rho, beta = gamma_gamma_shape(p)
    norm, mean = oracles.gamma_gamma_norm_and_mean(rho, beta, gamma_gamma_pdf)
    rng = np.random.default_rng(seed)
    sample_mean = float(np.mean(sample_gamma_gamma(rho, beta, rng, size=1_000_000)))
    ok = abs(norm - 1) < 1e-6 and abs(mean - 1) < 1e-6 and abs(sample_mean - 1) < 0.01
    return ok, f"rho={rho:.3f} beta={beta:.3f} norm={norm:.8f} mean={mean:.8f} sampler={sample_mean:.4f}"


def run_validation(cfg):
    """Yield (name, ok, detail) for every cross-check."""
    spad = cfg.spad_params()
    yield ("saturation landmarks",) + check_landmarks(spad)
    yield ("closed forms vs quadrature",) + check_quadrature(spad)
    yield ("ideal receiver reductions",) + check_ideal_reductions(cfg.spad_params(dead_time=0.0))
    yield ("analytics vs Monte Carlo",) + check_monte_carlo(cfg)
    yield ("gamma-gamma fading model",) + check_gamma_gamma()
