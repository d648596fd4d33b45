"""Monte Carlo transmission chain and reproduction sweeps.

Runs the full DCO-OFDM + SPAD chain frame-vectorized, estimates the
empirical Bussgang gain, the split noise variances and the BER, and
orchestrates the analytic/empirical sweeps over received power, clipping
level and modulation order.  Sweep points are independent work items
with RNG streams keyed by (master_seed, point index), so serial and
parallel execution give bit-identical results.
"""

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analytics import LinkMetrics, ber_mqam, gain_factor, link_metrics, operating_point
from .ofdm import ClippingConfig, constellation, qam_demodulate
from .spad import incident_rate_coeffs, mean_count, var_count

# |alpha| below this multiple of psi1*T_s marks the point saturated:
# equalization would amplify noise without bound near the zero crossing.
SATURATION_EPS_FACTOR = 1e-6


@dataclass(frozen=True)
class SweepSpec:
    """Axes and bookkeeping of one reproduction sweep."""

    received_power_grid: tuple    # W, ascending
    kappa_grid: tuple             # symmetric clipping levels, ascending
    mod_orders: tuple = (4, 8, 16, 32, 64)
    frames_per_point: int = 2000
    master_seed: int = 12345
    ber_target: float = 3e-3
    simulate: bool = True

    def __post_init__(self):
        for name in ("received_power_grid", "kappa_grid"):
            grid = getattr(self, name)
            if len(grid) == 0:
                raise ValueError(f"{name} must be non-empty")
            if any(b <= a for a, b in zip(grid, grid[1:])):
                raise ValueError(f"{name} must be strictly ascending")
        if len(self.mod_orders) == 0:
            raise ValueError("mod_orders must be non-empty")
        if self.frames_per_point < 1:
            raise ValueError("frames_per_point must be >= 1")


@dataclass(frozen=True)
class McPointResult:
    """Empirical metrics of one Monte Carlo grid point."""

    alpha_hat: float
    var_wd: float
    var_ws: float
    ber: float
    ber_stderr: float
    n_bits: int
    n_errors: int
    saturated: bool


@dataclass
class ChainRun:
    """Raw arrays of one simulated batch of OFDM frames."""

    x: np.ndarray          # (frames, K) unit-variance time samples
    mu: np.ndarray         # (frames, K) distortion-only counts
    y: np.ndarray          # (frames, K) counts with shot noise
    bits: np.ndarray       # (frames, n_bits_per_frame) transmitted bits
    symbols: np.ndarray    # (frames, K/2-1) scaled data symbols
    y_data: np.ndarray     # (frames, K/2-1) FFT of y on data bins
    mu_data: np.ndarray    # (frames, K/2-1) FFT of mu on data bins
    alpha_hat: float       # time-domain least-squares Bussgang gain


def simulate_chain(op, M, n_frames, rng, shot_noise=True):
    """Run the transmit + SPAD chain for a batch of random frames.

    The distortion-only output mu (sample_count replaced by mean_count)
    is kept alongside y so the noise decomposition is measured on the
    same draw.
    """
    K = op.K
    n_data = K // 2 - 1
    const = constellation(M)
    bps = const.bits_per_symbol
    bits = rng.integers(0, 2, size=(n_frames, n_data * bps), dtype=np.int64)
    weights = 1 << np.arange(bps - 1, -1, -1)
    labels = bits.reshape(n_frames, n_data, bps) @ weights
    symbols = const.points[labels] * math.sqrt(op.sigma2_sym)

    half = np.zeros((n_frames, K // 2 + 1), dtype=np.complex128)
    half[:, 1:K // 2] = symbols
    x = np.fft.irfft(half, n=K, axis=1) * math.sqrt(K)

    x_t = op.clip.delta * np.clip(x, op.clip.kappa_b, op.clip.kappa_t) + op.clip.p_bias
    lam = op.coeffs.c_s * x_t + op.coeffs.c_n
    mu = mean_count(lam, op.spad)
    if shot_noise:
        y = mu + np.sqrt(var_count(lam, op.spad)) * rng.standard_normal(size=mu.shape)
    else:
        y = mu

    y_freq = np.fft.rfft(y, axis=1) / math.sqrt(K)
    mu_freq = np.fft.rfft(mu, axis=1) / math.sqrt(K) if shot_noise else y_freq
    alpha_hat = float(np.dot(x.ravel(), y.ravel()) / np.dot(x.ravel(), x.ravel()))
    return ChainRun(
        x=x,
        mu=mu,
        y=y,
        bits=bits,
        symbols=symbols,
        y_data=y_freq[:, 1:K // 2],
        mu_data=mu_freq[:, 1:K // 2],
        alpha_hat=alpha_hat,
    )


def run_mc_point(op, M, n_frames, seed, use_estimated_alpha=True):
    """Full-chain Monte Carlo estimate of one grid point.

    Returns the empirical Bussgang gain, the distortion/shot noise split
    (distortion from the shot-free output, shot from the exact residual
    y - mu on the same draw) and the BER with its binomial stderr.
    Near the gain zero crossing the point is flagged saturated and the
    BER reported as 0.5.
    """
    rng = np.random.default_rng(seed)
    run = simulate_chain(op, M, n_frames, rng, shot_noise=True)
    noise_d = run.mu_data - run.alpha_hat * run.symbols
    var_wd = float(np.mean(noise_d.real**2 + noise_d.imag**2))
    noise_s = run.y_data - run.mu_data
    var_ws = float(np.mean(noise_s.real**2 + noise_s.imag**2))

    alpha_eq = run.alpha_hat if use_estimated_alpha else gain_factor(op)
    eps = SATURATION_EPS_FACTOR * op.coeffs.psi1 * op.spad.sample_duration
    n_bits = run.bits.size
    if abs(alpha_eq) < eps:
        return McPointResult(
            alpha_hat=run.alpha_hat,
            var_wd=var_wd,
            var_ws=var_ws,
            ber=0.5,
            ber_stderr=float("nan"),
            n_bits=n_bits,
            n_errors=-1,
            saturated=True,
        )
    est = run.y_data / alpha_eq
    bits_hat = qam_demodulate(est.ravel(), M, sigma2=op.sigma2_sym)
    n_errors = int(np.count_nonzero(bits_hat != run.bits.ravel()))
    ber = n_errors / n_bits
    return McPointResult(
        alpha_hat=run.alpha_hat,
        var_wd=var_wd,
        var_ws=var_ws,
        ber=ber,
        ber_stderr=math.sqrt(ber * (1.0 - ber) / n_bits),
        n_bits=n_bits,
        n_errors=n_errors,
        saturated=False,
    )


def sweep_moments(spad, p_rx_grid):
    """Detected-count mean and variance vs received optical power.

    Static transfer curves of the array (no OFDM statistics involved):
    the incident rate is the affine map of the received power itself.
    """
    c_s, c_n = incident_rate_coeffs(spad, zeta=1.0)
    lam = c_s * np.asarray(p_rx_grid, dtype=np.float64) + c_n
    return mean_count(lam, spad), var_count(lam, spad)


def optimize_kappa(spad, p_rx, kappa_grid, p_max=10e-3, p_min=0.0, K=1024):
    """Exhaustive search of the symmetric clipping level maximizing SNR.

    Ties break toward the smaller kappa (grid is ascending and argmax
    takes the first maximum).
    """
    kappa_grid = np.asarray(kappa_grid, dtype=np.float64)
    if kappa_grid.size == 0:
        raise ValueError("kappa_grid must be non-empty")
    from .analytics import snr

    gammas = np.array(
        [
            snr(operating_point(spad, ClippingConfig.symmetric(float(k), p_max, p_min), p_rx, K))[2]
            for k in kappa_grid
        ]
    )
    best = int(np.argmax(gammas))
    return float(kappa_grid[best]), float(gammas[best])


def max_se_for_snr(gamma, mod_orders, ber_target):
    """Largest log2(M) whose analytic BER meets the target, else 0."""
    best = 0.0
    for m in mod_orders:
        if ber_mqam(gamma, m) <= ber_target:
            best = max(best, math.log2(m))
    return best


def adaptive_se(spad, p_rx, mod_orders, ber_target, kappa=None, kappa_grid=None,
                p_max=10e-3, p_min=0.0, K=1024):
    """Achievable spectral efficiency at one received power.

    Either a fixed symmetric clipping level `kappa` or a search grid
    `kappa_grid` (clipping optimized per point) must be given.
    """
    from .analytics import snr

    if kappa_grid is not None:
        kappa, _ = optimize_kappa(spad, p_rx, kappa_grid, p_max, p_min, K)
    elif kappa is None:
        raise ValueError("either kappa or kappa_grid is required")
    op = operating_point(spad, ClippingConfig.symmetric(kappa, p_max, p_min), p_rx, K)
    return max_se_for_snr(snr(op)[2], mod_orders, ber_target)


@dataclass(frozen=True)
class SweepRow:
    """One (power, clipping, order) grid point of a sweep."""

    p_rx: float
    kappa: float
    m: int
    metrics: LinkMetrics
    se_qam: float
    mc: McPointResult | None


@dataclass
class SweepResult:
    """All rows of one sweep, in deterministic grid order."""

    spec: SweepSpec
    m: int
    rows: list


def _worker_count():
    env = os.environ.get("SPAD_OFDM_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def sweep_all(spad, spec, M=None, p_max=10e-3, p_min=0.0, K=1024,
              use_estimated_alpha=True, optimize_clipping=False,
              kappa_opt_grid=None, threads=None):
    """Evaluate a full sweep: analytic metrics plus optional Monte Carlo.

    Rows cover received_power_grid x kappa_grid for modulation order M
    (default: first entry of spec.mod_orders); with `optimize_clipping`
    the kappa axis collapses to the per-power optimum over
    `kappa_opt_grid`.  Deterministic for a fixed spec and arguments.
    """
    if M is None:
        M = spec.mod_orders[0]
    points = []
    for p_rx in spec.received_power_grid:
        if optimize_clipping:
            grid = kappa_opt_grid if kappa_opt_grid is not None else np.arange(1.0, 8.01, 0.05)
            kappa, _ = optimize_kappa(spad, p_rx, grid, p_max, p_min, K)
            points.append((p_rx, kappa))
        else:
            points.extend((p_rx, kappa) for kappa in spec.kappa_grid)

    def eval_point(item):
        idx, (p_rx, kappa) = item
        op = operating_point(spad, ClippingConfig.symmetric(kappa, p_max, p_min), p_rx, K)
        metrics = link_metrics(op, M)
        se_qam = max_se_for_snr(metrics.snr, spec.mod_orders, spec.ber_target)
        mc = None
        if spec.simulate:
            seed = np.random.SeedSequence(entropy=spec.master_seed, spawn_key=(idx,))
            mc = run_mc_point(op, M, spec.frames_per_point, seed, use_estimated_alpha)
        return SweepRow(p_rx=p_rx, kappa=kappa, m=M, metrics=metrics, se_qam=se_qam, mc=mc)

    items = list(enumerate(points))
    workers = threads if threads is not None else _worker_count()
    if spec.simulate and workers > 1 and len(items) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(eval_point, items))
    else:
        rows = [eval_point(it) for it in items]
    return SweepResult(spec=spec, m=M, rows=rows)
