"""DCO-OFDM digital signal path.

QAM mapping with Gray labelling, Hermitian framing, unitary IFFT/FFT,
amplitude clipping, optical scaling/bias, single-tap equalization and
minimum-distance demapping.  All functions are pure; frames can be
processed independently and in parallel.
"""

import functools
from dataclasses import dataclass, field

import numpy as np

SUPPORTED_ORDERS = (4, 8, 16, 32, 64)


class SaturationError(ValueError):
    """Equalizer gain is (numerically) zero: the link is unusable."""


def _gray(n):
    return n ^ (n >> 1)


def _pam_gray_lut(n_levels):
    """Level index -> Gray label and Gray label -> level index for n-PAM."""
    idx_to_label = np.array([_gray(j) for j in range(n_levels)], dtype=np.int64)
    label_to_idx = np.empty(n_levels, dtype=np.int64)
    label_to_idx[idx_to_label] = np.arange(n_levels)
    return idx_to_label, label_to_idx


@dataclass(frozen=True)
class QamConstellation:
    """Gray-coded rectangular M-QAM with unit average symbol energy.

    Square orders (4, 16, 64) use n x n grids; M = 8 and M = 32 use
    4x2 and 8x4 rectangular grids, Gray-coded independently per axis.
    `points[label]` is the symbol whose bit pattern equals `label`.
    """

    order: int
    points: np.ndarray = field(repr=False)
    n_i: int
    n_q: int
    norm: float

    @property
    def bits_per_symbol(self):
        return int(np.log2(self.order))

    @property
    def bits_i(self):
        return int(np.log2(self.n_i))

    @property
    def bits_q(self):
        return int(np.log2(self.n_q))


@functools.lru_cache(maxsize=None)
def constellation(M):
    """Build (and cache) the Gray-coded constellation for order M."""
    if M not in SUPPORTED_ORDERS:
        raise ValueError(f"unsupported QAM order {M}; expected one of {SUPPORTED_ORDERS}")
    b = int(np.log2(M))
    b_i = (b + 1) // 2
    b_q = b // 2
    n_i, n_q = 1 << b_i, 1 << b_q
    # Average energy of the odd-integer grid {..,-3,-1,1,3,..} per axis.
    energy = ((n_i * n_i - 1) + (n_q * n_q - 1)) / 3.0
    norm = float(np.sqrt(energy))
    idx_i, _ = _pam_gray_lut(n_i)
    idx_q, _ = _pam_gray_lut(n_q)
    points = np.empty(M, dtype=np.complex128)
    for j_i in range(n_i):
        for j_q in range(n_q):
            label = (int(idx_i[j_i]) << b_q) | int(idx_q[j_q])
            level_i = 2 * j_i - (n_i - 1)
            level_q = 2 * j_q - (n_q - 1)
            points[label] = (level_i + 1j * level_q) / norm
    return QamConstellation(order=M, points=points, n_i=n_i, n_q=n_q, norm=norm)


def qam_modulate(bits, M, sigma2=1.0):
    """Map a bit stream to M-QAM symbols with average energy `sigma2`.

    Bit groups of log2(M) are read MSB-first.  `sigma2` is the target
    symbol variance (the OFDM chain uses K/(K-2) so the time samples
    come out unit-variance).
    """
    const = constellation(M)
    bits = np.asarray(bits, dtype=np.int64).reshape(-1)
    b = const.bits_per_symbol
    if bits.size % b:
        raise ValueError(f"bit count {bits.size} not divisible by log2(M)={b}")
    groups = bits.reshape(-1, b)
    weights = 1 << np.arange(b - 1, -1, -1)
    labels = groups @ weights
    return const.points[labels] * np.sqrt(sigma2)


def qam_demodulate(symbols, M, sigma2=1.0):
    """Minimum-distance Gray demapping of (possibly noisy) M-QAM symbols."""
    const = constellation(M)
    b_q = const.bits_q
    z = np.asarray(symbols) / np.sqrt(sigma2) * const.norm
    idx_i = _nearest_level_index(z.real, const.n_i)
    idx_q = _nearest_level_index(z.imag, const.n_q)
    labels = (_gray(idx_i) << b_q) | _gray(idx_q)
    b = const.bits_per_symbol
    shifts = np.arange(b - 1, -1, -1)
    bits = (labels[..., None] >> shifts) & 1
    return bits.reshape(-1).astype(np.int64)


def _nearest_level_index(values, n_levels):
    idx = np.rint((values + (n_levels - 1)) / 2.0).astype(np.int64)
    return np.clip(idx, 0, n_levels - 1)


@dataclass(frozen=True)
class ClippingConfig:
    """Normalized clipping levels and the derived optical scaling/bias.

    The clip levels act on the unit-variance time signal; `delta` and
    `p_bias` map the clipped signal onto the source power range
    [p_min, p_max] via x_t = delta * x_c + p_bias.
    """

    kappa_t: float
    kappa_b: float
    p_min: float
    p_max: float

    def __post_init__(self):
        if not self.kappa_b < self.kappa_t:
            raise ValueError(f"kappa_b={self.kappa_b} must be below kappa_t={self.kappa_t}")
        if not self.p_min < self.p_max:
            raise ValueError(f"p_min={self.p_min} must be below p_max={self.p_max}")
        if self.p_min < 0:
            raise ValueError(f"p_min={self.p_min} must be non-negative")

    @property
    def delta(self):
        return (self.p_max - self.p_min) / (self.kappa_t - self.kappa_b)

    @property
    def p_bias(self):
        return (self.p_min * self.kappa_t - self.p_max * self.kappa_b) / (self.kappa_t - self.kappa_b)

    @classmethod
    def symmetric(cls, kappa, p_max, p_min=0.0):
        """Symmetric clipping kappa_t = -kappa_b = kappa."""
        return cls(kappa_t=kappa, kappa_b=-kappa, p_min=p_min, p_max=p_max)


@dataclass
class OfdmFrame:
    """One OFDM symbol in both domains.

    X is the length-K spectrum (zeros at bins 0 and K/2, Hermitian upper
    half); x, x_c and x_t are filled in as the frame moves down the
    transmit chain.
    """

    K: int
    X: np.ndarray
    x: np.ndarray | None = None
    x_c: np.ndarray | None = None
    x_t: np.ndarray | None = None

    def validate(self, tol=1e-9):
        K = self.K
        if self.X.shape != (K,):
            raise ValueError(f"spectrum length {self.X.shape} != FFT size {K}")
        if abs(self.X[0]) > tol or abs(self.X[K // 2]) > tol:
            raise ValueError("bins 0 and K/2 must be empty")
        upper = self.X[1:K // 2]
        mirror = np.conj(self.X[:K // 2:-1])
        if np.max(np.abs(upper - mirror)) > tol * max(1.0, np.max(np.abs(upper))):
            raise ValueError("spectrum is not Hermitian-symmetric")
        if self.x_t is not None and np.min(self.x_t) < 0:
            raise ValueError("optical samples must be non-negative")


def build_frame(symbols, K):
    """Assemble the Hermitian DCO-OFDM spectrum from K/2-1 data symbols."""
    symbols = np.asarray(symbols, dtype=np.complex128)
    if K < 8 or K & (K - 1):
        raise ValueError(f"FFT size {K} must be a power of two")
    if symbols.shape[-1] != K // 2 - 1:
        raise ValueError(f"expected {K // 2 - 1} symbols for K={K}, got {symbols.shape[-1]}")
    shape = symbols.shape[:-1] + (K,)
    X = np.zeros(shape, dtype=np.complex128)
    X[..., 1:K // 2] = symbols
    X[..., K // 2 + 1:] = np.conj(symbols[..., ::-1])
    return X

def inverse_transform(X, tol=1e-9):
    """Unitary IFFT x[n] = (1/sqrt(K)) sum_k X[k] exp(+2*pi*j*n*k/K).

    Requires a Hermitian spectrum; returns the real time samples.
    """
    X = np.asarray(X, dtype=np.complex128)
    K = X.shape[-1]
    x = np.fft.ifft(X, axis=-1) * np.sqrt(K)
    scale = max(1.0, float(np.max(np.abs(X))))
    worst = float(np.max(np.abs(x.imag)))
    if worst > tol * scale:
        raise ValueError(f"spectrum is not Hermitian: residual imag {worst:.3e}")
    return x.real


def forward_transform(y):
    """Unitary FFT Y[k] = (1/sqrt(K)) sum_n y[n] exp(-2*pi*j*n*k/K)."""
    y = np.asarray(y, dtype=np.float64)
    K = y.shape[-1]
    return np.fft.fft(y, axis=-1) / np.sqrt(K)


def clip(x, cfg):
    """Hard-limit the time samples to [kappa_b, kappa_t]."""
    return np.clip(x, cfg.kappa_b, cfg.kappa_t)


def scale_and_bias(x_c, cfg):
    """Map clipped samples to optical power: x_t = delta * x_c + p_bias."""
    return cfg.delta * x_c + cfg.p_bias


def average_tx_power(cfg):
    """Mean emitted optical power for a unit-variance Gaussian input.

    delta * [f(kb) - f(kt) + kt*Q(kt) + kb*Q(-kb)] + p_bias, with f the
    standard normal pdf; reduces to p_bias for symmetric clipping.
    """
    from scipy.special import ndtr

    kt, kb = cfg.kappa_t, cfg.kappa_b
    f = lambda u: np.exp(-0.5 * u * u) / np.sqrt(2 * np.pi)
    q = lambda u: ndtr(-u)
    return cfg.delta * (f(kb) - f(kt) + kt * q(kt) + kb * q(-kb)) + cfg.p_bias


def estimate_bussgang_gain(x, y):
    """Least-squares linear gain sum(x*y) / sum(x*x).

    With y the detected counts this is the empirical Bussgang gain; the
    residual y - alpha*x is uncorrelated with x by construction.
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if x.shape != y.shape:
        raise ValueError(f"length mismatch {x.shape} vs {y.shape}")
    denom = float(np.dot(x, x))
    if denom == 0.0:
        raise ValueError("cannot estimate gain from an all-zero input")
    return float(np.dot(x, y)) / denom


def equalize(Y, alpha, eps=0.0):
    """Single-tap equalization of the data subcarriers 1..K/2-1.

    Divides by the (possibly negative) gain; the DC bin carries the mean
    detected count, not data, and is discarded.  Raises SaturationError
    when |alpha| <= eps (or alpha == 0).
    """
    if alpha == 0.0 or abs(alpha) < eps:
        raise SaturationError(f"gain {alpha} below epsilon {eps}: saturation point, link unusable")
    Y = np.asarray(Y)
    K = Y.shape[-1]
    return Y[..., 1:K // 2] / alpha
