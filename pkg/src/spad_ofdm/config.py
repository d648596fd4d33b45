"""Run configuration: flat key = value files with SI-unit suffixes.

Missing keys take the reference parameter values (450 nm source, 0.35
PDE, 8192-pixel array, 10 ns dead time, 10 nW background, 0.5 MHz dark
rate, 0.75% / 2.5% afterpulsing / crosstalk, 10 mW peak power, K = 1024,
20 ns samples, orders 16 and 32).  Flag overrides win over file values.
"""

import math
import re
from dataclasses import dataclass, field, fields

import numpy as np

from .spad import SpadParams


class ConfigError(ValueError):
    """A config key is unknown, ill-formed or violates a constraint."""


# suffix -> (dimension, multiplier)
_UNITS = {
    "s": ("time", 1.0), "ms": ("time", 1e-3), "us": ("time", 1e-6),
    "ns": ("time", 1e-9), "ps": ("time", 1e-12),
    "w": ("power", 1.0), "mw": ("power", 1e-3), "uw": ("power", 1e-6),
    "nw": ("power", 1e-9), "pw": ("power", 1e-12),
    "hz": ("rate", 1.0), "khz": ("rate", 1e3), "mhz": ("rate", 1e6), "ghz": ("rate", 1e9),
    "m": ("length", 1.0), "mm": ("length", 1e-3), "um": ("length", 1e-6), "nm": ("length", 1e-9),
    "%": ("fraction", 1e-2),
}

_NUMBER_RE = re.compile(r"^([+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)\s*([a-zA-Z%]*)$")


def _parse_scalar(key, text, dimension):
    m = _NUMBER_RE.match(text.strip())
    if not m:
        raise ConfigError(f"{key}: cannot parse number from {text!r}")
    value = float(m.group(1))
    suffix = m.group(2)
    if not suffix:
        return value
    unit = _UNITS.get(suffix.lower() if suffix != "%" else "%")
    if unit is None:
        raise ConfigError(f"{key}: unknown unit suffix {suffix!r}")
    if unit[0] != dimension:
        raise ConfigError(
            f"{key}: unit mismatch, expected a {dimension} value but got suffix {suffix!r}"
        )
    return value * unit[1]


def _parse_list(key, text, dimension):
    return tuple(_parse_scalar(key, part, dimension) for part in text.split(","))


def _parse_bool(key, text):
    t = text.strip().lower()
    if t in ("true", "yes", "on", "1"):
        return True
    if t in ("false", "no", "off", "0"):
        return False
    raise ConfigError(f"{key}: expected a boolean, got {text!r}")


@dataclass
class RunConfig:
    """All physical constants, sweep axes and run options."""

    # SPAD array and signalling (reference values)
    wavelength: float = 450e-9
    pde: float = 0.35
    n_pixels: int = 8192
    dead_time: float = 10e-9
    background_power: float = 10e-9
    dark_count_rate: float = 0.5e6
    afterpulse: float = 0.75e-2
    crosstalk: float = 2.5e-2
    p_max: float = 10e-3
    p_min: float = 0.0
    fft_size: int = 1024
    sample_duration: float = 20e-9
    # sweep axes
    p_rx_start: float = 10e-9
    p_rx_stop: float = 100e-6
    p_rx_points: int = 20
    kappa_grid: tuple = (2.0, 3.2, 4.0)
    kappa_opt_start: float = 1.0
    kappa_opt_stop: float = 8.0
    kappa_opt_step: float = 0.05
    mod_orders: tuple = (16, 32)
    # Monte Carlo / run options
    frames_per_point: int = 2000
    master_seed: int = 12345
    ber_target: float = 3e-3
    simulate: bool = True
    use_analytic_alpha: bool = False
    optimize_clipping: bool = False

    def received_power_grid(self):
        return tuple(
            float(p) for p in np.geomspace(self.p_rx_start, self.p_rx_stop, self.p_rx_points)
        )

    def kappa_opt_grid(self):
        n = int(round((self.kappa_opt_stop - self.kappa_opt_start) / self.kappa_opt_step)) + 1
        return tuple(float(k) for k in np.linspace(self.kappa_opt_start, self.kappa_opt_stop, n))

    def spad_params(self, dead_time=None):
        return SpadParams(
            n_pixels=self.n_pixels,
            dead_time=self.dead_time if dead_time is None else dead_time,
            pde=self.pde,
            dcr=self.dark_count_rate,
            afterpulse=self.afterpulse,
            crosstalk=self.crosstalk,
            background_power=self.background_power,
            wavelength=self.wavelength,
            sample_duration=self.sample_duration,
        )

    def validate(self):
        if self.sample_duration < self.dead_time:
            raise ConfigError(
                "sample_duration >= dead_time required "
                f"(sample_duration={self.sample_duration}, dead_time={self.dead_time})"
            )
        if not 0 < self.pde <= 1:
            raise ConfigError(f"pde must be in (0, 1], got {self.pde}")
        if self.n_pixels < 1:
            raise ConfigError(f"n_pixels must be >= 1, got {self.n_pixels}")
        if self.dead_time < 0:
            raise ConfigError(f"dead_time must be >= 0, got {self.dead_time}")
        if not 0 <= self.p_min < self.p_max:
            raise ConfigError(f"0 <= p_min < p_max required, got [{self.p_min}, {self.p_max}]")
        if self.fft_size < 8 or self.fft_size & (self.fft_size - 1):
            raise ConfigError(f"fft_size must be a power of two >= 8, got {self.fft_size}")
        if not 0 < self.p_rx_start < self.p_rx_stop:
            raise ConfigError(
                f"0 < p_rx_start < p_rx_stop required, got [{self.p_rx_start}, {self.p_rx_stop}]"
            )
        if self.p_rx_points < 1:
            raise ConfigError(f"p_rx_points must be >= 1, got {self.p_rx_points}")
        if any(b <= a for a, b in zip(self.kappa_grid, self.kappa_grid[1:])) or not self.kappa_grid:
            raise ConfigError(f"kappa_grid must be non-empty ascending, got {self.kappa_grid}")
        if min(self.kappa_grid) <= 0:
            raise ConfigError(f"kappa_grid values must be positive, got {self.kappa_grid}")
        if not 0 < self.kappa_opt_start < self.kappa_opt_stop:
            raise ConfigError("0 < kappa_opt_start < kappa_opt_stop required")
        if self.kappa_opt_step <= 0:
            raise ConfigError(f"kappa_opt_step must be positive, got {self.kappa_opt_step}")
        supported = (4, 8, 16, 32, 64)
        if not self.mod_orders or any(m not in supported for m in self.mod_orders):
            raise ConfigError(f"mod_orders must be drawn from {supported}, got {self.mod_orders}")
        if self.frames_per_point < 1:
            raise ConfigError(f"frames_per_point must be >= 1, got {self.frames_per_point}")
        if not 0 < self.ber_target < 0.5:
            raise ConfigError(f"ber_target must be in (0, 0.5), got {self.ber_target}")
        return self


# key -> (kind, dimension); kind in {float, int, bool, float_list, int_list}
_KEY_SPECS = {
    "wavelength": ("float", "length"),
    "pde": ("float", "fraction"),
    "n_pixels": ("int", None),
    "dead_time": ("float", "time"),
    "background_power": ("float", "power"),
    "dark_count_rate": ("float", "rate"),
    "afterpulse": ("float", "fraction"),
    "crosstalk": ("float", "fraction"),
    "p_max": ("float", "power"),
    "p_min": ("float", "power"),
    "fft_size": ("int", None),
    "sample_duration": ("float", "time"),
    "p_rx_start": ("float", "power"),
    "p_rx_stop": ("float", "power"),
    "p_rx_points": ("int", None),
    "kappa_grid": ("float_list", "fraction"),
    "kappa_opt_start": ("float", "fraction"),
    "kappa_opt_stop": ("float", "fraction"),
    "kappa_opt_step": ("float", "fraction"),
    "mod_orders": ("int_list", None),
    "frames_per_point": ("int", None),
    "master_seed": ("int", None),
    "ber_target": ("float", "fraction"),
    "simulate": ("bool", None),
    "use_analytic_alpha": ("bool", None),
    "optimize_clipping": ("bool", None),
}


def _assign(cfg_dict, key, raw):
    key = key.strip().lower()
    if key not in _KEY_SPECS:
        raise ConfigError(f"unknown config key {key!r}")
    kind, dim = _KEY_SPECS[key]
    raw = raw.strip()
    if kind == "bool":
        cfg_dict[key] = _parse_bool(key, raw)
    elif kind == "int":
        value = _parse_scalar(key, raw, dim)
        if value != int(value):
            raise ConfigError(f"{key}: expected an integer, got {raw!r}")
        cfg_dict[key] = int(value)
    elif kind == "float":
        cfg_dict[key] = _parse_scalar(key, raw, dim)
    elif kind == "float_list":
        cfg_dict[key] = _parse_list(key, raw, dim)
    elif kind == "int_list":
        values = _parse_list(key, raw, dim)
        if any(v != int(v) for v in values):
            raise ConfigError(f"{key}: expected integers, got {raw!r}")
        cfg_dict[key] = tuple(int(v) for v in values)


def parse_config(text=None, overrides=()):
    """Build a validated RunConfig from config text plus key=value overrides.

    The grammar is one `key = value` per line with `#` comments; values
    accept SI-unit suffixes (20ns, 10nW, 0.5MHz, 450nm, 2.5%) and
    comma-separated lists.
    """
    out = {}
    if text:
        for lineno, line in enumerate(text.splitlines(), start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
            key, raw = stripped.split("=", 1)
            _assign(out, key, raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} must look like key=value")
        key, raw = item.split("=", 1)
        _assign(out, key, raw)
    return RunConfig(**out).validate()


def load_config(path=None, overrides=()):
    """parse_config over an optional file path."""
    text = None
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    return parse_config(text, overrides)
