"""Command-line interface: figure-reproduction sweeps and CSV emission.

    spad-ofdm <subcommand> --config <file> [--set key=value]... --out <csv>

Subcommands map to the reproduction families: moments, gain, sdnr, ssnr,
snr, optimize-kappa, ber, se, plus `validate` which runs the
analytic-vs-quadrature-vs-Monte-Carlo cross-check suite and exits
nonzero on failure.  The SPAD_OFDM_THREADS environment variable caps the
sweep worker count.
"""

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .config import ConfigError, load_config
from .experiments import SweepSpec, optimize_kappa, sweep_all, sweep_moments
from .validate import run_validation

CSV_COLUMNS = (
    "p_rx_w",
    "kappa",
    "alpha_analytic",
    "alpha_mc",
    "var_wd_analytic",
    "var_wd_mc",
    "var_ws_analytic",
    "var_ws_mc",
    "sdnr_db",
    "ssnr_db",
    "snr_db",
    "ber_analytic",
    "ber_mc",
    "ber_stderr",
    "se_qam",
    "se_upper",
)


def _fmt(value):
    if value is None:
        return ""
    return "%.9g" % value


def _db(x):
    if x <= 0:
        return -math.inf
    return 10.0 * math.log10(x)


def emit_csv(result, path):
    """Write a SweepResult as CSV: fixed header, one row per grid point.

    Floats carry 9 significant digits; empirical columns are empty when
    the sweep ran without simulation.  Byte output is deterministic for
    a fixed input.
    """
    lines = [",".join(CSV_COLUMNS)]
    for row in result.rows:
        met = row.metrics
        mc = row.mc
        cells = [
            _fmt(row.p_rx),
            _fmt(row.kappa),
            _fmt(met.alpha),
            _fmt(mc.alpha_hat if mc else None),
            _fmt(met.var_wd),
            _fmt(mc.var_wd if mc else None),
            _fmt(met.var_ws),
            _fmt(mc.var_ws if mc else None),
            _fmt(_db(met.sdnr)),
            _fmt(_db(met.ssnr)),
            _fmt(_db(met.snr)),
            _fmt(met.ber),
            _fmt(mc.ber if mc else None),
            _fmt(mc.ber_stderr if mc else None),
            _fmt(row.se_qam),
            _fmt(met.se_upper),
        ]
        lines.append(",".join(cells))
    data = "\n".join(lines) + "\n"
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(data)


def _emit_simple_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(v) for v in row) for row in rows]
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write("\n".join(lines) + "\n")


def _sweep_spec(cfg, mod_orders=None):
    return SweepSpec(
        received_power_grid=cfg.received_power_grid(),
        kappa_grid=cfg.kappa_grid,
        mod_orders=mod_orders if mod_orders is not None else cfg.mod_orders,
        frames_per_point=cfg.frames_per_point,
        master_seed=cfg.master_seed,
        ber_target=cfg.ber_target,
        simulate=cfg.simulate,
    )


def _run_sweep(cfg, M):
    return sweep_all(
        cfg.spad_params(),
        _sweep_spec(cfg),
        M=M,
        p_max=cfg.p_max,
        p_min=cfg.p_min,
        K=cfg.fft_size,
        use_estimated_alpha=not cfg.use_analytic_alpha,
        optimize_clipping=cfg.optimize_clipping,
        kappa_opt_grid=cfg.kappa_opt_grid(),
    )


def _cmd_moments(cfg, out):
    grid = cfg.received_power_grid()
    mean, var = sweep_moments(cfg.spad_params(), grid)
    mean_id, var_id = sweep_moments(cfg.spad_params(dead_time=0.0), grid)
    rows = zip(grid, mean, var, mean_id, var_id)
    _emit_simple_csv(
        out, ("p_rx_w", "mean_count", "var_count", "mean_count_ideal", "var_count_ideal"), rows
    )
    return 0


def _cmd_sweep_family(cfg, out):
    result = _run_sweep(cfg, cfg.mod_orders[0])
    emit_csv(result, out)
    return 0


def _cmd_per_order(cfg, out):
    orders = cfg.mod_orders
    if len(orders) == 1:
        emit_csv(_run_sweep(cfg, orders[0]), out)
        return 0
    base = Path(out)
    for m in orders:
        target = base.with_name(f"{base.stem}_m{m}{base.suffix or '.csv'}")
        emit_csv(_run_sweep(cfg, m), target)
        print(f"wrote {target}")
    return 0


def _cmd_optimize_kappa(cfg, out):
    spad = cfg.spad_params()
    spad_ideal = cfg.spad_params(dead_time=0.0)
    grid = cfg.kappa_opt_grid()
    rows = []
    for p_rx in cfg.received_power_grid():
        k_spad, g_spad = optimize_kappa(spad, p_rx, grid, cfg.p_max, cfg.p_min, cfg.fft_size)
        k_id, g_id = optimize_kappa(spad_ideal, p_rx, grid, cfg.p_max, cfg.p_min, cfg.fft_size)
        rows.append((p_rx, k_spad, _db(g_spad), k_id, _db(g_id)))
    _emit_simple_csv(
        out,
        ("p_rx_w", "kappa_opt", "snr_opt_db", "kappa_opt_ideal", "snr_opt_ideal_db"),
        rows,
    )
    return 0


def _cmd_validate(cfg, _out):
    failures = 0
    for name, ok, detail in run_validation(cfg):
        print(f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}")
        failures += 0 if ok else 1
    print(f"validate: {failures} failure(s)")
    return 1 if failures else 0


_COMMANDS = {
    "moments": _cmd_moments,
    "gain": _cmd_sweep_family,
    "sdnr": _cmd_sweep_family,
    "ssnr": _cmd_sweep_family,
    "snr": _cmd_sweep_family,
    "optimize-kappa": _cmd_optimize_kappa,
    "ber": _cmd_per_order,
    "se": _cmd_per_order,
    "validate": _cmd_validate,
}


def main(argv=None):
    parser = argparse.ArgumentParser(
        prog="spad-ofdm",
        description="SPAD-array DCO-OFDM link sweeps and analytic/Monte-Carlo cross-checks",
    )
    parser.add_argument("command", choices=sorted(_COMMANDS))
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config key (repeatable)",
    )
    parser.add_argument("--out", default="sweep.csv", help="output CSV path")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    return _COMMANDS[args.command](cfg, args.out)


if __name__ == "__main__":
    sys.exit(main())
