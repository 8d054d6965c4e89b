"""Command-line surface.

Subcommands: lineshape, signal-scan, snr, montecarlo, optimize,
sensitivity, dump-config, selftest. Every run that writes files also
writes a JSON manifest (resolved configuration, command, seed, version,
output paths, wall time); re-running with the manifest's configuration
and seed reproduces every CSV byte for byte.

Exit codes: 0 success, 1 configuration/validation error (the message
names the offending field or path), 2 internal assertion failure.

Values on the command line accept human unit suffixes (pm, nm, um, mm, m;
Hz, kHz, MHz; yN, N; mV/m, V/m; ms, us, s) and fall back to SI when bare.
The default seed is 20260801, overridable with the IONLOCKIN_SEED
environment variable or --seed.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass

from . import __version__
from ._kernels import DEFAULT_BACKEND
from .montecarlo import RngSpec, run_pairs, sweep_fig4
from .noise import (COHERENT, INCOHERENT, snr_incoherent_at,
                    snr_incoherent_limiting)
from .optimize import (COHERENT_OBJECTIVE, INCOHERENT_EXACT,
                       INCOHERENT_SMALLZC, optimize_u_tau,
                       sensitivity_summary)
from .physical import (ConfigError, DriveConfig, ExperimentConfig, OdfConfig,
                       config_from_dict, config_from_json,
                       resolved_config_dict)
from .sequence import lineshape_scan
from .signal import p_up_background, p_up_bessel, theta_max_from_config

DEFAULT_SEED = 31415926
SEED_ENV_VAR = "IONLOCKIN_SEED"

_UNITS = {
    "m": 1.0, "mm": 1e-3, "um": 1e-6, "nm": 1e-9, "pm": 1e-12,
    "hz": 1.0, "khz": 1e3, "mhz": 1e6,
    "n": 1.0, "yn": 1e-24,
    "v/m": 1.0, "mv/m": 1e-3, "nv/m": 1e-9,
    "s": 1.0, "ms": 1e-3, "us": 1e-6,
}


def parse_quantity(text: str) -> float:
    """Parse '485pm', '10.4 kHz', '41.3yN' or a bare SI number."""
    s = text.strip().lower().replace(" ", "")
    i = len(s)
    while i > 0 and not (s[i - 1].isdigit() or s[i - 1] == "."):
        i -= 1
    value, unit = s[:i], s[i:]
    if not value:
        raise ValueError(f"cannot parse quantity {text!r}")
    if unit and unit not in _UNITS:
        raise ValueError(f"unknown unit {unit!r} in {text!r}")
    return float(value) * (_UNITS[unit] if unit else 1.0)


def _fmt(x) -> str:
    """CSV cell formatting: 12 significant digits, locale independent."""
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return format(float(x), ".12g")


def write_csv(path: str, header, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


@dataclass(frozen=True)
class RunManifest:
    """Record of one run; the resolved configuration plus the seed
    reproduce every listed output byte for byte (wall time and version
    are provenance only)."""

    resolved_config: dict
    command: str
    seed: int
    tool_version: str
    output_paths: tuple
    wall_time: float
    backend: str


def _write_manifest(path: str, command: str, cfg: ExperimentConfig,
                    seed: int, outputs, t0: float, extra=None) -> None:
    manifest = RunManifest(
        resolved_config=resolved_config_dict(cfg),
        command=command,
        seed=seed,
        tool_version=__version__,
        output_paths=tuple(outputs),
        wall_time=time.monotonic() - t0,
        backend=DEFAULT_BACKEND,
    )
    doc = asdict(manifest)
    doc["output_paths"] = list(doc["output_paths"])
    if extra:
        doc.update(extra)
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _load_config(args) -> ExperimentConfig:
    if getattr(args, "config", None):
        if not os.path.exists(args.config):
            raise ConfigError("config", f"file not found: {args.config}")
        return config_from_json(args.config)
    return config_from_dict({})


def _seed_from(args) -> int:
    if getattr(args, "seed", None) is not None:
        return args.seed
    return int(os.environ.get(SEED_ENV_VAR, DEFAULT_SEED))


# ---------------------------------------------------------------------------
# subcommands

def _cmd_dump_config(args) -> int:
    cfg = _load_config(args)
    text = json.dumps(resolved_config_dict(cfg), indent=2, sort_keys=True)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0


def _with_zc(cfg: ExperimentConfig, z_c: float) -> ExperimentConfig:
    return cfg.replace(drive=DriveConfig(
        z_c=z_c, omega_drive=cfg.drive.omega_drive,
        delta_policy=cfg.drive.delta_policy,
        delta_fixed=cfg.drive.delta_fixed))


def _cmd_lineshape(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    zc_values = ([parse_quantity(z) for z in args.zc_list.split(",")]
                 if args.zc_list else [cfg.drive.z_c])
    outputs = []
    for z_c in zc_values:
        points = lineshape_scan(_with_zc(cfg, z_c), n_points=args.points)
        label = _fmt(z_c * 1e12).replace(".", "p")
        path = (args.out if args.out and len(zc_values) == 1
                else os.path.join(args.outdir, f"lineshape_zc_{label}pm.csv"))
        write_csv(path, ["mu_hz", "theta_max_rad", "p_up"],
                  [(p.mu / (2.0 * math.pi), p.theta_max_mu, p.p_up)
                   for p in points])
        outputs.append(path)
    _write_manifest(os.path.join(args.outdir, "lineshape.manifest.json"),
                    "lineshape", cfg, _seed_from(args), outputs, t0)
    return 0


def _cmd_signal_scan(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    u_max = cfg.odf.u_over_hbar
    rows = []
    for i in range(args.points):
        frac = i / (args.points - 1) if args.points > 1 else 0.0
        odf = OdfConfig(u_over_hbar=frac * u_max, delta_k=cfg.odf.delta_k,
                        dwf=cfg.odf.dwf, xi_decay=cfg.odf.xi_decay,
                        odf_phase=cfg.odf.odf_phase)
        c = cfg.replace(odf=odf)
        gt = c.gamma_tau
        rows.append((frac, p_up_bessel(theta_max_from_config(c), gt),
                     p_up_background(gt)))
    path = args.out or os.path.join(args.outdir, "signal_scan.csv")
    write_csv(path, ["odf_fraction", "p_up", "p_bck"], rows)
    _write_manifest(os.path.join(args.outdir, "signal_scan.manifest.json"),
                    "signal-scan", cfg, _seed_from(args), [path], t0)
    return 0


def _parse_zc_grid(args) -> list:
    if args.zc_list:
        return [parse_quantity(z) for z in args.zc_list.split(",")]
    lo, hi = parse_quantity(args.zc_min), parse_quantity(args.zc_max)
    n = args.points
    return [lo * (hi / lo) ** (i / (n - 1)) for i in range(n)] if n > 1 else [lo]


def _cmd_snr(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    rows = []
    for z_c in _parse_zc_grid(args):
        c = _with_zc(cfg, z_c)
        opt = optimize_u_tau(c, INCOHERENT_EXACT)
        exact = snr_incoherent_at(opt.argmax_u_tau, z_c, c.trap.n_ions,
                                  c.odf.dwf, c.odf.delta_k, c.odf.xi_decay).snr
        limiting = snr_incoherent_limiting(z_c, c.trap.n_ions, c.odf.dwf,
                                           c.odf.delta_k, c.odf.xi_decay)
        rows.append((z_c, exact, limiting))
    path = args.out or os.path.join(args.outdir, "snr.csv")
    write_csv(path, ["zc_m", "snr_exact", "snr_limiting"], rows)
    _write_manifest(os.path.join(args.outdir, "snr.manifest.json"),
                    "snr", cfg, _seed_from(args), [path], t0)
    return 0


def _cmd_montecarlo(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    seed = _seed_from(args)
    rng = RngSpec(seed=seed, stream_id=args.stream)
    path = args.out or os.path.join(args.outdir, "montecarlo.csv")
    if args.analytic_n_infinite:
        # single-point run at the configured amplitude, probabilities only
        stats = run_pairs(cfg, rng, args.pairs, workers=args.workers,
                          analytic_n_infinite=True)
        est = snr_incoherent_at(cfg.odf.u_over_hbar * cfg.tau, cfg.drive.z_c,
                                cfg.trap.n_ions, cfg.odf.dwf, cfg.odf.delta_k,
                                cfg.odf.xi_decay)
        rows = [(cfg.drive.z_c, stats.snr_empirical, stats.snr_err, est.snr)]
    else:
        zc_values = _parse_zc_grid(args)
        sweep = sweep_fig4(cfg, zc_values, rng, args.pairs,
                           workers=args.workers)
        rows = [(r.z_c, r.stats.snr_empirical, r.stats.snr_err,
                 r.snr_analytic) for r in sweep]
    write_csv(path, ["zc_m", "snr_empirical", "snr_err", "snr_analytic"], rows)
    _write_manifest(os.path.join(args.outdir, "montecarlo.manifest.json"),
                    "montecarlo", cfg, seed, [path], t0,
                    extra={"pairs": args.pairs, "stream": args.stream,
                           "workers": args.workers,
                           "analytic_n_infinite": bool(args.analytic_n_infinite)})
    return 0


def _cmd_optimize(args) -> int:
    t0 = time.monotonic()
    cfg = _load_config(args)
    if args.zc is not None:
        cfg = _with_zc(cfg, parse_quantity(args.zc))
    objective = {"incoherent": INCOHERENT_EXACT,
                 "incoherent-smallzc": INCOHERENT_SMALLZC,
                 "coherent": COHERENT_OBJECTIVE}[args.mode]
    result = optimize_u_tau(cfg, objective, tol=args.tol)
    doc = {
        "objective": objective,
        "argmax_u_tau": result.argmax_u_tau,
        "xi_u_tau": result.argmax_u_tau * cfg.odf.xi_decay,
        "snr_at_optimum": result.snr_at_optimum,
        "converged": result.converged,
        "iterations": result.iterations,
    }
    outputs = []
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(doc, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.append(args.out)
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
    if args.trace:
        write_csv(args.trace, ["u_tau", "snr"], result.scan_trace)
        outputs.append(args.trace)
    _write_manifest(os.path.join(args.outdir, "optimize.manifest.json"),
                    "optimize", cfg, _seed_from(args), outputs, t0)
    return 0


def _cmd_sensitivity(args) -> int:
    cfg = _load_config(args)
    protocol = INCOHERENT if args.mode == "incoherent" else COHERENT
    report = sensitivity_summary(cfg, protocol, measurement_rate=args.rate)
    print(json.dumps(asdict(report), indent=2, sort_keys=True))
    return 0


def _cmd_selftest(args) -> int:
    from .selftest import run_selftest
    return run_selftest(verbose=True)


# ---------------------------------------------------------------------------
# figure data

FIG2 = "fig2"
FIG3 = "fig3"
FIG4 = "fig4"

FIG2_AMPLITUDES = (0.0, 0.5e-9, 1e-9, 2e-9, 5e-9)
FIG4_GRID = (0.025e-9, 0.05e-9, 0.1e-9, 0.25e-9, 0.5e-9,
             1e-9, 2e-9, 5e-9, 10e-9)


def emit_figure_data(figure: str, cfg: ExperimentConfig, outdir: str,
                     seed: int = DEFAULT_SEED, pairs: int = 3000) -> list:
    """Write the CSV data behind one of the three theory figures.

    fig2: one lineshape CSV per drive amplitude (0 to 5 nm).
    fig3: population vs ODF fraction, with the recovered Zc^2 column.
    fig4: analytic exact and limiting SNR lines plus seeded MC points.
    Returns the list of files written.
    """
    from .signal import estimate_theta2_incoherent

    os.makedirs(outdir, exist_ok=True)
    outputs = []
    t0 = time.monotonic()
    if figure == FIG2:
        for z_c in FIG2_AMPLITUDES:
            points = lineshape_scan(_with_zc(cfg, z_c))
            label = _fmt(z_c * 1e12).replace(".", "p")
            path = os.path.join(outdir, f"fig2_zc_{label}pm.csv")
            write_csv(path, ["mu_hz", "theta_max_rad", "p_up"],
                      [(p.mu / (2.0 * math.pi), p.theta_max_mu, p.p_up)
                       for p in points])
            outputs.append(path)
    elif figure == FIG3:
        from .signal import OutOfInvertibleRange

        u_max = cfg.odf.u_over_hbar
        per_rad_max = u_max * cfg.odf.delta_k * cfg.odf.dwf * cfg.tau
        rows = []
        n = 101
        for i in range(n):
            frac = i / (n - 1)
            c = cfg.replace(odf=OdfConfig(
                u_over_hbar=frac * u_max, delta_k=cfg.odf.delta_k,
                dwf=cfg.odf.dwf, xi_decay=cfg.odf.xi_decay))
            gt = c.gamma_tau
            theta = theta_max_from_config(c)
            p_sig = p_up_bessel(theta, gt)
            p_bck = p_up_background(gt)
            # recovery column: nan at zero drive and past the contrast
            # turnover, where a single pair cannot pin the precession
            zc2 = float("nan")
            if frac > 0.0:
                try:
                    est = estimate_theta2_incoherent(p_sig, p_bck, gt)
                    per_rad = frac * per_rad_max
                    zc2 = est.theta2 / (per_rad * per_rad)
                except OutOfInvertibleRange:
                    pass
            rows.append((frac, p_sig, p_bck, zc2))
        path = os.path.join(outdir, "fig3_signal_scan.csv")
        write_csv(path, ["odf_fraction", "p_up", "p_bck", "zc2_recovered_m2"],
                  rows)
        outputs.append(path)
    elif figure == FIG4:
        rows_line = []
        for z_c in FIG4_GRID:
            c = _with_zc(cfg, z_c)
            opt = optimize_u_tau(c, INCOHERENT_EXACT)
            exact = snr_incoherent_at(opt.argmax_u_tau, z_c, c.trap.n_ions,
                                      c.odf.dwf, c.odf.delta_k,
                                      c.odf.xi_decay).snr
            limiting = snr_incoherent_limiting(z_c, c.trap.n_ions, c.odf.dwf,
                                               c.odf.delta_k, c.odf.xi_decay)
            rows_line.append((z_c, exact, limiting))
        path = os.path.join(outdir, "fig4_theory.csv")
        write_csv(path, ["zc_m", "snr_exact", "snr_limiting"], rows_line)
        outputs.append(path)
        sweep = sweep_fig4(cfg, FIG4_GRID, RngSpec(seed=seed), pairs)
        path = os.path.join(outdir, "fig4_montecarlo.csv")
        write_csv(path, ["zc_m", "snr_empirical", "snr_err", "snr_analytic"],
                  [(r.z_c, r.stats.snr_empirical, r.stats.snr_err,
                    r.snr_analytic) for r in sweep])
        outputs.append(path)
    else:
        raise ValueError(f"unknown figure {figure!r}")
    _write_manifest(os.path.join(outdir, f"{figure}.manifest.json"),
                    f"figure:{figure}", cfg, seed, outputs, t0)
    return outputs


# ---------------------------------------------------------------------------
# parser / dispatch

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ionlockin",
        description="Trapped-ion quantum lock-in amplitude sensing: "
                    "lineshapes, noise budgets, sensitivity limits.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command")

    def common(p, seeded=True):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--outdir", default=".", help="output directory")
        p.add_argument("--out", help="primary output path")
        if seeded:
            p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("lineshape", help="theta_max(mu) and populations "
                                         "around the drive frequency")
    common(p)
    p.add_argument("--points", type=int, default=801)
    p.add_argument("--zc-list", help="comma-separated amplitudes "
                                     "(e.g. 0,0.5nm,1nm,2nm,5nm)")

    p = sub.add_parser("signal-scan", help="populations vs ODF fraction")
    common(p)
    p.add_argument("--points", type=int, default=101)

    p = sub.add_parser("snr", help="analytic SNR lines over an amplitude grid")
    common(p)
    p.add_argument("--points", type=int, default=61)
    p.add_argument("--zc-min", default="0.025nm")
    p.add_argument("--zc-max", default="10nm")
    p.add_argument("--zc-list")

    p = sub.add_parser("montecarlo", help="seeded trial-by-trial simulation")
    common(p)
    p.add_argument("--pairs", type=int, default=3000)
    p.add_argument("--stream", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--points", type=int, default=9)
    p.add_argument("--zc-min", default="0.025nm")
    p.add_argument("--zc-max", default="10nm")
    p.add_argument("--zc-list",
                   default="0.025nm,0.05nm,0.1nm,0.25nm,0.5nm,1nm,2nm,5nm,10nm")
    p.add_argument("--analytic-n-infinite", action="store_true",
                   help="record probabilities instead of binomial counts")

    p = sub.add_parser("optimize", help="optimal (U/hbar)*tau operating point")
    common(p)
    p.add_argument("--mode", choices=["incoherent", "incoherent-smallzc",
                                      "coherent"], default="incoherent")
    p.add_argument("--zc", help="drive amplitude, e.g. 485pm")
    p.add_argument("--tol", type=float, default=1e-8)
    p.add_argument("--trace", help="write the scan trace CSV here")

    p = sub.add_parser("sensitivity", help="long-averaging sensitivity summary")
    common(p, seeded=False)
    p.add_argument("--mode", choices=["incoherent", "coherent"],
                   default="incoherent")
    p.add_argument("--rate", type=float, default=16.0,
                   help="paired measurements per second")

    p = sub.add_parser("dump-config", help="emit the fully resolved "
                                           "configuration as JSON")
    common(p, seeded=False)

    p = sub.add_parser("selftest", help="run the built-in oracle suite")
    common(p, seeded=False)
    return parser


_HANDLERS = {
    "lineshape": _cmd_lineshape,
    "signal-scan": _cmd_signal_scan,
    "snr": _cmd_snr,
    "montecarlo": _cmd_montecarlo,
    "optimize": _cmd_optimize,
    "sensitivity": _cmd_sensitivity,
    "dump-config": _cmd_dump_config,
    "selftest": _cmd_selftest,
}


def dispatch(argv) -> int:
    """Run one subcommand; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 for usage problems (unknown command, bad flag);
        # those are validation errors under this tool's exit-code contract
        return 1 if exc.code == 2 else int(exc.code or 0)
    if not args.command:
        parser.print_help()
        return 1
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except AssertionError as exc:  # internal invariant broken
        print(f"internal error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
