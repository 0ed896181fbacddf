"""Command-line sweep harness emitting deterministic CSV artifacts.

Subcommands: fields, spectrum, stability, validity, compare. Exit
codes: 0 success, 2 config error, 3 numerical failure, 4 success with
model-integrity warnings (outputs are still written).
"""

from __future__ import annotations

import argparse
import os
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .config import ENGINES, RunConfig, load_config
from .csvio import read_csv, write_csv
from .errors import (
    ConfigError,
    CutoffError,
    CutoffWarning,
    KerrQEDError,
    ModelBreakdownWarning,
    ResonanceError,
    SolverError,
    SteadinessWarning,
    StraddlingWarning,
    WeakProbeWarning,
)
from .fields import (
    OMEGA_C,
    critical_detuning,
    s_max_curve,
    solve_pointer_states,
    stability_diagram,
)
from .lindblad import oracle_spectrum
from .model import DriveSpec
from .reduced import operating_point, spectrum

_WARN_CATEGORIES = (ModelBreakdownWarning, CutoffWarning, SteadinessWarning,
                    StraddlingWarning, WeakProbeWarning)


def _parallel_map(fn, items, threads: int):
    """Ordered map over sweep items; threads only parallelize compute."""
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _out_path(cfg: RunConfig, out_override: str | None, name: str) -> str:
    out_dir = out_override or cfg.out_dir
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, name)


def cmd_fields(cfg: RunConfig, out_dir: str | None, threads: int) -> list[str]:
    """Pointer solutions over the pump-amplitude axis -> fields.csv."""
    def solve(eps):
        pump = DriveSpec(eps, cfg.pump.nu_d, "pump")
        return solve_pointer_states(cfg.qubit, cfg.resonator, pump,
                                    cfg.spectroscopy, cfg.branch_policy)

    sols = _parallel_map(solve, list(cfg.eps_p_mhz), threads)
    rows = []
    for eps, sol in zip(cfg.eps_p_mhz, sols):
        for i in range(cfg.qubit.levels):
            rows.append((float(eps), i, sol.alpha_p[i].real, sol.alpha_p[i].imag,
                         float(sol.n[i]), sol.branch[i], float(sol.residual[i])))
    path = _out_path(cfg, out_dir, "fields.csv")
    write_csv(path, ("eps_p_mhz", "state", "re_alpha_p", "im_alpha_p",
                     "n", "branch", "residual"), rows)
    return [path]


def _auto_probe_axis(cfg: RunConfig) -> np.ndarray:
    """Probe grid spanning the predicted peaks of every sweep column."""
    peaks, widths = [], []
    for eps in cfg.eps_p_mhz:
        pump = DriveSpec(eps, cfg.pump.nu_d, "pump")
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ModelBreakdownWarning)
            _, rates = operating_point(cfg.qubit, cfg.resonator, pump,
                                       cfg.branch_policy, cfg.dressed_dephasing,
                                       cfg.variant)
        peaks.append(rates.omega10_3)
        widths.append(max(rates.gamma2, 0.5))
    w = max(widths)
    return np.linspace(min(peaks) - 5.0 * w, max(peaks) + 5.0 * w, 41)


def _write_grid(cfg, out_dir, tag, grid) -> list[str]:
    grid_rows = []
    for k, eps in enumerate(grid.eps_p):
        for j, nu in enumerate(grid.nu_s):
            grid_rows.append((float(eps), float(nu), float(grid.p1[k, j])))
    grid_path = _out_path(cfg, out_dir, "spectrum_%s.csv" % tag)
    write_csv(grid_path, ("eps_p_mhz", "nu_s_mhz", "p1"), grid_rows)

    peak_rows = []
    for k, eps in enumerate(grid.eps_p):
        f = grid.fits[k]
        peak_rows.append((float(eps), f.center, f.hwhm, f.amplitude, f.offset,
                          bool(f.ok), grid.branch[k], bool(grid.breakdown[k])))
    peaks_path = _out_path(cfg, out_dir, "peaks_%s.csv" % tag)
    write_csv(peaks_path, ("eps_p_mhz", "peak_mhz", "hwhm_mhz", "amplitude",
                           "offset", "fit_ok", "branch", "breakdown"), peak_rows)
    return [grid_path, peaks_path]


def cmd_spectrum(cfg: RunConfig, engine: str | None, out_dir: str | None,
                 threads: int) -> list[str]:
    """Spectroscopy grid + fitted peaks -> spectrum/peaks CSVs per engine."""
    engine = engine or cfg.engine
    if engine not in ENGINES:
        raise ConfigError("engine must be one of %s" % "/".join(ENGINES))
    if cfg.spectroscopy is None:
        raise ConfigError("spectrum needs a [spectroscopy] drive")
    nu_s = cfg.nu_s_mhz if cfg.nu_s_mhz is not None else _auto_probe_axis(cfg)
    eps_s = cfg.spectroscopy.epsilon

    paths: list[str] = []
    reduced_grid = oracle_grid = None
    if engine in ("reduced", "both"):
        reduced_grid = spectrum(
            cfg.qubit, cfg.resonator, cfg.eps_p_mhz, nu_s, eps_s,
            cfg.branch_policy, cfg.dressed_dephasing, cfg.variant,
            nu_p=cfg.pump.nu_d,
        )
        paths += _write_grid(cfg, out_dir, "reduced", reduced_grid)
    if engine in ("oracle", "both"):
        def column(eps):
            pump = DriveSpec(eps, cfg.pump.nu_d, "pump")
            return oracle_spectrum(cfg.qubit, cfg.resonator, pump, eps_s, nu_s,
                                   cfg.hilbert, cfg.branch_policy,
                                   cfg.oracle_method)
        columns = _parallel_map(column, list(cfg.eps_p_mhz), threads)
        from .reduced import SpectrumGrid
        oracle_grid = SpectrumGrid(
            eps_p=np.asarray(cfg.eps_p_mhz, dtype=float),
            nu_s=np.asarray(nu_s, dtype=float),
            p1=np.vstack([c.p1 for c in columns]),
            fits=[c.fits[0] for c in columns],
            branch=tuple(c.branch[0] for c in columns),
            breakdown=np.concatenate([c.breakdown for c in columns]),
            engine="oracle",
            diagnostics={"columns": [c.diagnostics for c in columns]},
        )
        paths += _write_grid(cfg, out_dir, "oracle", oracle_grid)
    if engine == "both":
        rows = []
        for k, eps in enumerate(cfg.eps_p_mhz):
            fr, fo = reduced_grid.fits[k], oracle_grid.fits[k]
            d_peak = fr.center - fo.center
            d_hwhm = (fr.hwhm - fo.hwhm) / fo.hwhm if fo.hwhm > 0 else float("nan")
            rows.append((float(eps), fr.center, fo.center, d_peak,
                         fr.hwhm, fo.hwhm, d_hwhm, bool(fr.ok and fo.ok)))
        path = _out_path(cfg, out_dir, "spectrum_compare.csv")
        write_csv(path, ("eps_p_mhz", "peak_reduced_mhz", "peak_oracle_mhz",
                         "delta_peak_mhz", "hwhm_reduced_mhz", "hwhm_oracle_mhz",
                         "delta_hwhm_rel", "fit_ok"), rows)
        paths.append(path)
    return paths


def cmd_stability(cfg: RunConfig, out_dir: str | None, threads: int) -> list[str]:
    """Region grid, threshold curves, and the critical detuning."""
    if cfg.omega_ratio is None:
        raise ConfigError("stability needs a [sweep].omega_ratio axis")
    diagram = stability_diagram(cfg.qubit, cfg.resonator, cfg.omega_ratio,
                                cfg.eps_p_mhz)
    grid_rows = []
    for k, ratio in enumerate(diagram.omega_ratio):
        for j, eps in enumerate(diagram.eps_p):
            grid_rows.append((float(ratio), float(diagram.nu_p[k]), float(eps),
                              diagram.region[k, j]))
    grid_path = _out_path(cfg, out_dir, "stability.csv")
    write_csv(grid_path, ("omega_ratio", "nu_p_mhz", "eps_p_mhz", "region"),
              grid_rows)

    thr_rows = []
    for k, ratio in enumerate(diagram.omega_ratio):
        if np.isfinite(diagram.eps_low[k]) and np.isfinite(diagram.eps_high[k]):
            thr_rows.append((float(ratio), float(diagram.nu_p[k]),
                             float(diagram.eps_low[k]), float(diagram.eps_high[k])))
    thr_path = _out_path(cfg, out_dir, "thresholds.csv")
    write_csv(thr_path, ("omega_ratio", "nu_p_mhz", "eps_low_mhz",
                         "eps_high_mhz"), thr_rows)

    omega_crit = critical_detuning(cfg.resonator, cfg.qubit)
    crit_path = _out_path(cfg, out_dir, "critical.csv")
    write_csv(crit_path, ("omega_critical", "omega_ratio_critical"),
              [(omega_crit, omega_crit / OMEGA_C)])
    return [grid_path, thr_path, crit_path]


def cmd_validity(cfg: RunConfig, out_dir: str | None, threads: int) -> list[str]:
    """Largest dispersive pull within the linear-response budget."""
    if cfg.omega_ratio is None:
        raise ConfigError("validity needs a [sweep].omega_ratio axis")
    curve = s_max_curve(cfg.qubit, cfg.resonator, cfg.omega_ratio)
    rows = list(zip(
        (float(x) for x in curve["omega_ratio"]),
        (float(x) for x in curve["s_max_mhz"]),
        (float(x) for x in curve["eps_gain_mhz"]),
        (float(x) for x in curve["n_gain"]),
        (float(x) for x in curve["r_per_mhz"]),
        (float(x) for x in curve["s_actual_mhz"]),
    ))
    path = _out_path(cfg, out_dir, "validity.csv")
    write_csv(path, ("omega_ratio", "s_max_mhz", "eps_gain_mhz", "n_gain",
                     "r_per_mhz", "s_actual_mhz"), rows)
    return [path]


def cmd_compare(path_a: str, path_b: str, out_dir: str | None) -> list[str]:
    """Column-wise deltas between two artifacts with matching schemas."""
    header_a, cols_a = read_csv(path_a)
    header_b, cols_b = read_csv(path_b)
    if header_a != header_b:
        raise ConfigError("headers differ: %s vs %s" % (header_a, header_b))
    n_a = len(next(iter(cols_a.values()))) if cols_a else 0
    n_b = len(next(iter(cols_b.values()))) if cols_b else 0
    if n_a != n_b:
        raise ConfigError("row counts differ: %d vs %d" % (n_a, n_b))
    rows = []
    for name in header_a:
        a, b = cols_a[name], cols_b[name]
        if a and isinstance(a[0], float) and isinstance(b[0], float):
            deltas = [abs(x - y) for x, y in zip(a, b)]
            scale = [max(abs(x), abs(y)) for x, y in zip(a, b)]
            rel = max((d / s for d, s in zip(deltas, scale) if s > 0),
                      default=0.0)
            rows.append((name, "numeric", max(deltas, default=0.0), rel))
        else:
            mism = sum(1 for x, y in zip(a, b) if str(x) != str(y))
            rows.append((name, "text", float(mism), float(mism)))
    for name, kind, d_abs, d_rel in rows:
        print("%s (%s): max |delta| = %.3e, max rel = %.3e"
              % (name, kind, d_abs, d_rel))
    if out_dir is None:
        return []
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "compare.csv")
    write_csv(path, ("column", "kind", "max_abs_delta", "max_rel_delta"), rows)
    return [path]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kerrqed",
        description="Dispersive-readout sweeps of a qubit measured through "
                    "a driven Kerr resonator; emits deterministic CSVs.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="scenario file (.toml/.json)")
        p.add_argument("--out", default=None, help="output directory override")
        p.add_argument("--threads", type=int, default=None,
                       help="parallel sweep workers")

    add_common(sub.add_parser("fields", help="pointer-state solutions"))
    p_spec = sub.add_parser("spectrum", help="spectroscopy grid and peak fits")
    add_common(p_spec)
    p_spec.add_argument("--engine", choices=ENGINES, default=None,
                        help="reduced, oracle, or both")
    add_common(sub.add_parser("stability", help="stability diagram and thresholds"))
    add_common(sub.add_parser("validity", help="dispersive-pull validity curve"))
    p_cmp = sub.add_parser("compare", help="column-wise deltas of two artifacts")
    p_cmp.add_argument("csv_a")
    p_cmp.add_argument("csv_b")
    p_cmp.add_argument("--out", default=None, help="write compare.csv here")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "compare":
            cmd_compare(args.csv_a, args.csv_b, args.out)
            return 0
        cfg = load_config(args.config)
        threads = args.threads if args.threads is not None else cfg.threads
        if threads < 1:
            raise ConfigError("--threads must be at least 1")
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            if args.command == "fields":
                paths = cmd_fields(cfg, args.out, threads)
            elif args.command == "spectrum":
                paths = cmd_spectrum(cfg, args.engine, args.out, threads)
            elif args.command == "stability":
                paths = cmd_stability(cfg, args.out, threads)
            else:
                paths = cmd_validity(cfg, args.out, threads)
        flagged = [w for w in caught if issubclass(w.category, _WARN_CATEGORIES)]
        for w in flagged:
            print("warning: %s" % w.message, file=sys.stderr)
        for path in paths:
            print(path)
        return 4 if flagged else 0
    except ConfigError as exc:
        print("config error: %s" % exc, file=sys.stderr)
        return 2
    except (SolverError, CutoffError, ResonanceError, KerrQEDError,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        print("numerical failure: %s" % exc, file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
