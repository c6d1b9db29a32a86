"""
Command-line front end.

    hybridsim run <config> [-o dir] [--jobs n]
    hybridsim compare <dirA> <dirB> --tol x
    hybridsim list

``<config>`` is a TOML path or the name of a bundled config. Data files are
plain text: '#' comment header, one row of column names with units, then one
row per grid point in 17-digit scientific notation.
"""

from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import os
import sys
import time
from importlib import resources

import numpy as np

from . import __version__
from .config import EXPERIMENTS, ExperimentConfig, load
from .errors import ConfigError, HybridSimError, InvalidParameterError, SchemaError
from .flux import (
    FluxSchedule,
    landau_zener_probability,
    resonant_swap_time,
    simulate_sweep,
)
from .oracle import (
    chevron_scan,
    coherence_protocol,
    ramsey_protocol,
    storage_retrieval_protocol,
)
from .readout import (
    DEFAULT_THRESHOLDS,
    DEFAULT_WIDTHS,
    SCurveModel,
    calibrate,
    effective_temperature,
    estimate_thermal_population,
    scurve,
)
from .spectral import FrequencyGrid, rabi_protocol, ramsey_spectral
from .spectroscopy import (
    avoided_crossings,
    fft_spectrum,
    fit_curve,
    qubit_bus_anticrossing,
    storage_retrieval_times,
    transmission,
    vacuum_rabi_splitting,
)
from .units import mhz, to_ghz, to_mhz, to_ns

NUMBER = "%.16e"


# ---------------------------------------------------------------- output

def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return NUMBER % v
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    return str(v)


def write_table(path, columns, data, grid, meta=()):
    """Write a column table. ``grid`` names the independent-variable columns."""
    data = np.column_stack([np.asarray(c, dtype=float).ravel() for c in data])
    lines = [f"# hybridsim {__version__}"]
    lines += [f"# {k}: {_fmt(v)}" for k, v in meta]
    lines.append("# grid: " + " ".join(grid))
    lines.append(" ".join(columns))
    for row in data:
        lines.append(" ".join(NUMBER % x for x in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def read_table(path):
    """Inverse of write_table: (columns, grid columns, data array, meta dict)."""
    meta, grid, columns, rows = {}, [], None, []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("grid:"):
                    grid = body[5:].split()
                elif ":" in body:
                    k, v = body.split(":", 1)
                    meta[k.strip()] = v.strip()
                continue
            if columns is None:
                columns = line.split()
            elif line:
                rows.append([float(x) for x in line.split()])
    if columns is None:
        raise SchemaError(f"{path}: no column header")
    data = np.array(rows, dtype=float).reshape(-1, len(columns))
    return columns, grid, data, meta


# ---------------------------------------------------------------- experiments

def _spectral_grid(cfg, center):
    return FrequencyGrid(center=center, span=cfg.numerics["span"], spacing=cfg.numerics["spacing"])


def _curve_times(tau, p):
    try:
        ts, tr, pr = storage_retrieval_times(tau, p)
        return [("tau_s_ns", to_ns(ts)), ("tau_r_ns", to_ns(tr)), ("p_at_tau_r", pr / p[0] if p[0] else pr)]
    except InvalidParameterError:
        return [("tau_s_ns", "n/a"), ("tau_r_ns", "n/a")]


def _run_rabi(cfg, out, jobs):
    p = cfg.params
    dev = cfg.device
    group = dev.group(p["group"])
    tau = p["tau"]
    method = cfg.numerics["method"]
    cols, meta = {}, [("group", group.label), ("method", method)]
    if method in ("spectral", "both"):
        cols["spectral"] = rabi_protocol(group, dev.bus_at(group.center), tau, _spectral_grid(cfg, group.center))
    if method in ("oracle", "both"):
        cols["oracle"] = storage_retrieval_protocol(dev, group.label, tau, cfg.numerics["n_modes"],
                                                    dt=cfg.numerics["dt"])
    main = cols.get("spectral", cols.get("oracle"))
    meta += _curve_times(tau, main)
    if method == "both":
        diff = np.abs(cols["spectral"] - cols["oracle"])
        meta.append(("max_abs_diff", float(diff.max())))
        write_table(os.path.join(out, "rabi.dat"), ["tau_ns", "p_e_spectral", "p_e_oracle", "abs_diff"],
                    [to_ns(tau), cols["spectral"], cols["oracle"], diff], ["tau_ns"], meta)
    else:
        write_table(os.path.join(out, "rabi.dat"), ["tau_ns", "p_e"], [to_ns(tau), main], ["tau_ns"], meta)
    return ["rabi.dat"]


def _run_chevron(cfg, out, jobs):
    p = cfg.params
    dev = cfg.device
    wb, tau = p["omega_b"], p["tau"]
    if cfg.numerics["method"] == "oracle":
        grid = chevron_scan(dev, p["group"], wb, tau, cfg.numerics["n_modes"], dt=cfg.numerics["dt"], jobs=jobs)
    else:
        group = dev.group(p["group"])
        lo, hi = dev.tuning.omega_min, dev.tuning.omega_max
        if wb.min() < lo or wb.max() > hi:
            raise InvalidParameterError("bus frequencies outside the tuning range")
        fgrid = _spectral_grid(cfg, group.center)
        grid = np.array([rabi_protocol(group, dev.bus_at(w), tau, fgrid) for w in wb])
    W, T = np.meshgrid(wb, tau, indexing="ij")
    meta = [("group", p["group"]), ("method", cfg.numerics["method"]), ("shape", f"{wb.size}x{tau.size}")]
    write_table(os.path.join(out, "chevron.dat"), ["omega_b_ghz", "tau_ns", "p_e"],
                [to_ghz(W), to_ns(T), grid], ["omega_b_ghz", "tau_ns"], meta)
    return ["chevron.dat"]


def _run_coherence(cfg, out, jobs):
    p = cfg.params
    tau = p["tau"]
    rho = coherence_protocol(cfg.device, p["group"], tau, cfg.numerics["n_modes"], dt=cfg.numerics["dt"])
    meta = [("group", p["group"]), ("method", "oracle")]
    mag = np.abs(rho)
    meta += _curve_times(tau, mag ** 2)
    try:
        ts, tr, _ = storage_retrieval_times(tau, mag ** 2)
        i_s, i_r = np.argmin(np.abs(tau - ts)), np.argmin(np.abs(tau - tr))
        meta += [("abs_rho_at_tau_s_rel", mag[i_s] / mag[0]), ("abs_rho_at_tau_r_rel", mag[i_r] / mag[0]),
                 ("phase_jump_rad", float(np.angle(rho[i_r] / rho[0])))]
    except InvalidParameterError:
        pass
    write_table(os.path.join(out, "coherence.dat"),
                ["tau_ns", "rho_ge_re", "rho_ge_im", "rho_ge_abs", "rho_ge_phase_rad"],
                [to_ns(tau), rho.real, rho.imag, mag, np.angle(rho)], ["tau_ns"], meta)
    return ["coherence.dat"]


def _ramsey_analysis(tau, p, delta, band, window):
    meta = []
    d = np.diff(tau)
    if tau.size < 64 or np.ptp(d) > 1e-9 * d.mean():
        return meta, None
    peaks = fft_spectrum(p, d.mean(), window=window, band=band)
    meta.append(("fft_peaks_mhz", [to_mhz(f) for f in peaks.frequencies]))
    try:
        fit = fit_curve("ramsey_fringe", tau, p,
                        [0.5 * np.ptp(p) / 3, abs(delta), mhz(2.3), 200e-9, 0.0, float(np.mean(p))])
        meta += [("fit_t2_star_ns", to_ns(abs(fit.params["t2_star"]))),
                 ("fit_delta_mhz", to_mhz(fit.params["delta"])), ("fit_a_hf_mhz", to_mhz(abs(fit.params["a_hf"])))]
    except HybridSimError:
        meta.append(("fit_t2_star_ns", "n/a"))
    return meta, peaks


def _run_ramsey(cfg, out, jobs):
    p = cfg.params
    dev = cfg.device
    group = dev.group(p["group"])
    tau, delta = p["tau"], p["delta"]
    method = cfg.numerics["method"]
    band = p.get("band", (abs(delta) - mhz(10), abs(delta) + mhz(10)))
    cols = {}
    if method in ("spectral", "both"):
        bus = dev.bus_at(group.center + delta)
        alpha = ramsey_spectral(group, bus, tau, _spectral_grid(cfg, bus.omega_b))
        cols["spectral"] = np.abs(alpha) ** 2
    if method in ("oracle", "both"):
        cols["oracle"] = ramsey_protocol(dev, group.label, delta, tau, p.get("half_swap"),
                                         cfg.numerics["n_modes"], dt=cfg.numerics["dt"])
    meta = [("group", group.label), ("method", method), ("detuning_mhz", to_mhz(delta)),
            ("window", p["window"])]
    spectra = {}
    for name, series in cols.items():
        m, peaks = _ramsey_analysis(tau, series, delta, band, p["window"])
        meta += [(f"{k}_{name}" if len(cols) > 1 else k, v) for k, v in m]
        if peaks is not None:
            spectra[name] = peaks
    files = ["ramsey.dat"]
    if len(cols) == 1:
        write_table(os.path.join(out, "ramsey.dat"), ["tau_ns", "p_e"], [to_ns(tau), next(iter(cols.values()))],
                    ["tau_ns"], meta)
    else:
        write_table(os.path.join(out, "ramsey.dat"), ["tau_ns", "p_e_spectral", "p_e_oracle"],
                    [to_ns(tau), cols["spectral"], cols["oracle"]], ["tau_ns"], meta)
    if spectra:
        first = next(iter(spectra.values()))
        f = first.spectrum_frequencies
        keep = f <= 2 * (abs(delta) + mhz(20))
        names = ["freq_mhz"] + (["magnitude"] if len(spectra) == 1 else [f"magnitude_{k}" for k in spectra])
        write_table(os.path.join(out, "ramsey_spectrum.dat"), names,
                    [to_mhz(f[keep])] + [s.spectrum[keep] for s in spectra.values()], ["freq_mhz"],
                    [("window", p["window"])])
        files.append("ramsey_spectrum.dat")
    return files


def _run_spectroscopy(cfg, out, jobs):
    p = cfg.params
    dev = cfg.device
    groups = dev.all_groups
    wb = p["omega_b"]
    offsets = np.linspace(-p["probe_half_width"], p["probe_half_width"], p["probe_points"])
    W = np.repeat(wb, offsets.size)
    Om = (wb[:, None] + offsets[None, :]).ravel()
    s21 = np.concatenate([np.abs(transmission(groups, dev.bus_at(w), w + offsets)) for w in wb])
    meta = []
    if wb.size >= 3:
        cross = avoided_crossings(groups, dev.kappa, wb, p["probe_half_width"])
        meta.append(("avoided_crossings_ghz", [to_ghz(c) for c in cross]))
    for g in groups:
        try:
            split = vacuum_rabi_splitting(g, dev.bus_at(g.center))
            meta.append((f"splitting_{g.label}_mhz", to_mhz(split)))
        except InvalidParameterError:
            meta.append((f"splitting_{g.label}_mhz", "n/a"))
    write_table(os.path.join(out, "spectroscopy.dat"), ["omega_b_ghz", "omega_ghz", "s21_db"],
                [to_ghz(W), to_ghz(Om), 20 * np.log10(s21)], ["omega_b_ghz", "omega_ghz"], meta)
    q = dev.qubit
    wq = q.omega_q + np.linspace(-p["qubit_window"], p["qubit_window"], 241)
    lo, hi = qubit_bus_anticrossing(q, wq)
    gap = hi - lo
    write_table(os.path.join(out, "anticrossing.dat"), ["omega_b_ghz", "lower_ghz", "upper_ghz"],
                [to_ghz(wq), to_ghz(lo), to_ghz(hi)], ["omega_b_ghz"],
                [("min_gap_mhz", to_mhz(gap.min())), ("min_gap_at_ghz", to_ghz(wq[np.argmin(gap)]))])
    return ["spectroscopy.dat", "anticrossing.dat"]


def _run_aswap(cfg, out, jobs):
    p = cfg.params
    dev = cfg.device
    sched = FluxSchedule(p["initial"], p["segments"]).check_range(dev.tuning.omega_min, dev.tuning.omega_max)
    scales = np.array(p["scales"])
    transfer = np.array([simulate_sweep(dev.qubit, sched.scaled(s), cfg.numerics["aswap_dt"]) for s in scales])
    times, freqs = sched.breakpoints
    meta = [("resonant_swap_ns", to_ns(resonant_swap_time(dev.qubit)))]
    for k, rate in enumerate(sched.slopes):
        if min(freqs[k], freqs[k + 1]) <= dev.qubit.omega_q <= max(freqs[k], freqs[k + 1]):
            meta.append(("landau_zener_crossing_segment", k))
            meta.append(("landau_zener_diabatic", landau_zener_probability(dev.qubit, abs(rate))))
    write_table(os.path.join(out, "aswap.dat"), ["time_scale", "duration_ns", "transfer"],
                [scales, to_ns(sched.duration * scales), transfer], ["time_scale"], meta)
    return ["aswap.dat"]


def _run_readout(cfg, out, jobs):
    p = cfg.params
    p_eq = cfg.device.p_e_eq
    m = calibrate(p["p_sw0"], p["p_sw_pi"], p_eq)
    power = p["power"]
    model = SCurveModel(DEFAULT_THRESHOLDS, DEFAULT_WIDTHS, (1 - p_eq, p_eq, 0.0))
    eq = scurve(model, power)
    pi = scurve(model.with_weights((p_eq, 1 - p_eq, 0.0)), power)
    if p["noise"] > 0:
        rng = np.random.default_rng(p["seed"])
        eq = eq + rng.normal(0, p["noise"], eq.shape)
        pi = pi + rng.normal(0, p["noise"], pi.shape)
    p_fit, _ = estimate_thermal_population(power, eq, pi)
    meta = [("e0", m.e0), ("e1", m.e1), ("p_eq", p_eq), ("p_eq_fit", p_fit)]
    if 0 < p_fit < 0.5:
        meta.append(("effective_temperature_mk", 1e3 * effective_temperature(cfg.device.qubit.omega_q, p_fit)))
    write_table(os.path.join(out, "readout.dat"), ["power_db", "p_sw_eq", "p_sw_pi"], [power, eq, pi],
                ["power_db"], meta)
    return ["readout.dat"]


RUNNERS = {
    "rabi": _run_rabi,
    "chevron": _run_chevron,
    "coherence": _run_coherence,
    "ramsey": _run_ramsey,
    "spectroscopy": _run_spectroscopy,
    "aswap": _run_aswap,
    "calibrate-readout": _run_readout,
}


def _sha256(path):
    with open(path, "rb") as fh:
        return hashlib.sha256(fh.read()).hexdigest()


def run(config, out_dir, jobs=1):
    """Run one experiment and write its data files plus manifest.json. Returns the manifest dict."""
    cfg = config if isinstance(config, ExperimentConfig) else load(resolve_config(config))
    os.makedirs(out_dir, exist_ok=True)
    t0 = time.perf_counter()
    try:
        files = RUNNERS[cfg.experiment](cfg, out_dir, jobs)
    except ConfigError:
        raise
    except HybridSimError as exc:
        raise type(exc)(f"experiment {cfg.experiment!r}: {exc}") from exc
    wall = time.perf_counter() - t0
    manifest = {
        "tool": "hybridsim",
        "version": __version__,
        "experiment": cfg.experiment,
        "config_hash": cfg.config_hash,
        "config": json.loads(cfg.canonical),
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
        "wall_time_s": round(wall, 3),
        "files": [{"name": f, "sha256": _sha256(os.path.join(out_dir, f))} for f in files],
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8", newline="\n") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


# ---------------------------------------------------------------- compare / list

def compare(dir_a, dir_b, tol):
    """Max |A - B| per data column of matching files. Returns (ok, report lines)."""
    names_a = sorted(f for f in os.listdir(dir_a) if f.endswith(".dat"))
    names_b = sorted(f for f in os.listdir(dir_b) if f.endswith(".dat"))
    if names_a != names_b:
        raise SchemaError(f"data files differ: {names_a} vs {names_b}")
    if not names_a:
        raise SchemaError("no data files to compare")
    ok, report = True, []
    for name in names_a:
        ca, ga, da, _ = read_table(os.path.join(dir_a, name))
        cb, gb, db, _ = read_table(os.path.join(dir_b, name))
        if ca != cb or ga != gb:
            raise SchemaError(f"{name}: columns differ ({ca} vs {cb})")
        if da.shape != db.shape:
            raise SchemaError(f"{name}: row counts differ ({da.shape[0]} vs {db.shape[0]})")
        for j, col in enumerate(ca):
            a, b = da[:, j], db[:, j]
            if col in ga:
                scale = max(1.0, float(np.max(np.abs(a)))) if a.size else 1.0
                if np.max(np.abs(a - b), initial=0.0) > 1e-9 * scale:
                    raise SchemaError(f"{name}: grid column {col} differs")
                continue
            diff = float(np.max(np.abs(a - b), initial=0.0))
            passed = diff <= tol
            ok &= passed
            report.append(f"{name} {col} max_abs_diff={diff:.3e} {'PASS' if passed else 'FAIL'}")
    return ok, report


def bundled_configs():
    root = resources.files("hybridsim") / "configs"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def resolve_config(name):
    if os.path.exists(name):
        return name
    path = resources.files("hybridsim") / "configs" / f"{name}.toml"
    if path.is_file():
        return str(path)
    raise ConfigError(f"no config file or bundled config named {name!r}")


def list_experiments():
    lines = []
    for name, info in EXPERIMENTS.items():
        lines.append(f"{name}  [{info['figure']}]")
        lines.append(f"    {info['summary']}")
        lines.append(f"    required: {', '.join(info['required'])}")
        lines.append(f"    methods:  {', '.join(info['methods'])}")
    lines.append("bundled configs: " + ", ".join(bundled_configs()))
    return "\n".join(lines)


# ---------------------------------------------------------------- entry point

def main(argv=None):
    parser = argparse.ArgumentParser(prog="hybridsim", description="Qubit / bus / spin-ensemble simulator")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("-o", "--output", default=None, help="output directory (default: ./<config name>)")
    p_run.add_argument("--jobs", type=int, default=1)
    p_cmp = sub.add_parser("compare", help="compare two run directories")
    p_cmp.add_argument("dir_a")
    p_cmp.add_argument("dir_b")
    p_cmp.add_argument("--tol", type=float, default=1e-3)
    sub.add_parser("list", help="list experiments and bundled configs")
    args = parser.parse_args(argv)

    try:
        if args.command == "list":
            print(list_experiments())
            return 0
        if args.command == "run":
            out = args.output or os.path.splitext(os.path.basename(args.config))[0]
            manifest = run(args.config, out, max(1, args.jobs))
            for f in manifest["files"]:
                print(os.path.join(out, f["name"]))
            print(f"wall time {manifest['wall_time_s']:.2f} s")
            return 0
        ok, report = compare(args.dir_a, args.dir_b, args.tol)
        print("\n".join(report))
        return 0 if ok else 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 2
    except HybridSimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
