"""
Experiment configuration files.

Configs are TOML with three tables. Frequencies are written in MHz or GHz and
times in ns (the key suffix says which); everything is converted to rad/s and
seconds on load. ``device`` overrides the default parameter set, ``experiment``
selects and parametrizes one protocol, ``numerics`` picks the method and grids.
"""

from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .device import REFERENCE_GROUPS, REFERENCE_HF_SPLITTING_MHZ, REFERENCE_T_CAV, HybridDeviceModel
from .errors import ConfigError, InvalidParameterError
from .flux import QubitBusPair, TuningCurve
from .spectral import (
    GROUP_LABELS,
    EnsembleGroup,
    _normalize_label,
    make_hyperfine_density,
)
from .units import ghz, mhz, ns

EXPERIMENTS = {
    "rabi": {
        "figure": "fig2b",
        "summary": "storage and retrieval of one bus photon in a spin group, p(tau)",
        "required": ("group", "tau_ns"),
        "methods": ("spectral", "oracle", "both"),
    },
    "chevron": {
        "figure": "fig2c",
        "summary": "storage/retrieval map versus bus frequency and interaction time",
        "required": ("omega_b_ghz", "tau_ns"),
        "methods": ("spectral", "oracle"),
    },
    "coherence": {
        "figure": "fig3c",
        "summary": "qubit coherence rho_ge(tau) after storing a superposition",
        "required": ("group", "tau_ns"),
        "methods": ("oracle",),
    },
    "ramsey": {
        "figure": "fig4b",
        "summary": "single-photon Ramsey fringes with the bus detuned between half swaps, plus FFT",
        "required": ("group", "detuning_mhz", "tau_ns"),
        "methods": ("spectral", "oracle", "both"),
    },
    "spectroscopy": {
        "figure": "fig1c",
        "summary": "bus transmission |S21| versus bus frequency and qubit-bus anticrossing",
        "required": ("omega_b_ghz",),
        "methods": ("spectral",),
    },
    "aswap": {
        "figure": "figS5",
        "summary": "adiabatic qubit-to-bus transfer along a piecewise-linear flux schedule",
        "required": ("initial_ghz", "segments"),
        "methods": ("spectral",),
    },
    "calibrate-readout": {
        "figure": "figS3",
        "summary": "readout error calibration and thermal population from S-curves",
        "required": ("p_sw0", "p_sw_pi"),
        "methods": ("spectral",),
    },
}


@dataclass(frozen=True)
class ExperimentConfig:
    raw: dict
    device: HybridDeviceModel
    experiment: str
    params: dict
    numerics: dict

    @property
    def canonical(self):
        """Config as JSON with sorted keys; its hash is independent of key order."""
        return json.dumps(self.raw, sort_keys=True, separators=(",", ":"))

    @property
    def config_hash(self):
        return hashlib.sha256(self.canonical.encode("utf-8")).hexdigest()


def _err(field, message):
    return ConfigError(message, field=field)


def _number(table, key, path, default=None, positive=False, nonneg=False):
    if key not in table:
        if default is None:
            raise _err(f"{path}.{key}", "missing required field")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise _err(f"{path}.{key}", f"expected a number, got {type(v).__name__}")
    v = float(v)
    if not np.isfinite(v):
        raise _err(f"{path}.{key}", "must be finite")
    if positive and not v > 0:
        raise _err(f"{path}.{key}", "must be positive")
    if nonneg and v < 0:
        raise _err(f"{path}.{key}", "must be non-negative")
    return v


def _grid(table, key, path, positive=False):
    """A grid is either an explicit list or {start, stop, step} (stop inclusive)."""
    if key not in table:
        raise _err(f"{path}.{key}", "missing required field")
    spec = table[key]
    name = f"{path}.{key}"
    if isinstance(spec, list):
        if not spec or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in spec):
            raise _err(name, "grid list must be a non-empty list of numbers")
        arr = np.array(spec, dtype=float)
    elif isinstance(spec, dict):
        start = _number(spec, "start", name)
        stop = _number(spec, "stop", name)
        step = _number(spec, "step", name, positive=True)
        if stop < start:
            raise _err(name, "stop must not be below start")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        arr = start + step * np.arange(count)
    else:
        raise _err(name, "grid must be a list or a table with start/stop/step")
    if arr.size == 0:
        raise _err(name, "grid is empty")
    if positive and np.any(arr <= 0):
        raise _err(name, "grid values must be positive")
    if np.any(arr < 0) and key.endswith("_ns"):
        raise _err(name, "times must be non-negative")
    return arr


def _label(table, path, allow_all=False):
    if "group" not in table:
        raise _err(f"{path}.group", "missing required field")
    label = table["group"]
    if not isinstance(label, str):
        raise _err(f"{path}.group", "group must be a string")
    if allow_all and label.lower() == "all":
        return "all"
    try:
        return _normalize_label(label)
    except InvalidParameterError:
        raise _err(f"{path}.group", f"unknown group {label!r}; expected one of {GROUP_LABELS}") from None


def build_device(table):
    path = "device"
    known = {"qubit_ghz", "g_qubit_mhz", "p_e_eq", "omega_max_ghz", "omega_min_ghz", "t_cav_ns",
             "quality_factor", "hf_splitting_mhz", "gamma0_mhz", "groups"}
    for k in table:
        if k not in known:
            raise _err(f"{path}.{k}", "unknown field")
    qubit = QubitBusPair(ghz(_number(table, "qubit_ghz", path, 2.607, positive=True)),
                         mhz(_number(table, "g_qubit_mhz", path, 7.2, positive=True)))
    p_e_eq = _number(table, "p_e_eq", path, 0.08, nonneg=True)
    if p_e_eq >= 0.5:
        raise _err(f"{path}.p_e_eq", "must be below 0.5")
    w_max = _number(table, "omega_max_ghz", path, 3.004, positive=True)
    w_min = _number(table, "omega_min_ghz", path, 2.5, positive=True)
    if not w_min < w_max:
        raise _err(f"{path}.omega_min_ghz", "must be below omega_max_ghz")
    t_cav = _number(table, "t_cav_ns", path, REFERENCE_T_CAV * 1e9, positive=True)
    q = table.get("quality_factor")
    if q is not None:
        q = _number(table, "quality_factor", path, positive=True)
    split = mhz(_number(table, "hf_splitting_mhz", path, REFERENCE_HF_SPLITTING_MHZ, nonneg=True))
    gamma0 = mhz(_number(table, "gamma0_mhz", path, 0.0, nonneg=True))

    groups_tab = table.get("groups", {})
    if not isinstance(groups_tab, dict):
        raise _err(f"{path}.groups", "must be a table keyed by group label")
    groups = {}
    for label in GROUP_LABELS:
        center, g, fwhm = REFERENCE_GROUPS[label]
        groups[label] = {"center_ghz": center, "g_mhz": g, "fwhm_mhz": fwhm}
    for label, over in groups_tab.items():
        gpath = f"{path}.groups.{label}"
        try:
            key = _normalize_label(label)
        except InvalidParameterError:
            raise _err(gpath, f"unknown group label {label!r}") from None
        if not isinstance(over, dict):
            raise _err(gpath, "must be a table")
        for k in over:
            if k not in ("center_ghz", "g_mhz", "fwhm_mhz"):
                raise _err(f"{gpath}.{k}", "unknown field")
        groups[key] = {k: _number(over, k, gpath, groups[key][k], positive=True) for k in groups[key]}
    built = {
        label: EnsembleGroup(
            label,
            mhz(v["g_mhz"]),
            make_hyperfine_density(ghz(v["center_ghz"]), split, mhz(v["fwhm_mhz"])),
            gamma0,
        )
        for label, v in groups.items()
    }
    return HybridDeviceModel(
        qubit=qubit,
        p_e_eq=p_e_eq,
        tuning=TuningCurve.from_range(ghz(w_max), ghz(w_min)),
        groups=built,
        kappa=1.0 / ns(t_cav),
        quality_factor=q,
    )


def _experiment_params(kind, table, path):
    p = {}
    if kind in ("rabi", "coherence", "ramsey"):
        p["group"] = _label(table, path)
        p["tau"] = ns(_grid(table, "tau_ns", path))
    if kind == "ramsey":
        p["delta"] = mhz(_number(table, "detuning_mhz", path))
        if p["delta"] == 0:
            raise _err(f"{path}.detuning_mhz", "must be non-zero")
        if "half_swap_ns" in table:
            p["half_swap"] = ns(_number(table, "half_swap_ns", path, positive=True))
        pulses = table.get("pulses", None)
        if pulses not in (None, "ideal", "finite"):
            raise _err(f"{path}.pulses", "must be 'ideal' or 'finite'")
        p["pulses"] = pulses
        band = table.get("fft_band_mhz")
        if band is not None:
            if not (isinstance(band, list) and len(band) == 2 and band[0] < band[1]):
                raise _err(f"{path}.fft_band_mhz", "must be [low, high]")
            p["band"] = (mhz(band[0]), mhz(band[1]))
        p["window"] = table.get("window", "hann")
        if p["window"] not in ("hann", "rect"):
            raise _err(f"{path}.window", "must be 'hann' or 'rect'")
    if kind == "chevron":
        p["group"] = _label(table, path, allow_all=True) if "group" in table else "all"
        p["omega_b"] = ghz(_grid(table, "omega_b_ghz", path, positive=True))
        p["tau"] = ns(_grid(table, "tau_ns", path))
    if kind == "spectroscopy":
        p["omega_b"] = ghz(_grid(table, "omega_b_ghz", path, positive=True))
        p["probe_half_width"] = mhz(_number(table, "probe_half_width_mhz", path, 15.0, positive=True))
        p["probe_points"] = int(_number(table, "probe_points", path, 601, positive=True))
        p["qubit_window"] = mhz(_number(table, "qubit_window_mhz", path, 60.0, positive=True))
    if kind == "aswap":
        p["initial"] = ghz(_number(table, "initial_ghz", path, positive=True))
        segs = table.get("segments")
        if not isinstance(segs, list) or not segs:
            raise _err(f"{path}.segments", "must be a non-empty list of [target_ghz, duration_ns]")
        out = []
        for i, s in enumerate(segs):
            if not (isinstance(s, list) and len(s) == 2 and all(isinstance(x, (int, float)) for x in s)):
                raise _err(f"{path}.segments[{i}]", "must be [target_ghz, duration_ns]")
            if not s[0] > 0 or not s[1] > 0:
                raise _err(f"{path}.segments[{i}]", "target and duration must be positive")
            out.append((ghz(s[0]), ns(s[1])))
        p["segments"] = tuple(out)
        scales = table.get("time_scales", [1.0])
        if not isinstance(scales, list) or not scales or any(not isinstance(x, (int, float)) or x <= 0 for x in scales):
            raise _err(f"{path}.time_scales", "must be a non-empty list of positive numbers")
        p["scales"] = [float(x) for x in scales]
    if kind == "calibrate-readout":
        for k in ("p_sw0", "p_sw_pi"):
            v = _number(table, k, path)
            if not 0 <= v <= 1:
                raise _err(f"{path}.{k}", "must be a probability")
            p[k] = v
        p["power"] = _grid(table, "power_db", path) if "power_db" in table else np.linspace(-10.0, 4.0, 141)
        p["noise"] = _number(table, "noise", path, 0.0, nonneg=True)
        p["seed"] = int(_number(table, "seed", path, 0.0, nonneg=True))
    return p


def _numerics(table, kind):
    path = "numerics"
    known = {"method", "dt_ns", "n_modes", "grid_span_mhz", "grid_spacing_mhz", "aswap_dt_ns"}
    for k in table:
        if k not in known:
            raise _err(f"{path}.{k}", "unknown field")
    allowed = EXPERIMENTS[kind]["methods"]
    method = table.get("method", allowed[0])
    if method not in ("spectral", "oracle", "both"):
        raise _err(f"{path}.method", "must be one of spectral, oracle, both")
    if method not in allowed:
        raise _err(f"{path}.method", f"experiment {kind!r} supports methods {allowed}")
    out = {"method": method}
    out["dt"] = ns(_number(table, "dt_ns", path, positive=True)) if "dt_ns" in table else None
    out["n_modes"] = int(_number(table, "n_modes", path, 2001, positive=True))
    out["span"] = mhz(_number(table, "grid_span_mhz", path, 400.0, positive=True))
    out["spacing"] = mhz(_number(table, "grid_spacing_mhz", path, 0.05, positive=True))
    out["aswap_dt"] = ns(_number(table, "aswap_dt_ns", path, 0.05, positive=True))
    return out


def validate(raw):
    """Turn a parsed TOML document into an ExperimentConfig, or raise ConfigError."""
    for k in raw:
        if k not in ("device", "experiment", "numerics"):
            raise _err(k, "unknown top-level table")
    exp = raw.get("experiment")
    if not isinstance(exp, dict) or not exp:
        raise _err("experiment", "experiment section is missing or empty")
    kind = exp.get("type")
    if kind is None:
        raise _err("experiment.type", "missing required field")
    if kind not in EXPERIMENTS:
        raise _err("experiment.type", f"unknown experiment {kind!r}; known: {sorted(EXPERIMENTS)}")
    device_tab = raw.get("device", {})
    if not isinstance(device_tab, dict):
        raise _err("device", "must be a table")
    try:
        device = build_device(device_tab)
    except InvalidParameterError as exc:
        raise _err("device", str(exc)) from None
    params = _experiment_params(kind, exp, "experiment")
    numerics = _numerics(raw.get("numerics", {}), kind)
    if kind == "ramsey":
        if params["pulses"] is None:
            params["pulses"] = "finite" if numerics["method"] == "oracle" else "ideal"
        if params["pulses"] == "finite" and numerics["method"] != "oracle":
            raise _err("numerics.method", "finite-pulse ramsey requires the oracle method")
        if params["pulses"] == "ideal" and numerics["method"] == "oracle":
            raise _err("experiment.pulses", "the oracle method simulates finite half-swap pulses")
    if kind == "chevron" and numerics["method"] == "spectral" and params["group"] == "all":
        raise _err("experiment.group", "the spectral chevron needs a single group; use the oracle for 'all'")
    return ExperimentConfig(copy.deepcopy(raw), device, kind, params, numerics)


def loads(text):
    try:
        raw = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        msg = getattr(exc, "msg", str(exc))
        raise ConfigError(f"cannot parse config: {msg}", line=getattr(exc, "lineno", None),
                          column=getattr(exc, "colno", None)) from None
    return validate(raw)


def load(path):
    with open(path, "rb") as fh:
        data = fh.read()
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ConfigError(f"config is not UTF-8: {exc}") from None
    return loads(text)
