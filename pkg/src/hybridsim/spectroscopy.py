"""
Frequency-domain observables and curve analysis.

Bus transmission, the qubit-bus anticrossing, FFT peak extraction, the
hyperfine Ramsey-fringe model and a small least-squares fitting front end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import least_squares
from scipy.signal import find_peaks

from .errors import FitError, InvalidGridError, InvalidParameterError
from .spectral import (
    BusParams,
    EnsembleGroup,
    make_hyperfine_density,
    rabi_protocol,
    transfer_t1,
)
from .units import TWO_PI


@dataclass(frozen=True)
class TransmissionSpectrum:
    omega_grid: np.ndarray
    s21_db: np.ndarray

    def __post_init__(self):
        om = np.asarray(self.omega_grid, dtype=float)
        db = np.asarray(self.s21_db, dtype=float)
        if om.shape != db.shape:
            raise InvalidGridError("omega_grid and s21_db differ in shape")
        if not np.all(np.isfinite(db)):
            raise InvalidParameterError("transmission contains non-finite values")
        d = np.diff(om)
        if om.size > 1 and (np.any(d <= 0) or np.ptp(d) > 1e-6 * abs(d[0])):
            raise InvalidGridError("transmission grid must be uniform and increasing")
        object.__setattr__(self, "omega_grid", om)
        object.__setattr__(self, "s21_db", db)


@dataclass(frozen=True)
class PeakSet:
    """Spectral peaks sorted by frequency: frequency and width in rad/s."""

    frequencies: np.ndarray
    heights: np.ndarray
    widths: np.ndarray
    spectrum_frequencies: np.ndarray = field(default=None, repr=False)
    spectrum: np.ndarray = field(default=None, repr=False)

    def __len__(self):
        return len(self.frequencies)

    def strongest(self, k):
        """The ``k`` highest peaks, returned in ascending frequency."""
        idx = np.sort(np.argsort(self.heights)[::-1][:k])
        return PeakSet(self.frequencies[idx], self.heights[idx], self.widths[idx])


def transmission(groups, bus, omega):
    """Complex bus transmission S21(omega) of a symmetric two-port.

    S21 = (kappa/2) t1(-i omega) / i, which equals 1 on resonance for the bare bus.
    ``groups`` may be one EnsembleGroup or several (their kernels add).
    """
    return -0.5j * bus.kappa * transfer_t1(groups, bus, omega)


def transmission_spectrum(groups, bus, omega):
    s21 = transmission(groups, bus, omega)
    return TransmissionSpectrum(np.asarray(omega, dtype=float), 20.0 * np.log10(np.abs(s21)))


def vacuum_rabi_splitting(group, bus, half_window=None, points=20001):
    """Distance (rad/s) between the two strongest transmission peaks around the bus."""
    half_window = 4.0 * max(group.g, bus.kappa) if half_window is None else half_window
    omega = bus.omega_b + np.linspace(-half_window, half_window, points)
    mag = np.abs(transmission(group, bus, omega))
    peaks = peak_positions(omega, mag)
    if len(peaks) < 2:
        raise InvalidParameterError("fewer than two transmission peaks: no splitting resolved")
    two = peaks.strongest(2)
    return float(two.frequencies[1] - two.frequencies[0])


def avoided_crossings(groups, kappa, omega_b_grid, half_window, points=2001, prominence=0.1):
    """Bus frequencies where the transmission maximum dips, one per coupled group.

    Off resonance the bus line has unit height; near a spin group the photon
    hybridizes and the peak drops. Returns the local minima of max|S21| versus
    ``omega_b`` with parabolic refinement. Dips shallower than ``prominence``
    (in units of the bare peak height) are ripples and are ignored.
    """
    omega_b_grid = np.asarray(omega_b_grid, dtype=float)
    offsets = np.linspace(-half_window, half_window, points)
    heights = np.array([
        np.max(np.abs(transmission(groups, BusParams(wb, kappa), wb + offsets)))
        for wb in omega_b_grid
    ])
    idx, _ = find_peaks(-heights, prominence=prominence)
    return np.array([_parabolic(omega_b_grid, -heights, i)[0] for i in idx])


def qubit_bus_anticrossing(pair, omega_b):
    """Lower and upper normal-mode frequencies of the resonant qubit-bus system."""
    mean = 0.5 * (pair.omega_q + omega_b)
    half = 0.5 * np.sqrt((pair.omega_q - omega_b) ** 2 + 4.0 * pair.g_q ** 2)
    return mean - half, mean + half


def _parabolic(x, y, i):
    """Vertex of the parabola through (x[i-1..i+1], y[i-1..i+1])."""
    if i <= 0 or i >= len(y) - 1:
        return float(x[i]), float(y[i])
    y0, y1, y2 = y[i - 1], y[i], y[i + 1]
    denom = y0 - 2 * y1 + y2
    if denom == 0:
        return float(x[i]), float(y1)
    shift = 0.5 * (y0 - y2) / denom
    step = 0.5 * (x[i + 1] - x[i - 1])
    return float(x[i] + shift * step), float(y1 - 0.25 * (y0 - y2) * shift)


def _half_width(x, y, i):
    half = 0.5 * y[i]
    lo = i
    while lo > 0 and y[lo] > half:
        lo -= 1
    hi = i
    while hi < len(y) - 1 and y[hi] > half:
        hi += 1
    return float(x[hi] - x[lo])


def peak_positions(x, y, threshold=0.0):
    """Local maxima of y(x) above ``threshold * max(y)``, as a PeakSet."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    idx, _ = find_peaks(y, height=threshold * np.max(y) if threshold > 0 else None)
    freqs, heights, widths = [], [], []
    for i in idx:
        f, h = _parabolic(x, y, i)
        freqs.append(f)
        heights.append(h)
        widths.append(_half_width(x, y, i))
    return PeakSet(np.array(freqs), np.array(heights), np.array(widths))


def fft_spectrum(series, dt, window="hann", threshold=0.1, pad=8, band=None):
    """Peaks of the magnitude spectrum of a uniformly sampled real series.

    The mean is removed and the record multiplied by ``window`` ("hann" or
    "rect") before a zero-padded real FFT. Peaks above ``threshold`` times the
    maximum are located by parabolic interpolation. ``band`` = (lo, hi) in
    rad/s restricts the search, and the threshold then refers to the in-band
    maximum; use it when a slow baseline dominates the low frequencies.
    """
    series = np.asarray(series, dtype=float)
    if series.ndim != 1 or series.size < 64:
        raise InvalidParameterError("fft_spectrum needs a 1-D series of at least 64 samples")
    if not dt > 0:
        raise InvalidParameterError("dt must be positive")
    x = series - series.mean()
    if window == "hann":
        x = x * np.hanning(x.size)
    elif window not in ("rect", "rectangular", None):
        raise InvalidParameterError(f"unknown window {window!r}")
    nfft = int(pad) * x.size
    mag = np.abs(np.fft.rfft(x, nfft))
    freqs = TWO_PI * np.fft.rfftfreq(nfft, dt)
    mag[0] = 0.0
    if band is None:
        peaks = peak_positions(freqs, mag, threshold)
    else:
        sel = (freqs >= band[0]) & (freqs <= band[1])
        if np.count_nonzero(sel) < 3:
            raise InvalidParameterError("band contains fewer than three frequency bins")
        peaks = peak_positions(freqs[sel], mag[sel], threshold)
    return PeakSet(peaks.frequencies, peaks.heights, peaks.widths, freqs, mag)


def ramsey_fringe_model(tau, delta, a_hf, t2_star):
    """exp(-tau/T2*) * sum_{i=-1,0,1} cos((delta + i*a_hf) * tau).

    ``delta`` and ``a_hf`` are angular frequencies (rad/s), so the cosine
    arguments equal 2*pi*(f + i*A)*tau in ordinary-frequency units.
    """
    if not t2_star > 0:
        raise InvalidParameterError("t2_star must be positive")
    tau = np.asarray(tau, dtype=float)
    total = sum(np.cos((delta + i * a_hf) * tau) for i in (-1, 0, 1))
    return np.exp(-tau / t2_star) * total


def storage_retrieval_times(tau, p):
    """First minimum (storage) and the following maximum (retrieval) of p(tau).

    Returns (tau_s, tau_r, p(tau_r)), parabolically refined.
    """
    tau = np.asarray(tau, dtype=float)
    p = np.asarray(p, dtype=float)
    mins, _ = find_peaks(-p)
    if mins.size == 0:
        raise InvalidParameterError("no storage minimum in the curve")
    i_s = mins[0]
    maxs, _ = find_peaks(p[i_s:])
    if maxs.size == 0:
        raise InvalidParameterError("no retrieval maximum after the storage minimum")
    i_r = i_s + maxs[0]
    tau_s = _parabolic(tau, -p, i_s)[0]
    tau_r, p_r = _parabolic(tau, p, i_r)
    return tau_s, tau_r, p_r


def revival_maxima(tau, p):
    """All local maxima (time, value) of p(tau), parabolically refined."""
    idx, _ = find_peaks(np.asarray(p, dtype=float))
    return [_parabolic(tau, p, i) for i in idx]


# ---------------------------------------------------------------- fitting

def _ramsey_fit_model(tau, amplitude, delta, a_hf, t2_star, phase, offset):
    tau = np.asarray(tau, dtype=float)
    total = sum(np.cos((delta + i * a_hf) * tau + phase) for i in (-1, 0, 1))
    return amplitude * np.exp(-tau / abs(t2_star)) * total + offset


def _lorentzian_multiplet(omega, amplitude, center, splitting, fwhm, offset):
    omega = np.asarray(omega, dtype=float)
    hw = 0.5 * fwhm
    total = sum(hw * hw / ((omega - center - i * splitting) ** 2 + hw * hw) for i in (-1, 0, 1))
    return amplitude * total + offset


def _constant(x, c):
    return np.full(np.shape(x), c, dtype=float)


def _damped_rabi(tau, amplitude, t_decay, omega, offset):
    tau = np.asarray(tau, dtype=float)
    return amplitude * np.exp(-tau / t_decay) * np.cos(0.5 * omega * tau) ** 2 + offset


def rabi_linewidth_model(g, center, hf_splitting, bus, label="-I", grid=None):
    """p(tau; fwhm): storage/retrieval curve with the hyperfine linewidth as the only parameter."""
    def model(tau, fwhm):
        group = EnsembleGroup(label, g, make_hyperfine_density(center, hf_splitting, abs(fwhm)))
        return rabi_protocol(group, bus, tau, grid)
    return model


MODELS = {
    "ramsey_fringe": (_ramsey_fit_model, ("amplitude", "delta", "a_hf", "t2_star", "phase", "offset")),
    "lorentzian_multiplet": (_lorentzian_multiplet, ("amplitude", "center", "splitting", "fwhm", "offset")),
    "constant": (_constant, ("c",)),
    "damped_rabi": (_damped_rabi, ("amplitude", "t_decay", "omega", "offset")),
    "rabi_linewidth": (rabi_linewidth_model, ("fwhm",)),
}


@dataclass(frozen=True)
class FitResult:
    params: dict
    covariance: np.ndarray
    residual_norm: float
    initial_residual_norm: float
    nfev: int

    @property
    def values(self):
        return np.array(list(self.params.values()))

    @property
    def errors(self):
        return dict(zip(self.params, np.sqrt(np.abs(np.diag(self.covariance)))))


def fit_curve(model, x, y, p0, bounds=None, model_kwargs=None, max_iterations=200, xtol=1e-8):
    """Nonlinear least squares of ``model(x, *params)`` to samples ``y``.

    ``model`` is a key of MODELS or a callable. For "rabi_linewidth" the fixed
    physics goes in ``model_kwargs`` (g, center, hf_splitting, bus, ...).
    Uses Levenberg-Marquardt without bounds and a trust-region reflective
    variant with bounds; stops when the relative step falls below ``xtol`` or
    after ``max_iterations`` Jacobian evaluations.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    p0 = np.atleast_1d(np.asarray(p0, dtype=float))
    if isinstance(model, str):
        if model not in MODELS:
            raise InvalidParameterError(f"unknown model {model!r}; known: {sorted(MODELS)}")
        func, names = MODELS[model]
        if model == "rabi_linewidth":
            func = func(**(model_kwargs or {}))
    else:
        func = model
        names = tuple(f"p{i}" for i in range(p0.size))
    if len(names) != p0.size:
        raise InvalidParameterError(f"model expects {len(names)} parameters, got {p0.size}")
    if x.size < p0.size + 2:
        raise InvalidParameterError("need at least (number of parameters + 2) samples")

    def residuals(p):
        return func(x, *p) - y

    r0 = float(np.linalg.norm(residuals(p0)))
    kw = dict(xtol=xtol, ftol=1e-15, gtol=1e-15, x_scale="jac", max_nfev=max_iterations * (p0.size + 1))
    if bounds is None:
        res = least_squares(residuals, p0, method="lm", **kw)
    else:
        res = least_squares(residuals, p0, bounds=bounds, method="trf", **kw)
    rn = float(np.linalg.norm(res.fun))
    if res.status <= 0 or not np.all(np.isfinite(res.x)):
        raise FitError(f"fit did not converge: {res.message}", rn)
    dof = max(1, x.size - p0.size)
    jtj = res.jac.T @ res.jac
    try:
        cov = np.linalg.pinv(jtj) * (2.0 * res.cost / dof)
    except np.linalg.LinAlgError:
        cov = np.full((p0.size, p0.size), np.inf)
    return FitResult(dict(zip(names, (float(v) for v in res.x))), cov, rn, r0, int(res.nfev))
