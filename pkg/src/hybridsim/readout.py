"""
Phenomenological switching readout.

The detector answers "switched" with probability P_sw, an affine function of
the qubit excited population through two error rates: e0 (switch although the
qubit is in |g>) and e1 (no switch although it is in |e>).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares
from scipy.special import erf

from .errors import CalibrationError, FitError, InvalidParameterError
from .units import HBAR, KB


def _check_prob(name, value):
    v = np.asarray(value, dtype=float)
    if np.any(~np.isfinite(v)) or np.any(v < 0) or np.any(v > 1):
        raise InvalidParameterError(f"{name} must lie in [0, 1]")
    return v


@dataclass(frozen=True)
class ReadoutErrorModel:
    e0: float
    e1: float
    p_eq: float = 0.0

    def __post_init__(self):
        for name in ("e0", "e1", "p_eq"):
            _check_prob(name, getattr(self, name))
        if not self.e0 + self.e1 < 1:
            raise InvalidParameterError("readout is not invertible unless e0 + e1 < 1")

    @property
    def contrast(self):
        return 1.0 - self.e0 - self.e1


def switching_probability(m, p_e):
    """P_sw = e0 (1 - P_e) + (1 - e1) P_e."""
    p_e = _check_prob("p_e", p_e)
    out = m.e0 * (1.0 - p_e) + (1.0 - m.e1) * p_e
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class ExcitedEstimate:
    """Inverted population; ``clamped`` marks entries that fell outside [0, 1]."""

    p_e: np.ndarray
    clamped: np.ndarray

    @property
    def any_clamped(self):
        return bool(np.any(self.clamped))


def excited_probability(m, p_sw, return_flags=False):
    """Invert the readout map.

    Measured switching probabilities outside [e0, 1 - e1] (noise) give P_e
    outside [0, 1]; these are clamped and flagged rather than rejected.
    With ``return_flags`` an ExcitedEstimate is returned.
    """
    p_sw = np.asarray(p_sw, dtype=float)
    raw = (p_sw - m.e0) / m.contrast
    clamped = (raw < 0) | (raw > 1) | ~np.isfinite(raw)
    p_e = np.clip(np.nan_to_num(raw, nan=0.0), 0.0, 1.0)
    if return_flags:
        return ExcitedEstimate(p_e, clamped)
    return float(p_e) if p_e.ndim == 0 else p_e


def calibrate(p_sw0, p_sw_pi, p_eq):
    """Error rates from switching probabilities measured without and after a pi pulse.

    Solves  P_sw0  = e0 (1 - p) + (1 - e1) p
            P_swpi = e0 p       + (1 - e1) (1 - p)
    for (e0, e1), with p the thermal excited population.
    """
    for name, v in (("p_sw0", p_sw0), ("p_sw_pi", p_sw_pi), ("p_eq", p_eq)):
        _check_prob(name, v)
    det = 1.0 - 2.0 * p_eq
    if abs(det) < 1e-12:
        raise CalibrationError("calibration is singular at p_eq = 0.5")
    if p_eq > 0.5:
        raise CalibrationError("p_eq must be below 0.5")
    if not p_sw_pi > p_sw0:
        raise CalibrationError("need p_sw_pi > p_sw0 for a usable readout")
    # with u = 1 - e1: [[1-p, p], [p, 1-p]] (e0, u) = (P0, Ppi)
    e0 = ((1.0 - p_eq) * p_sw0 - p_eq * p_sw_pi) / det
    u = ((1.0 - p_eq) * p_sw_pi - p_eq * p_sw0) / det
    return ReadoutErrorModel(min(max(e0, 0.0), 1.0), min(max(1.0 - u, 0.0), 1.0), p_eq)


def forward_calibration(m):
    """(P_sw0, P_swpi) that an ideal pi pulse would produce for model ``m``."""
    return (switching_probability(m, m.p_eq), switching_probability(m, 1.0 - m.p_eq))


# ---------------------------------------------------------------- S-curves

STATES = ("g", "e", "f")


@dataclass(frozen=True)
class SCurveModel:
    """Switching probability versus readout power as a weighted sum of error functions.

    ``thresholds`` and ``widths`` are per state (g, e, f) in the readout power
    unit (dB); ``weights`` are the state populations.
    """

    thresholds: tuple
    widths: tuple
    weights: tuple

    def __post_init__(self):
        th = tuple(float(x) for x in self.thresholds)
        wd = tuple(float(x) for x in self.widths)
        wt = tuple(float(x) for x in self.weights)
        if not len(th) == len(wd) == len(wt):
            raise InvalidParameterError("thresholds, widths and weights differ in length")
        if any(w <= 0 for w in wd):
            raise InvalidParameterError("S-curve widths must be positive")
        if any(w < 0 for w in wt) or abs(sum(wt) - 1.0) > 1e-9:
            raise InvalidParameterError("S-curve weights must be non-negative and sum to 1")
        object.__setattr__(self, "thresholds", th)
        object.__setattr__(self, "widths", wd)
        object.__setattr__(self, "weights", wt)

    def with_weights(self, weights):
        return SCurveModel(self.thresholds, self.widths, weights)


# Synthetic defaults: excited states switch at lower power, transitions a few dB wide.
DEFAULT_THRESHOLDS = (0.0, -3.0, -6.0)
DEFAULT_WIDTHS = (0.4, 0.4, 0.4)


def scurve(m, power):
    """sum_s w_s * (1 + erf((P - P_s)/width_s)) / 2."""
    power = np.asarray(power, dtype=float)
    out = sum(w * 0.5 * (1.0 + erf((power - p0) / s))
              for p0, s, w in zip(m.thresholds, m.widths, m.weights))
    return float(out) if np.ndim(out) == 0 else out


def thermal_population(omega, temperature):
    """Two-level Boltzmann excited population at angular frequency ``omega``."""
    if temperature <= 0:
        return 0.0
    return 1.0 / (1.0 + math.exp(HBAR * omega / (KB * temperature)))


def effective_temperature(omega, p_e):
    """Temperature at which a two-level system at ``omega`` has excited population ``p_e``."""
    if not 0 < p_e < 0.5:
        raise InvalidParameterError("p_e must lie in (0, 0.5)")
    return HBAR * omega / (KB * math.log((1.0 - p_e) / p_e))


def estimate_thermal_population(power, scurve_eq, scurve_pi, include_f=False, p0=None):
    """Equilibrium excited population from two S-curves.

    The curve taken at equilibrium has weights (1 - p, p) on (g, e); the one
    taken after a g-e pi pulse has (p, 1 - p). Both share thresholds and
    widths, and all of them are fitted jointly with p. With ``include_f`` a
    third component of weight q (untouched by the pulse) is added.
    Returns (p, SCurveModel at equilibrium).
    """
    power = np.asarray(power, dtype=float)
    y_eq = np.asarray(scurve_eq, dtype=float)
    y_pi = np.asarray(scurve_pi, dtype=float)
    if not (power.shape == y_eq.shape == y_pi.shape) or power.size < 8:
        raise InvalidParameterError("need matching power/S-curve samples (at least 8)")
    ns_ = 3 if include_f else 2
    lo, hi = float(power.min()), float(power.max())
    span = hi - lo

    def unpack(x):
        th, wd = x[:ns_], x[ns_:2 * ns_]
        p = x[2 * ns_]
        q = x[2 * ns_ + 1] if include_f else 0.0
        return th, wd, p, q

    def curves(x):
        th, wd, p, q = unpack(x)
        steps = [0.5 * (1.0 + erf((power - t) / w)) for t, w in zip(th, wd)]
        eq = (1 - p - q) * steps[0] + p * steps[1]
        pi = p * steps[0] + (1 - p - q) * steps[1]
        if include_f:
            eq = eq + q * steps[2]
            pi = pi + q * steps[2]
        return eq, pi

    def residuals(x):
        eq, pi = curves(x)
        return np.concatenate([eq - y_eq, pi - y_pi])

    if p0 is None:
        # thresholds from where each curve crosses one half
        t_g = float(np.interp(0.5, np.maximum.accumulate(y_eq), power))
        t_e = float(np.interp(0.5, np.maximum.accumulate(y_pi), power))
        guess = [t_g, t_e] + ([t_e - 0.1 * span] if include_f else [])
        guess += [0.05 * span] * ns_ + [0.1] + ([0.01] if include_f else [])
    else:
        guess = list(p0)
    lower = [lo - span] * ns_ + [1e-6 * span] * ns_ + [0.0] + ([0.0] if include_f else [])
    upper = [hi + span] * ns_ + [span] * ns_ + [0.5] + ([0.5] if include_f else [])
    guess = np.clip(guess, lower, upper)
    res = least_squares(residuals, guess, bounds=(lower, upper), method="trf",
                        xtol=1e-10, ftol=1e-12, max_nfev=2000)
    rn = float(np.linalg.norm(res.fun))
    if res.status <= 0:
        raise FitError(f"S-curve fit did not converge: {res.message}", rn)
    th, wd, p, q = unpack(res.x)
    weights = (1 - p - q, p) + ((q,) if include_f else ())
    return float(p), SCurveModel(tuple(th), tuple(wd), weights)
