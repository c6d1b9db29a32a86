"""
SQUID tuning of the bus, adiabatic SWAP schedules and qubit-bus passage.

The tuning curve uses the lumped model of a resonator whose inductance is
partly a SQUID: with a fraction ``p`` of the inductance in the junctions at
zero flux, L(phi) = L_r + L_J / cos(pi*phi), so

    w_B(phi) = w_max / sqrt(1 + p * (1/cos(pi*phi) - 1)).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import (
    InvalidParameterError,
    SingularFluxError,
    StepSizeError,
    TuningRangeError,
)
from .schedule import FluxSchedule
from .units import ghz, ns

# Flux (units of the flux quantum) at which the documented tuning range ends.
RANGE_FLUX = 0.45


@dataclass(frozen=True)
class TuningCurve:
    omega_max: float
    participation: float
    phi0: float = 1.0

    def __post_init__(self):
        if not self.omega_max > 0:
            raise InvalidParameterError("omega_max must be positive")
        if not self.participation > 0:
            raise InvalidParameterError("participation must be positive")

    @classmethod
    def from_range(cls, omega_max, omega_min, phi_at_min=RANGE_FLUX):
        """Choose the participation so that w_B(phi_at_min) = omega_min."""
        if not 0 < omega_min < omega_max:
            raise InvalidParameterError("need 0 < omega_min < omega_max")
        c = math.cos(math.pi * phi_at_min)
        ratio = (omega_max / omega_min) ** 2 - 1.0
        return cls(omega_max, ratio / (1.0 / c - 1.0))

    @property
    def omega_min(self):
        """Lower end of the usable range, w_B(0.45 phi0)."""
        return omega_of_flux(self, RANGE_FLUX * self.phi0)


def omega_of_flux(curve, phi):
    """Bus frequency (rad/s) at flux ``phi`` (same units as ``curve.phi0``)."""
    x = np.abs(np.asarray(phi, dtype=float)) / curve.phi0
    if np.any(x >= 0.5):
        raise SingularFluxError("flux must satisfy |phi| < phi0/2")
    c = np.cos(np.pi * x)
    out = curve.omega_max / np.sqrt(1.0 + curve.participation * (1.0 / c - 1.0))
    return float(out) if out.ndim == 0 else out


def flux_of_omega(curve, omega):
    """Non-negative flux at which the bus sits at ``omega``, found by bisection."""
    lo = curve.omega_min
    if not (lo * (1 - 1e-12) <= omega <= curve.omega_max * (1 + 1e-12)):
        raise TuningRangeError(
            f"omega {omega:.6g} rad/s outside tuning range [{lo:.6g}, {curve.omega_max:.6g}]"
        )
    if omega >= curve.omega_max:
        return 0.0
    if omega <= lo:
        return RANGE_FLUX * curve.phi0
    return brentq(lambda p: omega_of_flux(curve, p) - omega, 0.0, RANGE_FLUX * curve.phi0,
                  xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)


@dataclass(frozen=True)
class QubitBusPair:
    omega_q: float
    g_q: float

    def __post_init__(self):
        if not self.g_q > 0:
            raise InvalidParameterError(f"qubit-bus coupling must be positive, got {self.g_q}")


def reference_aswap_schedule():
    """The three-ramp adiabatic SWAP used in the experiment (450 ns in total)."""
    return FluxSchedule(
        ghz(2.52),
        ((ghz(2.589), ns(60)), (ghz(2.643), ns(350)), (ghz(2.687), ns(40))),
    )


def _magnus_step(mean_delta, g, by, h):
    """exp(-i h (H + by*sigma_y)) for H = [[0, g], [g, mean_delta]], in closed form."""
    half = 0.5 * mean_delta
    # H + by sy = half*I + (-half) sz + g sx + by sy
    r = math.sqrt(half * half + g * g + by * by)
    ph = complex(math.cos(half * h), -math.sin(half * h))
    if r == 0.0:
        return ph * np.eye(2, dtype=complex)
    c, s = math.cos(r * h), math.sin(r * h)
    nx, ny, nz = g / r, by / r, -half / r
    return ph * np.array([[c - 1j * s * nz, -1j * s * (nx - 1j * ny)],
                          [-1j * s * (nx + 1j * ny), c + 1j * s * nz]])


def simulate_sweep(pair, schedule, dt=ns(0.05), return_state=False):
    """Final bus population after sweeping w_B(t) through the qubit.

    Integrates the single-excitation qubit-bus Hamiltonian [[0, g_q], [g_q, D(t)]]
    in the basis (|e,0>, |g,1>), with D(t) = w_B(t) - w_Q, starting from |e,0>.
    Steps use the fourth-order Magnus expansion at the Gauss-Legendre nodes,
    exponentiated exactly, so the evolution is unitary to rounding error.
    """
    if not 0 < dt <= ns(0.1) * (1 + 1e-12):
        raise StepSizeError(f"dt must be in (0, 0.1 ns], got {dt}")
    total = schedule.duration
    n = max(1, int(math.ceil(total / dt - 1e-9)))
    h = total / n
    c1, c2 = 0.5 - math.sqrt(3) / 6, 0.5 + math.sqrt(3) / 6
    starts = np.arange(n) * h
    d1 = schedule.omega_at(starts + c1 * h) - pair.omega_q
    d2 = schedule.omega_at(starts + c2 * h) - pair.omega_q
    g = pair.g_q
    # the commutator [H2, H1] = -i g (d2 - d1) sigma_y enters as an extra sigma_y field
    by = -math.sqrt(3) * h / 12.0 * g * (d2 - d1)
    mean = 0.5 * (d1 + d2)
    psi = np.array([1.0 + 0j, 0j])
    for k in range(n):
        psi = _magnus_step(mean[k], g, by[k], h) @ psi
    if return_state:
        return psi
    return float(abs(psi[1]) ** 2)


def resonant_swap_time(pair):
    """Duration pi/(2 g_q) of a resonant qubit-to-bus SWAP."""
    if not pair.g_q > 0:
        raise InvalidParameterError("g_q must be positive")
    return math.pi / (2.0 * pair.g_q)


def landau_zener_probability(pair, sweep_rate):
    """Diabatic (non-transferred) probability exp(-2 pi g_q^2 / |dD/dt|)."""
    if not sweep_rate > 0:
        raise InvalidParameterError("sweep_rate must be positive")
    return math.exp(-2.0 * math.pi * pair.g_q ** 2 / sweep_rate)


def linear_sweep(pair, half_range, duration):
    """Single linear ramp from w_Q - half_range to w_Q + half_range."""
    return FluxSchedule(pair.omega_q - half_range, ((pair.omega_q + half_range, duration),))
