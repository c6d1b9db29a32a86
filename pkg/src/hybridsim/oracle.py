"""
Brute-force reference dynamics for the bus + spin-ensemble system.

The spin density is replaced by N oscillators on a uniform frequency grid and
the linear system dX/dt = -i H_eff X is integrated with classical RK4 in a frame
rotating at the ensemble's central frequency. H_eff has arrowhead structure
(the bus couples to every spin, spins do not couple to each other), so one
right-hand-side evaluation costs O(N).

Amplitudes are ordered [bus, spin_1, ..., spin_N].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import (
    CoverageError,
    InvalidParameterError,
    NumericalInstabilityError,
    StepSizeError,
    TuningRangeError,
)
from .spectral import COVERAGE_LINEWIDTHS, EnsembleGroup

DEFAULT_N = 2001
# Discretization span, in linewidths on each side of the outermost line.
DEFAULT_SPAN_LINEWIDTHS = 40.0
DEFAULT_DT = 1e-10
# Largest allowed (rate * dt) for the fixed-step integrator.
MAX_PHASE_PER_STEP = 0.05


@dataclass(frozen=True)
class DiscretizedEnsemble:
    """Spins as discrete oscillators: frequencies and couplings in rad/s."""

    omegas: np.ndarray
    couplings: np.ndarray
    gamma0: float = 0.0
    frame: float = 0.0

    def __post_init__(self):
        om = np.asarray(self.omegas, dtype=float)
        gj = np.asarray(self.couplings, dtype=float)
        if om.shape != gj.shape or om.ndim != 1 or om.size == 0:
            raise InvalidParameterError("omegas and couplings must be equal-length 1-D arrays")
        if om.size > 1 and np.any(np.diff(om) <= 0):
            raise InvalidParameterError("oscillator frequencies must be strictly increasing")
        object.__setattr__(self, "omegas", om)
        object.__setattr__(self, "couplings", gj)

    @property
    def g(self):
        return float(np.sqrt(np.sum(self.couplings ** 2)))

    @property
    def size(self):
        return self.omegas.size


def _bin_weights(groups, omegas):
    """g^2-weighted probability mass of every bin, tails folded into the end bins."""
    edges = np.empty(omegas.size + 1)
    edges[1:-1] = 0.5 * (omegas[1:] + omegas[:-1])
    edges[0], edges[-1] = -np.inf, np.inf
    w = np.zeros(omegas.size)
    for grp in groups:
        cdf = grp.density.cdf(edges)
        cdf[0], cdf[-1] = 0.0, 1.0
        w += grp.g ** 2 * np.diff(cdf)
    return w


def discretize(group, n=DEFAULT_N, span=None, center=None):
    """Replace a continuous spin density by ``n`` oscillators on a uniform grid.

    Each oscillator receives the spectral weight of its frequency bin,
    g_j^2 = g^2 * integral over the bin of rho (~ g^2 rho(w_j) dw), with the two
    outer bins absorbing the Lorentzian tails, so that sum g_j^2 = g^2 holds
    exactly. ``n = 1`` collapses the ensemble onto a single mode at the mean
    center.

    ``group`` may also be a sequence of groups with a common ``gamma0``; they
    are placed on one shared grid.
    """
    groups = (group,) if isinstance(group, EnsembleGroup) else tuple(group)
    if not groups:
        raise InvalidParameterError("nothing to discretize")
    gamma0 = groups[0].gamma0
    if any(grp.gamma0 != gamma0 for grp in groups):
        raise InvalidParameterError("groups on one grid must share gamma0")
    g_total = math.sqrt(sum(grp.g ** 2 for grp in groups))
    weights = np.array([grp.g ** 2 for grp in groups])
    mean = float(np.dot(weights, [grp.center for grp in groups]) / weights.sum()) if weights.sum() > 0 \
        else float(np.mean([grp.center for grp in groups]))
    if n == 1:
        return DiscretizedEnsemble(np.array([mean]), np.array([g_total]), gamma0, mean)
    if n < 3:
        raise InvalidParameterError("need n >= 3 oscillators (or n = 1 for a single mode)")

    lo = min(grp.density.support(COVERAGE_LINEWIDTHS)[0] for grp in groups)
    hi = max(grp.density.support(COVERAGE_LINEWIDTHS)[1] for grp in groups)
    if span is None:
        lo_d = min(grp.density.support(DEFAULT_SPAN_LINEWIDTHS)[0] for grp in groups)
        hi_d = max(grp.density.support(DEFAULT_SPAN_LINEWIDTHS)[1] for grp in groups)
        center = 0.5 * (lo_d + hi_d) if center is None else center
        span = 2 * max(hi_d - center, center - lo_d)
    else:
        center = 0.5 * (lo + hi) if center is None else center
    omegas = center + np.linspace(-0.5 * span, 0.5 * span, n)
    if omegas[0] > lo * (1 + 1e-15) or omegas[-1] < hi * (1 - 1e-15):
        raise CoverageError(
            f"span {span:.4g} rad/s does not cover every line +/- {COVERAGE_LINEWIDTHS:g} linewidths"
        )
    w = _bin_weights(groups, omegas)
    if w.sum() > 0:
        w *= g_total ** 2 / w.sum()
    return DiscretizedEnsemble(omegas, np.sqrt(w), gamma0, mean)


@dataclass(frozen=True)
class StateVector:
    """Amplitudes [bus, spins...] in the frame rotating at ``frame`` (rad/s), at ``time`` (s)."""

    amplitudes: np.ndarray
    frame: float = 0.0
    time: float = 0.0

    @classmethod
    def bus_photon(cls, ens):
        x = np.zeros(ens.size + 1, dtype=complex)
        x[0] = 1.0
        return cls(x, ens.frame)

    @classmethod
    def collective_excitation(cls, ens):
        x = np.zeros(ens.size + 1, dtype=complex)
        x[1:] = ens.couplings / ens.g
        return cls(x, ens.frame)

    @property
    def bus(self):
        return complex(self.amplitudes[0])

    @property
    def lab_amplitudes(self):
        return self.amplitudes * np.exp(-1j * self.frame * self.time)

    @property
    def norm2(self):
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def __add__(self, other):
        return replace(self, amplitudes=self.amplitudes + other.amplitudes)

    def __rmul__(self, c):
        return replace(self, amplitudes=c * self.amplitudes)


def _spin_diag(ens, frame):
    return ens.omegas - frame - 0.5j * ens.gamma0


def _max_rate(ens, bus_offsets, frame):
    rates = [np.max(np.abs(_spin_diag(ens, frame))), ens.g]
    rates.extend(abs(b) for b in bus_offsets)
    return max(rates)


def _check_dt(dt, rate):
    if not dt > 0:
        raise StepSizeError("dt must be positive")
    if rate * dt > MAX_PHASE_PER_STEP * (1 + 1e-9):
        raise StepSizeError(
            f"dt = {dt:.3g} s too coarse: fastest rate {rate:.3g} rad/s needs dt <= "
            f"{MAX_PHASE_PER_STEP / rate:.3g} s"
        )


def auto_dt(ens, bus_frequencies=(), frame=None, dt_max=DEFAULT_DT):
    """Largest step not exceeding ``dt_max`` that satisfies the step-size rule."""
    frame = ens.frame if frame is None else frame
    rate = _max_rate(ens, [complex(w) - frame for w in bus_frequencies], frame)
    return min(dt_max, MAX_PHASE_PER_STEP / rate) if rate > 0 else dt_max


def _rk4(x, spin_diag, gj, bus_diag, h, nsteps):
    """Advance x by ``nsteps`` RK4 steps of size ``h`` (h may be negative).

    ``bus_diag`` is the rotating-frame complex bus frequency, either a constant
    or a callable of the step index and stage fraction (0, 0.5, 1).
    """
    const = not callable(bus_diag)

    def deriv(v, bd):
        out = -1j * spin_diag * v[1:]
        out -= gj * v[0]
        return np.concatenate(([-1j * bd * v[0] + gj @ v[1:]], out))

    for k in range(nsteps):
        if const:
            b0 = b1 = b2 = bus_diag
        else:
            b0, b1, b2 = bus_diag(k, 0.0), bus_diag(k, 0.5), bus_diag(k, 1.0)
        k1 = deriv(x, b0)
        k2 = deriv(x + 0.5 * h * k1, b1)
        k3 = deriv(x + 0.5 * h * k2, b1)
        k4 = deriv(x + h * k3, b2)
        x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    if not np.all(np.isfinite(x)):
        raise NumericalInstabilityError("state vector became non-finite during integration")
    return x


def evolve(state, ens, bus, duration, dt=DEFAULT_DT, schedule=None):
    """Integrate the state for ``duration`` seconds.

    Parameters
    ----------
    state : StateVector
    ens : DiscretizedEnsemble
    bus : BusParams
        Bus frequency and decay rate. With ``schedule`` given, only ``bus.kappa``
        is used and the frequency follows ``schedule.omega_at(t)``, with ``t``
        measured from ``state.time``.
    duration : float
        Non-negative; it is split into equal steps no longer than ``dt``.
    """
    if duration < 0:
        raise InvalidParameterError("duration must be non-negative")
    if duration == 0:
        return state
    frame = state.frame
    nsteps = max(1, int(math.ceil(duration / dt - 1e-9)))
    h = duration / nsteps
    spin_diag = _spin_diag(ens, frame)
    if schedule is None:
        bd = bus.complex_frequency - frame
        _check_dt(h, _max_rate(ens, [bd], frame))
        bus_diag = bd
    else:
        times, freqs = schedule.breakpoints
        _check_dt(h, _max_rate(ens, [f - frame for f in freqs], frame))
        t0 = state.time

        def bus_diag(k, frac):
            return float(schedule.omega_at(t0 + (k + frac) * h)) - frame - 0.5j * bus.kappa

    x = _rk4(state.amplitudes.astype(complex), spin_diag, ens.couplings, bus_diag, h, nsteps)
    return StateVector(x, frame, state.time + duration)


def propagate(state, ens, bus, times, dt=DEFAULT_DT):
    """Evolve under a fixed bus and return the bus amplitude at each of ``times``.

    ``times`` are measured from ``state.time``; they are sorted internally and
    each interval between consecutive times is split into equal steps no longer
    than ``dt``. Returns (rotating-frame bus amplitudes, final state).
    """
    times = np.asarray(times, dtype=float)
    order = np.argsort(times, kind="stable")
    out = np.empty(times.shape, dtype=complex)
    cur = state
    elapsed = 0.0
    for i in order:
        cur = evolve(cur, ens, bus, times[i] - elapsed, dt)
        elapsed = times[i]
        out[i] = cur.bus
    return out, cur


def _group_and_ensemble(device, label, n, span):
    if isinstance(label, str) and label.lower() == "all":
        groups = device.all_groups
    else:
        groups = (device.group(label),)
    return groups, discretize(groups if len(groups) > 1 else groups[0], n, span)


def storage_retrieval_protocol(device, label, tau_grid, n=DEFAULT_N, span=None, dt=None):
    """P(photon back in the bus) after the bus sits on the group's center for tau.

    The photon starts in the bus (perfect qubit-to-bus transfer assumed).
    """
    groups, ens = _group_and_ensemble(device, label, n, span)
    omega_b = groups[0].center if len(groups) == 1 else ens.frame
    return _storage_curve(device, ens, omega_b, tau_grid, dt)


def _storage_curve(device, ens, omega_b, tau_grid, dt):
    bus = device.bus_at(omega_b)
    dt = auto_dt(ens, [omega_b]) if dt is None else dt
    amps, _ = propagate(StateVector.bus_photon(ens), ens, bus, tau_grid, dt)
    return np.abs(amps) ** 2


def _chevron_column(args):
    device, ens, omega_b, tau_grid, dt = args
    return _storage_curve(device, ens, omega_b, tau_grid, dt)


def chevron_scan(device, label, omega_b_grid, tau_grid, n=DEFAULT_N, span=None, dt=None, jobs=1):
    """Map p(w_B, tau) of storage/retrieval with the bus parked at each ``omega_b``.

    ``label`` may be ``"all"`` to couple every group of the device at once.
    Returns an array of shape (len(omega_b_grid), len(tau_grid)).
    """
    omega_b_grid = np.asarray(omega_b_grid, dtype=float)
    lo, hi = device.tuning.omega_min, device.tuning.omega_max
    if omega_b_grid.size == 0 or omega_b_grid.min() < lo or omega_b_grid.max() > hi:
        raise TuningRangeError(f"bus frequencies must lie in the tuning range [{lo:.6g}, {hi:.6g}] rad/s")
    _, ens = _group_and_ensemble(device, label, n, span)
    if dt is None:
        dt = auto_dt(ens, [omega_b_grid.min(), omega_b_grid.max()])
    tasks = [(device, ens, float(w), tau_grid, dt) for w in omega_b_grid]
    if jobs and jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            cols = list(pool.map(_chevron_column, tasks))
    else:
        cols = [_chevron_column(t) for t in tasks]
    return np.array(cols)


def coherence_protocol(device, label, tau_grid, n=DEFAULT_N, span=None, dt=None):
    """Qubit coherence rho_ge(tau) after storing and retrieving (|g> + |e>)/sqrt(2).

    The retrieved state is (|g> + alpha(tau)|e>)/sqrt(2) plus spin excitations,
    so rho_ge = conj(alpha)/2. Reported in the frame rotating at the group's
    center frequency, i.e. with the trivial Z rotation removed.
    """
    group = device.group(label)
    ens = discretize(group, n, span)
    bus = device.bus_at(group.center)
    dt = auto_dt(ens, [group.center]) if dt is None else dt
    amps, _ = propagate(StateVector.bus_photon(ens), ens, bus, tau_grid, dt)
    # ens.frame is the group center, so amps are already in the group's frame
    return 0.5 * np.conj(amps)


def first_minimum_time(tau_grid, p):
    """Time of the first local minimum of a sampled curve (parabolic refinement)."""
    tau_grid = np.asarray(tau_grid, dtype=float)
    p = np.asarray(p, dtype=float)
    for i in range(1, p.size - 1):
        if p[i] <= p[i - 1] and p[i] < p[i + 1]:
            denom = p[i - 1] - 2 * p[i] + p[i + 1]
            shift = 0.5 * (p[i - 1] - p[i + 1]) / denom if denom > 0 else 0.0
            return float(tau_grid[i] + shift * (tau_grid[i + 1] - tau_grid[i - 1]) / 2)
    raise InvalidParameterError("curve has no interior local minimum")


def half_swap_time(device, label, n=DEFAULT_N, span=None, dt=None, t_max=400e-9, step=0.5e-9):
    """tau_s/2 for a group, with tau_s the first minimum of the simulated storage curve."""
    taus = np.arange(0.0, t_max, step)
    p = storage_retrieval_protocol(device, label, taus, n, span, dt)
    return 0.5 * first_minimum_time(taus, p)


def ramsey_protocol(device, label, delta, tau_grid, tau_half_swap=None, n=DEFAULT_N, span=None, dt=None):
    """Single-photon Ramsey sequence on a spin group.

    Bus resonant with the group for ``tau_half_swap``, detuned by ``delta`` (rad/s,
    bus at center + delta) for each tau, resonant again for ``tau_half_swap``;
    returns the final bus population for every tau.

    The closing half-swap is the same linear map for every tau, so it is
    applied as a row vector obtained by integrating the adjoint system once.
    RK4 is a polynomial in h*A, hence its adjoint is RK4 for A^H and the
    result equals step-by-step simulation of each sequence.
    """
    group = device.group(label)
    ens = discretize(group, n, span)
    center = group.center
    if tau_half_swap is None:
        tau_half_swap = half_swap_time(device, label, n, span, dt)
    if dt is None:
        dt = auto_dt(ens, [center, center + delta])
    resonant = device.bus_at(center)
    detuned = device.bus_at(center + delta)

    first = evolve(StateVector.bus_photon(ens), ens, resonant, tau_half_swap, dt)

    # row vector x_G^H P: integrate x_G with -h under H^H (conjugated diagonal)
    nsteps = max(1, int(math.ceil(tau_half_swap / dt - 1e-9))) if tau_half_swap > 0 else 0
    h = tau_half_swap / nsteps if nsteps else 0.0
    spin_adj = np.conj(_spin_diag(ens, ens.frame))
    bus_adj = np.conj(resonant.complex_frequency - ens.frame)
    xg = np.zeros(ens.size + 1, dtype=complex)
    xg[0] = 1.0
    row = _rk4(xg, spin_adj, ens.couplings, bus_adj, -h, nsteps) if nsteps else xg

    taus = np.asarray(tau_grid, dtype=float)
    order = np.argsort(taus, kind="stable")
    out = np.empty(taus.shape)
    cur = first
    elapsed = 0.0
    for i in order:
        cur = evolve(cur, ens, detuned, taus[i] - elapsed, dt)
        elapsed = taus[i]
        out[i] = abs(np.vdot(row, cur.amplitudes)) ** 2
    return out
