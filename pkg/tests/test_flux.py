import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from hybridsim.errors import (
    InvalidParameterError,
    SingularFluxError,
    StepSizeError,
    TuningRangeError,
)
from hybridsim.flux import (
    FluxSchedule,
    QubitBusPair,
    TuningCurve,
    flux_of_omega,
    landau_zener_probability,
    linear_sweep,
    omega_of_flux,
    reference_aswap_schedule,
    resonant_swap_time,
    simulate_sweep,
)
from hybridsim.units import ghz, mhz, ns

CURVE = TuningCurve.from_range(ghz(3.004), ghz(2.5))
PAIR = QubitBusPair(ghz(2.607), mhz(7.2))


def test_tuning_range_endpoints():
    assert omega_of_flux(CURVE, 0.0) == pytest.approx(ghz(3.004), rel=1e-15)
    assert omega_of_flux(CURVE, 0.45) == pytest.approx(ghz(2.5), rel=1e-12)
    assert CURVE.omega_min == pytest.approx(ghz(2.5), rel=1e-12)
    assert CURVE.participation == pytest.approx(0.08226, rel=1e-3)


def test_tuning_is_even_and_monotone():
    phi = np.linspace(0, 0.49, 200)
    w = omega_of_flux(CURVE, phi)
    assert np.all(np.diff(w) < 0)
    assert np.allclose(omega_of_flux(CURVE, -phi), w)


@settings(max_examples=60, deadline=None)
@given(st.floats(0.0, 0.45))
def test_flux_round_trip(phi):
    # d(omega)/d(phi) vanishes at phi = 0, so flux is only recoverable to ~sqrt(eps)
    w = omega_of_flux(CURVE, phi)
    back = flux_of_omega(CURVE, w)
    assert omega_of_flux(CURVE, back) == pytest.approx(w, rel=1e-14)
    assert back == pytest.approx(phi, abs=1e-7)


def test_tuning_errors():
    with pytest.raises(SingularFluxError):
        omega_of_flux(CURVE, 0.5)
    with pytest.raises(TuningRangeError):
        flux_of_omega(CURVE, ghz(2.4))
    with pytest.raises(TuningRangeError):
        flux_of_omega(CURVE, ghz(3.1))
    with pytest.raises(InvalidParameterError):
        TuningCurve.from_range(ghz(2.0), ghz(2.5))


def test_schedule_geometry():
    s = reference_aswap_schedule()
    assert s.duration == pytest.approx(ns(450))
    times, freqs = s.breakpoints
    assert np.allclose(times, ns(np.array([0, 60, 410, 450])))
    assert s.omega_at(ns(60)) == pytest.approx(ghz(2.589))
    assert s.omega_at(ns(1000)) == pytest.approx(ghz(2.687))
    assert s.scaled(2).duration == pytest.approx(ns(900))
    s.check_range(CURVE.omega_min, CURVE.omega_max)
    with pytest.raises(TuningRangeError):
        FluxSchedule(ghz(2.4), ((ghz(2.6), ns(10)),)).check_range(CURVE.omega_min, CURVE.omega_max)
    with pytest.raises(InvalidParameterError):
        FluxSchedule(ghz(2.5), ((ghz(2.6), 0.0),))


def test_resonant_swap_time():
    assert resonant_swap_time(PAIR) * 1e9 == pytest.approx(34.722, abs=1e-3)
    with pytest.raises(InvalidParameterError):
        QubitBusPair(ghz(2.6), 0.0)


def _reference_sweep(pair, schedule):
    def rhs(t, y):
        psi = y[:2] + 1j * y[2:]
        d = schedule.omega_at(t) - pair.omega_q
        h = np.array([[0, pair.g_q], [pair.g_q, d]])
        dpsi = -1j * h @ psi
        return np.concatenate([dpsi.real, dpsi.imag])

    sol = solve_ivp(rhs, (0, schedule.duration), [1, 0, 0, 0], method="DOP853", rtol=1e-12, atol=1e-12,
                    max_step=ns(0.5))
    y = sol.y[:, -1]
    return y[1] ** 2 + y[3] ** 2


def test_magnus_matches_reference_integrator():
    s = reference_aswap_schedule().scaled(0.2)
    assert simulate_sweep(PAIR, s) == pytest.approx(_reference_sweep(PAIR, s), abs=1e-8)


def test_sweep_is_unitary():
    psi = simulate_sweep(PAIR, reference_aswap_schedule(), return_state=True)
    assert np.vdot(psi, psi).real == pytest.approx(1.0, abs=1e-12)


def test_sweep_step_limit():
    with pytest.raises(StepSizeError):
        simulate_sweep(PAIR, reference_aswap_schedule(), dt=ns(0.2))


def test_adiabatic_limit():
    # a slow, wide sweep ends with the photon in the bus
    # LZ exponent 2 pi g^2 / rate = 20 and end-point mixing (g/D)^2 ~ 5e-5
    s = linear_sweep(PAIR, mhz(1000), ns(20000))
    assert simulate_sweep(PAIR, s, dt=ns(0.1)) > 0.999


@pytest.mark.parametrize("duration_ns", [33.3, 66.7, 133.3])
def test_landau_zener_formula(duration_ns):
    half = mhz(2000)
    s = linear_sweep(PAIR, half, ns(duration_ns))
    rate = 2 * half / ns(duration_ns)
    diabatic = 1.0 - simulate_sweep(PAIR, s, dt=ns(0.01))
    # finite endpoints add O(g^2/half^2) oscillations around the asymptotic value
    assert diabatic == pytest.approx(landau_zener_probability(PAIR, rate), abs=6e-3)


def test_faster_schedule_transfers_less():
    base = reference_aswap_schedule()
    assert simulate_sweep(PAIR, base.scaled(0.1)) < simulate_sweep(PAIR, base)
    assert simulate_sweep(PAIR, base.scaled(0.1)) < 0.9


def test_landau_zener_input():
    with pytest.raises(InvalidParameterError):
        landau_zener_probability(PAIR, 0.0)
    assert landau_zener_probability(PAIR, 1e30) == pytest.approx(1.0)
    assert landau_zener_probability(PAIR, 2 * math.pi * PAIR.g_q ** 2) == pytest.approx(math.exp(-1))
