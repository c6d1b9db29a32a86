import numpy as np
import pytest

from hybridsim.device import reference_group
from hybridsim.errors import FitError, InvalidGridError, InvalidParameterError
from hybridsim.flux import QubitBusPair
from hybridsim.spectral import BusParams, EnsembleGroup, single_line_density
from hybridsim.spectroscopy import (
    TransmissionSpectrum,
    avoided_crossings,
    fft_spectrum,
    fit_curve,
    qubit_bus_anticrossing,
    ramsey_fringe_model,
    storage_retrieval_times,
    transmission,
    transmission_spectrum,
    vacuum_rabi_splitting,
)
from hybridsim.units import ghz, mhz, to_mhz


def test_bare_bus_is_unit_lorentzian():
    grp = EnsembleGroup("-I", 0.0, single_line_density(ghz(2.84), mhz(1.6)))
    bus = BusParams(ghz(2.9), mhz(1.0))
    om = bus.omega_b + np.linspace(-mhz(10), mhz(10), 4001)
    s = transmission(grp, bus, om)
    assert abs(s[2000]) == pytest.approx(1.0, rel=1e-12)
    # fit a Lorentzian to |S21|^2 and recover kappa as FWHM
    fit = fit_curve(lambda x, a, c, w: a * (w / 2) ** 2 / ((x - c) ** 2 + (w / 2) ** 2),
                    om, np.abs(s) ** 2, [1.0, bus.omega_b + mhz(0.1), mhz(1.5)])
    assert fit.params["p2"] == pytest.approx(bus.kappa, rel=1e-3)


def test_single_line_splitting_is_two_g():
    g = mhz(2.9)
    grp = EnsembleGroup("-I", g, single_line_density(ghz(2.84), mhz(0.2)))
    split = vacuum_rabi_splitting(grp, BusParams(ghz(2.84), mhz(0.1)))
    assert split == pytest.approx(2 * g, rel=2e-3)


def test_triplet_splitting_frozen():
    grp = reference_group("-I")
    split = vacuum_rabi_splitting(grp, BusParams(grp.center, 1 / 1.5e-6))
    assert to_mhz(split) == pytest.approx(7.1932, abs=1e-3)


def test_isolated_crossing_at_group_center():
    grp = reference_group("-III")
    wb = grp.center + np.arange(-mhz(10), mhz(10), mhz(0.25))
    cross = avoided_crossings([grp], 1 / 1.5e-6, wb, mhz(15))
    assert len(cross) == 1
    assert cross[0] == pytest.approx(grp.center, abs=mhz(0.01))


def test_transmission_spectrum_validation():
    om = np.linspace(1, 2, 11)
    TransmissionSpectrum(om, np.zeros(11))
    with pytest.raises(InvalidGridError):
        TransmissionSpectrum(om ** 2, np.zeros(11))
    with pytest.raises(InvalidParameterError):
        TransmissionSpectrum(om, np.full(11, np.nan))
    grp = reference_group("-I")
    spec = transmission_spectrum(grp, BusParams(grp.center, 1e6), grp.center + np.linspace(-1e8, 1e8, 101))
    assert spec.s21_db.max() < 0.0


def test_anticrossing():
    pair = QubitBusPair(ghz(2.607), mhz(7.2))
    lo, hi = qubit_bus_anticrossing(pair, pair.omega_q)
    assert to_mhz(hi - lo) == pytest.approx(14.4, abs=1e-9)
    wb = pair.omega_q + np.linspace(-mhz(200), mhz(200), 4001)
    lo, hi = qubit_bus_anticrossing(pair, wb)
    assert np.all(hi - lo >= 2 * pair.g_q * (1 - 1e-12))
    assert wb[np.argmin(hi - lo)] == pytest.approx(pair.omega_q)
    d = mhz(500)
    lo, hi = qubit_bus_anticrossing(pair, pair.omega_q + d)
    assert abs(lo - pair.omega_q) <= pair.g_q ** 2 / d


def test_fft_single_tone():
    dt = 2.5e-9
    t = np.arange(800) * dt
    peaks = fft_spectrum(np.cos(2 * np.pi * 38e6 * t), dt)
    assert len(peaks) == 1
    assert to_mhz(peaks.frequencies[0]) == pytest.approx(38.0, abs=0.3)
    # within one interpolated bin of the record length
    assert abs(peaks.frequencies[0] - 2 * np.pi * 38e6) < 2 * np.pi * 0.5 / (800 * dt)


def test_fft_rejects_short_series():
    with pytest.raises(InvalidParameterError):
        fft_spectrum(np.zeros(63), 1e-9)
    with pytest.raises(InvalidParameterError):
        fft_spectrum(np.zeros(64), 1e-9, window="kaiser")


def test_fft_of_fringe_model_triplet():
    t = np.arange(0, 4e-6, 2.5e-9)
    y = ramsey_fringe_model(t, mhz(13), mhz(2.17), 1e-6)
    peaks = fft_spectrum(y, 2.5e-9).strongest(3)
    assert to_mhz(peaks.frequencies) == pytest.approx([10.83, 13.0, 15.17], abs=0.1)


def test_fringe_model_limits():
    assert ramsey_fringe_model(0.0, mhz(13), mhz(2.17), 390e-9) == pytest.approx(3.0)
    t = np.linspace(0, 1e-6, 50)
    assert np.allclose(ramsey_fringe_model(t, mhz(13), 0.0, 390e-9),
                       3 * np.exp(-t / 390e-9) * np.cos(mhz(13) * t))
    with pytest.raises(InvalidParameterError):
        ramsey_fringe_model(t, 1.0, 1.0, 0.0)


def test_fit_t2_star(rng):
    t = np.arange(0, 2e-6, 5e-9)
    y = 0.1 * ramsey_fringe_model(t, mhz(13), mhz(2.17), 390e-9) + 0.5
    y = y + rng.normal(0, 0.01, t.size)
    fit = fit_curve("ramsey_fringe", t, y, [0.1, mhz(13.1), mhz(2.1), 300e-9, 0.0, 0.5])
    assert fit.params["t2_star"] * 1e9 == pytest.approx(390, abs=30)
    assert fit.residual_norm <= fit.initial_residual_norm


def test_fit_lorentzian_triplet(rng):
    om = ghz(2.84) + np.linspace(-mhz(10), mhz(10), 801)
    true = [1.0, ghz(2.84), mhz(2.17), mhz(1.0), 0.05]
    from hybridsim.spectroscopy import MODELS

    f = MODELS["lorentzian_multiplet"][0]
    y = f(om, *true) + rng.normal(0, 0.005, om.size)
    fit = fit_curve("lorentzian_multiplet", om, y, [0.9, ghz(2.84) + mhz(0.2), mhz(2.0), mhz(1.2), 0.0])
    assert to_mhz(fit.params["splitting"]) == pytest.approx(2.17, abs=0.02)
    assert to_mhz(fit.errors["splitting"]) < 0.02


@pytest.mark.parametrize("model,true,start", [
    ("ramsey_fringe", [0.2, mhz(38), mhz(2.3), 200e-9, 0.3, 0.4], [0.19, mhz(38.2), mhz(2.2), 180e-9, 0.25, 0.41]),
    ("damped_rabi", [1.0, 120e-9, mhz(3.0), 0.02], [0.9, 100e-9, mhz(3.1), 0.0]),
])
def test_noiseless_recovery(model, true, start):
    from hybridsim.spectroscopy import MODELS

    x = np.linspace(0, 1e-6, 600)
    y = MODELS[model][0](x, *true)
    fit = fit_curve(model, x, y, start)
    assert np.allclose(np.abs(fit.values), np.abs(true), rtol=1e-4)


def test_constant_fit_is_exact():
    fit = fit_curve("constant", np.arange(10.0), np.full(10, 3.25), [0.0])
    assert fit.params["c"] == pytest.approx(3.25, abs=1e-12)
    assert fit.residual_norm < 1e-12


def test_fit_errors():
    with pytest.raises(InvalidParameterError):
        fit_curve("constant", np.arange(2.0), np.ones(2), [0.0])
    with pytest.raises(InvalidParameterError):
        fit_curve("nope", np.arange(10.0), np.ones(10), [0.0])
    with pytest.raises(FitError) as info:
        fit_curve("ramsey_fringe", np.linspace(0, 1e-6, 50), np.random.default_rng(0).normal(size=50),
                  [1, 1e8, 1e7, 1e-7, 0, 0], max_iterations=1)
    assert np.isfinite(info.value.residual_norm)


def test_rabi_linewidth_recovery(device):
    from hybridsim.spectral import rabi_protocol

    grp = device.group("-I")
    bus = device.bus_at(grp.center)
    t = np.linspace(0, 400e-9, 161)
    y = rabi_protocol(grp, bus, t)
    kw = dict(g=grp.g, center=grp.center, hf_splitting=mhz(2.3), bus=bus)
    fit = fit_curve("rabi_linewidth", t, y, [mhz(2.2)], model_kwargs=kw)
    assert to_mhz(abs(fit.params["fwhm"])) == pytest.approx(1.6, abs=0.1)


def test_storage_retrieval_times():
    t = np.linspace(0, 1, 1001)
    y = np.cos(np.pi * t / 0.4) ** 2 * np.exp(-t)
    ts, tr, pr = storage_retrieval_times(t, y)
    assert ts == pytest.approx(0.2, abs=1e-4)
    assert tr == pytest.approx(0.4, abs=0.02)
    with pytest.raises(InvalidParameterError):
        storage_retrieval_times(t, t)
