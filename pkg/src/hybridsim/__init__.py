"""
hybridsim: a superconducting qubit, a tunable bus resonator and an
inhomogeneously broadened NV spin ensemble in the single-excitation limit.

Two independent routes compute the ensemble dynamics: transfer functions
inverted numerically from the frequency domain (``spectral``) and direct
integration of a discretized set of spin oscillators (``oracle``).
"""

__version__ = "0.1.0"

from .device import HybridDeviceModel, reference_device, reference_group
from .errors import *
from .flux import (
    FluxSchedule,
    QubitBusPair,
    TuningCurve,
    flux_of_omega,
    landau_zener_probability,
    omega_of_flux,
    reference_aswap_schedule,
    resonant_swap_time,
    simulate_sweep,
)
from .oracle import (
    DiscretizedEnsemble,
    StateVector,
    chevron_scan,
    coherence_protocol,
    discretize,
    evolve,
    ramsey_protocol,
    storage_retrieval_protocol,
)
from .readout import (
    ReadoutErrorModel,
    SCurveModel,
    calibrate,
    estimate_thermal_population,
    excited_probability,
    scurve,
    switching_probability,
)
from .spectral import (
    BusParams,
    EnsembleGroup,
    FrequencyGrid,
    LorentzianComponent,
    SpinDensity,
    inverse_laplace,
    make_hyperfine_density,
    memory_kernel,
    rabi_protocol,
    ramsey_spectral,
    sample_transfer_functions,
    transfer_t1,
    transfer_t2,
    transfer_t3,
    transfer_t4,
)
from .spectroscopy import (
    PeakSet,
    TransmissionSpectrum,
    fft_spectrum,
    fit_curve,
    qubit_bus_anticrossing,
    ramsey_fringe_model,
    transmission,
)
