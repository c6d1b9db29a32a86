"""Device parameters for the qubit / tunable bus / NV-ensemble circuit."""

from __future__ import annotations

from dataclasses import dataclass, replace

from .errors import InvalidParameterError, UnknownGroupError
from .flux import QubitBusPair, TuningCurve
from .spectral import (
    GROUP_LABELS,
    BusParams,
    EnsembleGroup,
    _normalize_label,
    make_hyperfine_density,
)
from .units import ghz, mhz

# Group centers, collective couplings and hyperfine linewidths fitted in the experiment.
REFERENCE_GROUPS = {
    "-I": (2.84, 2.9, 1.6),
    "-III": (2.865, 3.8, 2.4),
    "+III": (2.89, 3.8, 2.4),
    "+I": (2.91, 2.9, 1.6),
}
REFERENCE_HF_SPLITTING_MHZ = 2.3
REFERENCE_T_CAV = 1.5e-6


@dataclass(frozen=True)
class HybridDeviceModel:
    """Everything needed to simulate one experiment.

    ``kappa`` is the bus energy decay rate (rad/s). If ``quality_factor`` is set
    instead, the rate follows the bus frequency as kappa = w_B / Q.
    """

    qubit: QubitBusPair
    p_e_eq: float
    tuning: TuningCurve
    groups: dict
    kappa: float = 1.0 / REFERENCE_T_CAV
    quality_factor: float = None

    def __post_init__(self):
        groups = {}
        for label, grp in dict(self.groups).items():
            groups[_normalize_label(label)] = grp
        object.__setattr__(self, "groups", groups)
        if not 0 <= self.p_e_eq < 0.5:
            raise InvalidParameterError("p_e_eq must lie in [0, 0.5)")
        if self.kappa < 0:
            raise InvalidParameterError("kappa must be non-negative")
        if self.quality_factor is not None and not self.quality_factor > 0:
            raise InvalidParameterError("quality_factor must be positive")

    def group(self, label):
        try:
            key = _normalize_label(label)
        except InvalidParameterError as exc:
            raise UnknownGroupError(str(exc)) from None
        if key not in self.groups:
            raise UnknownGroupError(f"device has no group {label!r}")
        return self.groups[key]

    def bus_kappa(self, omega_b):
        if self.quality_factor is not None:
            return omega_b / self.quality_factor
        return self.kappa

    def bus_at(self, omega_b):
        return BusParams(omega_b, self.bus_kappa(omega_b))

    @property
    def all_groups(self):
        return tuple(self.groups[k] for k in GROUP_LABELS if k in self.groups)

    def with_group(self, group):
        groups = dict(self.groups)
        groups[group.label] = group
        return replace(self, groups=groups)


def reference_group(label, hf_splitting=None, fwhm=None, g=None, gamma0=0.0):
    """Ensemble group with the fitted parameters of the experiment, optionally overridden (rad/s)."""
    label = _normalize_label(label)
    center, g_mhz, fwhm_mhz = REFERENCE_GROUPS[label]
    split = mhz(REFERENCE_HF_SPLITTING_MHZ) if hf_splitting is None else hf_splitting
    density = make_hyperfine_density(ghz(center), split, mhz(fwhm_mhz) if fwhm is None else fwhm)
    return EnsembleGroup(label, mhz(g_mhz) if g is None else g, density, gamma0)


def reference_device(**overrides):
    """Device with the parameter set used for every theory curve of the experiment."""
    kw = dict(
        qubit=QubitBusPair(ghz(2.607), mhz(7.2)),
        p_e_eq=0.08,
        tuning=TuningCurve.from_range(ghz(3.004), ghz(2.5)),
        groups={label: reference_group(label) for label in GROUP_LABELS},
    )
    kw.update(overrides)
    return HybridDeviceModel(**kw)
