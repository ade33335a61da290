"""Physical constants, unit conversions and model-parameter derivations.

Internal convention: energies in eV, hbar = 1, so times are measured in
units of hbar/eV (about 0.658 fs) and angular frequencies coincide with
energies.  Couplings are quoted in rad/s at the API boundary and converted
to eV internally.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError

# CODATA 2018.  e, h, c are exact by SI definition.
ELEMENTARY_CHARGE = 1.602176634e-19  # C
PLANCK = 6.62607015e-34  # J s
HBAR = PLANCK / (2.0 * math.pi)  # J s
SPEED_OF_LIGHT = 299792458.0  # m/s
VACUUM_PERMITTIVITY = 8.8541878128e-12  # F/m
HBAR_EV_S = HBAR / ELEMENTARY_CHARGE  # 6.582119569...e-16 eV s
PLANCK_EV_S = PLANCK / ELEMENTARY_CHARGE

E_NM = ELEMENTARY_CHARGE * 1e-9  # one e*nm in C*m

DEFAULT_REFRACTIVE_INDEX_GAN = 2.4


@dataclass(frozen=True)
class UnitSystem:
    """Conversions between SI and the internal (eV, hbar=1) units."""

    hbar_ev_s: float = HBAR_EV_S

    @property
    def time_unit_s(self) -> float:
        return self.hbar_ev_s

    def ev_to_rad_s(self, energy_ev):
        return energy_ev / self.hbar_ev_s

    def rad_s_to_ev(self, omega):
        return omega * self.hbar_ev_s

    def seconds_to_internal(self, t_s):
        return t_s / self.hbar_ev_s

    def internal_to_seconds(self, t):
        return t * self.hbar_ev_s


UNITS = UnitSystem()


@dataclass(frozen=True)
class ExperimentalParams:
    radiative_lifetime: float = 250e-12  # s
    transition_energy: float = 2.61  # eV
    refractive_index: float = DEFAULT_REFRACTIVE_INDEX_GAN
    avg_power_density: float = 283e3 * 1e4  # W/m^2 (283 kW/cm^2)
    rep_rate: float = 80e6  # Hz
    pulse_duration_fwhm: float = 100e-15  # s

    def __post_init__(self):
        for name in ("radiative_lifetime", "transition_energy", "refractive_index",
                     "avg_power_density", "rep_rate", "pulse_duration_fwhm"):
            if not getattr(self, name) > 0:
                raise DomainError(f"{name} must be strictly positive")
        if self.refractive_index < 1:
            raise DomainError("refractive_index must be >= 1")


def _check_positive(**kw):
    for name, value in kw.items():
        if not (value > 0 and math.isfinite(value)):
            raise DomainError(f"{name} must be positive and finite, got {value!r}")


def dipole_from_lifetime(tau: float, E_transition: float, n: float = DEFAULT_REFRACTIVE_INDEX_GAN) -> float:
    """Transition dipole moment |M| in e*nm from a radiative lifetime.

    Evaluates ``sqrt(3 eps0 c^3 hbar / (tau 8 pi^2 nu^3 n))`` with ``nu = E/h``
    the ordinary (not angular) transition frequency; with that reading the
    expression equals the usual spontaneous-emission rate formula.
    """
    _check_positive(tau=tau, E_transition=E_transition, n=n)
    if n < 1:
        raise DomainError("refractive index must be >= 1")
    nu = E_transition / PLANCK_EV_S
    m2 = (3.0 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT**3 * HBAR
          / (tau * 8.0 * math.pi**2 * nu**3 * n))
    return math.sqrt(m2) / E_NM


def lifetime_from_dipole(M: float, E_transition: float, n: float = DEFAULT_REFRACTIVE_INDEX_GAN) -> float:
    """Inverse of :func:`dipole_from_lifetime`; returns seconds."""
    _check_positive(M=M, E_transition=E_transition, n=n)
    nu = E_transition / PLANCK_EV_S
    m_si = M * E_NM
    return (3.0 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT**3 * HBAR
            / (m_si**2 * 8.0 * math.pi**2 * nu**3 * n))


def field_from_avg_intensity(I_avg: float, rep_rate: float, duration: float) -> float:
    """Peak field amplitude (V/m) during a pulse from the time-averaged intensity.

    The pulse energy is assumed to be spread uniformly over ``duration``:
    ``E0 = sqrt(2 I_avg / (c eps0 f_rep duration))``.  ``I_avg = 0`` gives 0.
    """
    if I_avg < 0 or not math.isfinite(I_avg):
        raise DomainError(f"I_avg must be non-negative, got {I_avg!r}")
    _check_positive(rep_rate=rep_rate, duration=duration)
    return math.sqrt(2.0 * I_avg / (SPEED_OF_LIGHT * VACUUM_PERMITTIVITY * rep_rate * duration))


def rabi_coupling(M: float, E0: float) -> float:
    """Coupling ``b = M E0 / (2 hbar)`` in rad/s (half the Rabi frequency).

    ``M`` in e*nm, ``E0`` in V/m.
    """
    if M < 0 or E0 < 0:
        raise DomainError("dipole moment and field must be non-negative")
    return M * E_NM * E0 / (2.0 * HBAR)


def rabi_coupling_ev(M: float, E0: float) -> float:
    """Same coupling as :func:`rabi_coupling` computed directly in eV.

    e*nm times V/m is 1e-9 eV, so no SI constants enter this route.
    """
    if M < 0 or E0 < 0:
        raise DomainError("dipole moment and field must be non-negative")
    return M * E0 * 1e-9 / 2.0


def classical_polarization_ratio(chi2: float, chi3: float, E: float) -> float:
    """Amplitude ratio of second- to third-order polarization, chi2 / (chi3 E)."""
    _check_positive(chi2=chi2, chi3=chi3, E=E)
    return chi2 / (chi3 * E)


def parameter_chain(params: ExperimentalParams = ExperimentalParams(),
                    field_override: float | None = None) -> dict:
    """Run lifetime -> dipole -> field -> coupling for a parameter set.

    ``field_override`` (V/m) replaces the field computed from the average
    intensity; the canonical 2.2 MV/cm value is not what the intensity formula
    gives at 283 kW/cm^2.
    """
    M = dipole_from_lifetime(params.radiative_lifetime, params.transition_energy,
                             params.refractive_index)
    E0_formula = field_from_avg_intensity(params.avg_power_density, params.rep_rate,
                                          params.pulse_duration_fwhm)
    E0 = E0_formula if field_override is None else field_override
    b = rabi_coupling(M, E0)
    return {
        "dipole_e_nm": M,
        "field_from_intensity_V_m": E0_formula,
        "field_used_V_m": E0,
        "b_rad_s": b,
        "b_eV": UNITS.rad_s_to_ev(b),
    }
