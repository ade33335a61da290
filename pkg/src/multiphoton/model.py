"""Driven ladder Hamiltonian: H(t) = H0 + f(t) V.

H0 is diagonal (level energies, eV).  V has ``2 b_k`` on the (k, k+1)
off-diagonals and nothing else, so only opposite-parity neighbours are
dipole coupled.  The scalar waveform f(t) carries the carrier
``sin(w t + phase)``, the amplitude scale and, for pulses, the Gaussian
field envelope.  Times are in hbar/eV.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import ContractError, DomainError
from .units import UNITS

PARITIES = ("even", "odd")

CANONICAL_TRANSITION_EV = 2.61
CANONICAL_UPPER_SPLITTING_EV = 0.070
CANONICAL_B_RAD_S = 8.4e13
CANONICAL_B_RATIO = 0.44


@dataclass(frozen=True)
class LadderSystem:
    level_energies: tuple[float, ...]
    parity: tuple[str, ...]
    coupling_amplitudes: tuple[float, ...]  # rad/s, nearest-neighbour

    def __post_init__(self):
        E = tuple(float(x) for x in self.level_energies)
        object.__setattr__(self, "level_energies", E)
        object.__setattr__(self, "parity", tuple(self.parity))
        object.__setattr__(self, "coupling_amplitudes",
                           tuple(float(x) for x in self.coupling_amplitudes))
        if len(E) < 2:
            raise DomainError("a ladder needs at least two levels")
        if any(not math.isfinite(x) for x in E) or any(b <= a for a, b in zip(E, E[1:])):
            raise DomainError("level energies must be finite and strictly increasing")
        if len(self.parity) != len(E) or any(p not in PARITIES for p in self.parity):
            raise DomainError(f"parity must list one of {PARITIES} per level")
        if any(p == q for p, q in zip(self.parity, self.parity[1:])):
            raise DomainError("parity must alternate between neighbouring levels")
        if len(self.coupling_amplitudes) != len(E) - 1:
            raise DomainError("need exactly one coupling per neighbouring pair")
        if any(not (b >= 0 and math.isfinite(b)) for b in self.coupling_amplitudes):
            raise DomainError("couplings must be finite and non-negative")

    @property
    def n_levels(self) -> int:
        return len(self.level_energies)

    @property
    def couplings_ev(self) -> np.ndarray:
        return UNITS.rad_s_to_ev(np.asarray(self.coupling_amplitudes))

    def bare_hamiltonian(self) -> np.ndarray:
        return np.diag(np.asarray(self.level_energies, dtype=complex))

    def drive_operator(self) -> np.ndarray:
        """Hermitian coupling matrix V with entries 2 b_k on the first off-diagonals."""
        n = self.n_levels
        V = np.zeros((n, n), dtype=complex)
        idx = np.arange(n - 1)
        V[idx, idx + 1] = 2.0 * self.couplings_ev
        V[idx + 1, idx] = 2.0 * self.couplings_ev
        return V

    def transition_energy(self, i: int = 0, j: int = 1) -> float:
        return self.level_energies[j] - self.level_energies[i]

    def shifted(self, delta_ev: float) -> "LadderSystem":
        """Same system with every level moved by ``delta_ev``."""
        return LadderSystem(tuple(e + delta_ev for e in self.level_energies),
                            self.parity, self.coupling_amplitudes)

    def scaled(self, factor: float) -> "LadderSystem":
        """Energies and couplings multiplied by ``factor`` (dimensionless physics unchanged)."""
        return LadderSystem(tuple(e * factor for e in self.level_energies), self.parity,
                            tuple(b * factor for b in self.coupling_amplitudes))

    def to_dict(self) -> dict:
        return {
            "level_energies_eV": list(self.level_energies),
            "parities": list(self.parity),
            "coupling_amplitudes_rad_s": list(self.coupling_amplitudes),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LadderSystem":
        return cls(tuple(d["level_energies_eV"]), tuple(d["parities"]),
                   tuple(d["coupling_amplitudes_rad_s"]))


def alternating_parity(n: int, first: str = "even") -> tuple[str, ...]:
    start = PARITIES.index(first)
    return tuple(PARITIES[(start + k) % 2] for k in range(n))


def ladder(level_energies: Sequence[float], couplings_rad_s: Sequence[float],
           first_parity: str = "even") -> LadderSystem:
    return LadderSystem(tuple(level_energies), alternating_parity(len(level_energies), first_parity),
                        tuple(couplings_rad_s))


def canonical_system(b_rad_s: float = CANONICAL_B_RAD_S, ratio: float = CANONICAL_B_RATIO) -> LadderSystem:
    """Three-level InGaN dot: E_g=0, E_1=2.61 eV, E_2=2.68 eV, b'=0.44 b."""
    return LadderSystem(
        (0.0, CANONICAL_TRANSITION_EV, CANONICAL_TRANSITION_EV + CANONICAL_UPPER_SPLITTING_EV),
        ("even", "odd", "even"),
        (b_rad_s, ratio * b_rad_s),
    )


@dataclass(frozen=True)
class DriveSpec:
    """Monochromatic drive or Gaussian pulse.

    ``duration_fwhm`` is in seconds and refers to the field envelope
    ``exp(-2 ln2 t^2 / fwhm^2)``, centred on t = 0.
    """

    photon_energy: float
    kind: str = "monochromatic"
    amplitude_scale: float = 1.0
    duration_fwhm: float | None = None
    peak_scale: float = 1.0
    carrier_phase: float = 0.0

    def __post_init__(self):
        if self.kind not in ("monochromatic", "gaussian_pulse"):
            raise DomainError(f"unknown drive kind {self.kind!r}")
        if not (self.photon_energy > 0 and math.isfinite(self.photon_energy)):
            raise DomainError("photon_energy must be positive")
        if self.kind == "gaussian_pulse" and not (self.duration_fwhm and self.duration_fwhm > 0):
            raise DomainError("pulses need a positive duration_fwhm")

    @property
    def is_pulse(self) -> bool:
        return self.kind == "gaussian_pulse"

    @property
    def period(self) -> float:
        """Carrier period in hbar/eV."""
        return 2.0 * math.pi / self.photon_energy

    @property
    def duration_internal(self) -> float:
        return UNITS.seconds_to_internal(self.duration_fwhm)

    @property
    def peak_amplitude(self) -> float:
        """Largest |f(t)| multiplier on V."""
        s = self.amplitude_scale
        return abs(s * self.peak_scale) if self.is_pulse else abs(s)

    def envelope(self, t):
        if not self.is_pulse:
            return np.ones_like(np.asarray(t, dtype=float))
        F = self.duration_internal
        return np.exp(-2.0 * math.log(2.0) * np.asarray(t, dtype=float) ** 2 / F**2)

    def waveform(self) -> Callable[[np.ndarray], np.ndarray]:
        """Vectorised f(t) multiplying the drive operator."""
        w, phi = self.photon_energy, self.carrier_phase
        amp = self.amplitude_scale * (self.peak_scale if self.is_pulse else 1.0)
        if not self.is_pulse:
            return lambda t: amp * np.sin(w * np.asarray(t, dtype=float) + phi)
        return lambda t: amp * self.envelope(t) * np.sin(w * np.asarray(t, dtype=float) + phi)


def monochromatic(photon_energy: float, scale: float = 1.0, phase: float = 0.0) -> DriveSpec:
    return DriveSpec(photon_energy=photon_energy, amplitude_scale=scale, carrier_phase=phase)


def gaussian_pulse(center_energy: float, duration_fwhm: float, peak_scale: float = 1.0,
                   phase: float = 0.0) -> DriveSpec:
    return DriveSpec(photon_energy=center_energy, kind="gaussian_pulse",
                     duration_fwhm=duration_fwhm, peak_scale=peak_scale, carrier_phase=phase)


def hamiltonian_at(system: LadderSystem, drive: DriveSpec, t: float) -> np.ndarray:
    """H(t) for a monochromatic drive (hbar = 1, eV)."""
    if drive.is_pulse:
        raise ContractError("hamiltonian_at takes a monochromatic drive; use the pulsed module")
    if not math.isfinite(t):
        raise DomainError("t must be finite")
    f = float(drive.waveform()(t))
    return system.bare_hamiltonian() + f * system.drive_operator()


def max_hamiltonian_norm(system: LadderSystem, drive: DriveSpec) -> float:
    """Upper bound on the spectral norm of H(t) over all t."""
    return (float(np.max(np.abs(system.level_energies)))
            + drive.peak_amplitude * float(np.linalg.norm(system.drive_operator(), 2)))
