"""Floquet and time-domain simulation of multi-photon excitation in driven ladder systems,
plus the fits used to reduce power, polarization and lifetime measurements."""

__version__ = "0.1.0"

from .model import LadderSystem, DriveSpec, canonical_system, ladder, monochromatic, gaussian_pulse  # noqa: F401
