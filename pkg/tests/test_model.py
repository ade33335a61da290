import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from multiphoton.errors import ContractError, DomainError
from multiphoton.model import (DriveSpec, LadderSystem, canonical_system, gaussian_pulse,
                               hamiltonian_at, ladder, monochromatic)
from multiphoton.units import UNITS


def test_canonical_system(system):
    assert system.transition_energy(0, 1) == 2.61
    assert system.transition_energy(1, 2) == pytest.approx(0.070, abs=1e-12)
    assert system.parity == ("even", "odd", "even")
    b, b2 = system.coupling_amplitudes
    assert b == 8.4e13 and b2 == pytest.approx(0.44 * b)
    assert b / UNITS.ev_to_rad_s(2.61) == pytest.approx(0.0212, abs=1e-4)


def test_h_at_zero_is_diagonal(system):
    H = hamiltonian_at(system, monochromatic(0.87), 0.0)
    assert np.array_equal(H, np.diag(system.level_energies).astype(complex))
    assert np.allclose(np.diag(H).real, [0.0, 2.61, 2.68], atol=1e-14)


def test_h_quarter_period(system):
    d = monochromatic(0.87)
    H = hamiltonian_at(system, d, (math.pi / 2) / 0.87)
    b = UNITS.rad_s_to_ev(8.4e13)
    assert H[0, 1] == pytest.approx(2 * b, rel=1e-12)
    assert H[1, 2] == pytest.approx(2 * 0.44 * b, rel=1e-12)
    assert H[0, 2] == 0


@given(st.floats(-1e4, 1e4), st.floats(0.3, 3.0), st.floats(-2.0, 2.0))
def test_h_hermitian_traceless_periodic(t, w, s):
    sysm = canonical_system()
    d = monochromatic(w, s)
    H = hamiltonian_at(sysm, d, t)
    assert np.array_equal(H, H.conj().T)
    assert np.trace(H - sysm.bare_hamiltonian()) == 0
    assert H[0, 2] == 0 and H[2, 0] == 0
    H2 = hamiltonian_at(sysm, d, t + d.period)
    assert np.max(np.abs(H2 - H)) < 1e-10 * max(1.0, abs(t))


def test_pulse_rejected(system):
    with pytest.raises(ContractError):
        hamiltonian_at(system, gaussian_pulse(0.87, 100e-15), 0.0)
    with pytest.raises(DomainError):
        hamiltonian_at(system, monochromatic(0.87), float("inf"))


@pytest.mark.parametrize("kw", [
    dict(level_energies=(0.0,), parity=("even",), coupling_amplitudes=()),
    dict(level_energies=(0.0, 0.0), parity=("even", "odd"), coupling_amplitudes=(1.0,)),
    dict(level_energies=(0.0, 1.0), parity=("even", "even"), coupling_amplitudes=(1.0,)),
    dict(level_energies=(0.0, 1.0), parity=("even", "odd"), coupling_amplitudes=(-1.0,)),
    dict(level_energies=(0.0, 1.0), parity=("even", "odd"), coupling_amplitudes=(1.0, 1.0)),
    dict(level_energies=(0.0, 1.0), parity=("even", "up"), coupling_amplitudes=(1.0,)),
])
def test_ladder_validation(kw):
    with pytest.raises(DomainError):
        LadderSystem(**kw)


def test_drive_validation():
    with pytest.raises(DomainError):
        monochromatic(0.0)
    with pytest.raises(DomainError):
        DriveSpec(1.0, kind="gaussian_pulse")
    with pytest.raises(DomainError):
        DriveSpec(1.0, kind="square")


def test_roundtrip_dict(system):
    assert LadderSystem.from_dict(system.to_dict()) == system


def test_n_level_generalization():
    s = ladder((0.0, 1.0, 2.1, 3.3, 4.6), (1e13,) * 4)
    V = s.drive_operator()
    assert s.parity == ("even", "odd", "even", "odd", "even")
    assert np.count_nonzero(V) == 8
    assert np.all(np.diag(V) == 0)


def test_pulse_envelope():
    d = gaussian_pulse(0.87, 100e-15)
    F = d.duration_internal
    assert d.envelope(F / 2) == pytest.approx(math.sqrt(0.5), rel=1e-12)
    assert d.envelope(0.0) == 1.0
