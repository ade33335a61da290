"""Fixed-step RK4 integration of i dpsi/dt = H(t) psi.

For a linear equation one classical RK4 step is a matrix,

    M_n = I + dt/6 (k1 + 2 k2 + 2 k3 + k4)
    k1 = A(t),  k2 = A(t+dt/2)(I + dt/2 k1),  k3 = A(t+dt/2)(I + dt/2 k2),
    k4 = A(t+dt)(I + dt k3),                   A(t) = -i H(t),

so whole blocks of steps are built at once and combined with batched
matrix products.  The result is the ordinary RK4 recursion; only the
bookkeeping is vectorised.  Nothing is renormalised: the norm drift is the
step-size diagnostic.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import NumericError, PreconditionError, StepSizeError
from .model import DriveSpec, LadderSystem, max_hamiltonian_norm
from .units import UNITS

NORM_TOL = 1e-8
MIN_STEPS_PER_PERIOD = 200
STEP_CAP = 0.02  # max dt * ||H||
STEP_SAFETY = 0.01  # default dt * ||H||; 0.02 leaks ~1e-8 of norm per 1e4 periods
CHUNK = 4096


def step_cap(system: LadderSystem, drive: DriveSpec) -> float:
    return min(drive.period / MIN_STEPS_PER_PERIOD, STEP_CAP / max_hamiltonian_norm(system, drive))


def default_step(system: LadderSystem, drive: DriveSpec) -> float:
    return min(drive.period / MIN_STEPS_PER_PERIOD, STEP_SAFETY / max_hamiltonian_norm(system, drive))


def steps_per_period(system: LadderSystem, drive: DriveSpec, multiple: int = MIN_STEPS_PER_PERIOD) -> int:
    """Smallest multiple of ``multiple`` giving a step no larger than :func:`default_step`."""
    k = math.ceil(drive.period / default_step(system, drive) / multiple - 1e-12)
    return max(1, k) * multiple


@dataclass
class QuantumState:
    amplitudes: np.ndarray

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)

    @classmethod
    def basis(cls, n: int, k: int = 0) -> "QuantumState":
        a = np.zeros(n, dtype=complex)
        a[k] = 1.0
        return cls(a)

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass
class Trajectory:
    times: np.ndarray  # hbar/eV
    states: np.ndarray  # (n_samples, n_levels)

    @property
    def populations(self) -> np.ndarray:
        return np.abs(self.states) ** 2

    @property
    def final(self) -> QuantumState:
        return QuantumState(self.states[-1].copy())

    @property
    def times_s(self) -> np.ndarray:
        return UNITS.internal_to_seconds(self.times)

    def norm_drift(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.states, axis=1) - 1.0)))

    def to_csv(self, path) -> None:
        n = self.states.shape[1]
        header = ["t_s"]
        header += [f"{p}_a{k}" for k in range(n) for p in ("re", "im")]
        header += [f"pop_{k}" for k in range(n)]
        pops = self.populations
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for t, psi, p in zip(self.times_s, self.states, pops):
                row = [t]
                for a in psi:
                    row += [a.real, a.imag]
                row += list(p)
                w.writerow([f"{float(x):.16e}" for x in row])


def step_matrices(H0: np.ndarray, V: np.ndarray, f, t0: float, dt: float, n: int) -> np.ndarray:
    """RK4 step matrices M_0..M_{n-1} for H(t) = H0 + f(t) V starting at t0."""
    t = t0 + dt * np.arange(n)
    N = H0.shape[0]
    A0 = -1j * H0
    AV = -1j * V
    a1 = A0 + f(t)[:, None, None] * AV
    a2 = A0 + f(t + 0.5 * dt)[:, None, None] * AV
    a3 = A0 + f(t + dt)[:, None, None] * AV
    eye = np.eye(N)
    k1 = a1
    k2 = a2 @ (eye + 0.5 * dt * k1)
    k3 = a2 @ (eye + 0.5 * dt * k2)
    k4 = a3 @ (eye + dt * k3)
    return eye + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def chain_product(M: np.ndarray) -> np.ndarray:
    """M[-1] @ ... @ M[0] along axis -3, by pairwise reduction."""
    while M.shape[-3] > 1:
        tail = None
        if M.shape[-3] % 2:
            tail, M = M[..., -1:, :, :], M[..., :-1, :, :]
        M = M[..., 1::2, :, :] @ M[..., 0::2, :, :]
        if tail is not None:
            M = np.concatenate([M, tail], axis=-3)
    return M[..., 0, :, :]


def prefix_products(M: np.ndarray) -> np.ndarray:
    """P[i] = M[i] @ ... @ M[0] (Hillis-Steele scan)."""
    P = M.copy()
    d = 1
    while d < len(P):
        P[d:] = P[d:] @ P[:-d]
        d *= 2
    return P


def _drive_arrays(system: LadderSystem, drive: DriveSpec):
    return system.bare_hamiltonian(), system.drive_operator(), drive.waveform()


def _resolve_step(system, drive, t0, t1, dt):
    cap = step_cap(system, drive)
    if dt is None:
        dt = default_step(system, drive)
    if dt <= 0:
        raise PreconditionError("dt must be positive")
    if dt > cap * (1 + 1e-12):
        raise PreconditionError(f"dt={dt:.3e} exceeds cap min(T/200, 0.02/||H||)={cap:.3e}")
    span = t1 - t0
    n = max(1, math.ceil(abs(span) / dt - 1e-9)) if span != 0 else 0
    h = span / n if n else 0.0
    return n, h


def propagate(system: LadderSystem, drive: DriveSpec, psi0, t_span, dt: float | None = None,
              sample_every: int = 1) -> Trajectory:
    """Integrate from ``t_span[0]`` to ``t_span[1]`` (hbar/eV units).

    The effective step is ``(t1 - t0) / n`` with ``n = ceil(|t1 - t0| / dt)``,
    so the end point is hit exactly; a negative span integrates backwards.
    Samples are taken every ``sample_every`` steps plus the final point.
    """
    psi = psi0.amplitudes if isinstance(psi0, QuantumState) else np.asarray(psi0, dtype=complex)
    psi = psi.astype(complex)
    if abs(np.linalg.norm(psi) - 1.0) > NORM_TOL:
        raise PreconditionError("initial state must be normalised")
    t0, t1 = map(float, t_span)
    n, h = _resolve_step(system, drive, t0, t1, dt)
    H0, V, f = _drive_arrays(system, drive)

    times = [t0]
    states = [psi.copy()]
    done = 0
    while done < n:
        m = min(CHUNK, n - done)
        M = step_matrices(H0, V, f, t0 + done * h, h, m)
        idx = np.arange(m)
        keep = ((done + idx + 1) % sample_every == 0) | (done + idx + 1 == n)
        if not keep[:-1].any():
            psi = chain_product(M) @ psi
            if keep[-1]:
                times.append(t0 + (done + m) * h)
                states.append(psi)
        else:
            chunk_states = prefix_products(M) @ psi
            psi = chunk_states[-1]
            times.extend(t0 + (done + idx[keep] + 1) * h)
            states.extend(chunk_states[keep])
        done += m
        if not np.all(np.isfinite(psi)):
            raise NumericError(f"non-finite amplitudes at t={t0 + done * h:.6g}")
    traj = Trajectory(np.asarray(times), np.asarray(states))
    drift = traj.norm_drift()
    if drift > NORM_TOL:
        raise StepSizeError(f"norm drift {drift:.2e} > {NORM_TOL:.0e} with dt={abs(h):.3e} "
                            f"over {n} steps; reduce dt")
    return traj


def propagator_over(system: LadderSystem, drive: DriveSpec, t0: float, t1: float,
                    dt: float | None = None, check: bool = True) -> np.ndarray:
    """U(t1, t0) from the same RK4 recursion, integrated on the identity basis."""
    n, h = _resolve_step(system, drive, t0, t1, dt)
    H0, V, f = _drive_arrays(system, drive)
    U = np.eye(system.n_levels, dtype=complex)
    done = 0
    while done < n:
        m = min(CHUNK, n - done)
        U = chain_product(step_matrices(H0, V, f, t0 + done * h, h, m)) @ U
        done += m
    if check:
        check_unitary(U)
    return U


def unitarity_error(U: np.ndarray) -> float:
    return float(np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))))


def check_unitary(U: np.ndarray, tol: float = NORM_TOL) -> None:
    if not np.all(np.isfinite(U)):
        raise NumericError("propagator contains NaN/Inf")
    err = unitarity_error(U)
    if err > tol:
        raise StepSizeError(f"||U^dag U - I||_max = {err:.2e} > {tol:.0e}; reduce dt")
