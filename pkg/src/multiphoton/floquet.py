"""Quasienergies, Floquet modes and time-averaged transition probabilities.

The one-period propagator U(T) is diagonalised with a complex Schur
decomposition (U is normal, so the Schur vectors are orthonormal Floquet
modes even at degeneracies).  Quasienergies are folded into the half-open
zone [-w/2, w/2).
"""
from __future__ import annotations

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import linear_sum_assignment
from scipy.signal import find_peaks, peak_widths

from .errors import ContractError, DomainError, NumericError, PreconditionError
from .model import DriveSpec, LadderSystem, monochromatic
from .propagate import (chain_product, check_unitary, prefix_products,
                        propagator_over, step_matrices, steps_per_period)

DEGENERACY_TOL = 1e-10  # eV
TIE_TOL = 1e-9
SAMPLES_PER_PERIOD = 200
DEFAULT_FWHM = 0.020  # eV


class DegeneracyWarning(RuntimeWarning):
    pass


def fold(eps, photon_energy):
    """Map quasienergies into [-w/2, w/2)."""
    w = photon_energy
    return np.mod(np.asarray(eps, dtype=float) + 0.5 * w, w) - 0.5 * w


def wrap_difference(a, b, photon_energy):
    """Signed difference a - b taken modulo w, in [-w/2, w/2)."""
    return fold(np.asarray(a) - np.asarray(b), photon_energy)


@dataclass
class QuasienergyPoint:
    photon_energy: float
    quasienergies: np.ndarray  # eV, folded, ascending
    floquet_modes_t0: np.ndarray  # columns are modes
    overlaps: np.ndarray  # overlaps[j, k] = |<level j | mode k>|^2
    branch_labels: np.ndarray = None

    def __post_init__(self):
        if self.branch_labels is None:
            self.branch_labels = np.arange(len(self.quasienergies))

    def dominant_modes(self) -> np.ndarray:
        """mode index assigned to each bare level (one-to-one, max total overlap)."""
        rows, cols = linear_sum_assignment(-self.overlaps)
        out = np.empty(len(rows), dtype=int)
        out[rows] = cols
        return out

    def by_branch(self) -> np.ndarray:
        """Quasienergies ordered by branch label."""
        out = np.empty_like(self.quasienergies)
        out[self.branch_labels] = self.quasienergies
        return out

    def min_gap(self) -> float:
        e = self.quasienergies
        if len(e) < 2:
            return math.inf
        d = np.abs(wrap_difference(e[:, None], e[None, :], self.photon_energy))
        d[np.diag_indices(len(e))] = np.inf
        return float(d.min())


def _require_cw(drive: DriveSpec):
    if drive.is_pulse:
        raise ContractError("Floquet analysis needs a monochromatic drive")


def monodromy(system: LadderSystem, drive: DriveSpec, steps: int | None = None) -> np.ndarray:
    """One-period propagator U(T)."""
    _require_cw(drive)
    K = steps or steps_per_period(system, drive)
    return propagator_over(system, drive, 0.0, drive.period, drive.period / K)


def quasienergies(U: np.ndarray, T: float) -> QuasienergyPoint:
    """Eigen-decompose a monodromy matrix."""
    check_unitary(U, tol=1e-7)
    Tm, Z = scipy.linalg.schur(U, output="complex")
    off = np.abs(np.triu(Tm, 1)).max() if len(Tm) > 1 else 0.0
    if not np.isfinite(off) or off > 1e-6:
        raise NumericError(f"monodromy not normal within tolerance (Schur off-diagonal {off:.1e})")
    w = 2.0 * math.pi / T
    lam = np.diag(Tm)
    eps = fold(-np.angle(lam) / T, w)
    order = np.argsort(eps, kind="stable")
    Z = Z[:, order]
    return QuasienergyPoint(w, eps[order], Z, np.abs(Z) ** 2)


@dataclass
class FloquetPoint:
    """Everything computed at one drive frequency."""

    point: QuasienergyPoint
    mode_average: np.ndarray  # [level, mode] period-average of |<level|mode(t)>|^2
    degenerate: bool

    @property
    def pbar(self) -> np.ndarray:
        """pbar[i, j] = long-time average probability of j starting from i."""
        return self.point.overlaps @ self.mode_average.T

    def transition(self, from_: int, to: int) -> float:
        return float(self.point.overlaps[from_] @ self.mode_average[to])

    def transition_phase_averaged(self, from_: int, to: int) -> float:
        """As :meth:`transition` with the start instant averaged over one period.

        A sudden start at a different carrier phase changes the initial
        projection onto the modes by O((2b/w)^2); averaging over the start
        instant removes that dependence exactly.
        """
        return float(self.mode_average[from_] @ self.mode_average[to])


def floquet_point(system: LadderSystem, drive: DriveSpec, samples: int = SAMPLES_PER_PERIOD,
                  steps: int | None = None) -> FloquetPoint:
    """Monodromy, Floquet modes and their period-averaged level occupations.

    The modes are propagated through one period on ``samples`` equally
    spaced instants (the RK4 step divides the sample spacing) and the
    occupation of each level is averaged with the trapezoidal rule.
    """
    _require_cw(drive)
    K = steps or steps_per_period(system, drive, multiple=samples)
    if K % samples:
        raise PreconditionError("steps per period must be a multiple of the sample count")
    T = drive.period
    M = step_matrices(system.bare_hamiltonian(), system.drive_operator(), drive.waveform(),
                      0.0, T / K, K)
    N = system.n_levels
    blocks = chain_product(M.reshape(samples, K // samples, N, N))
    P = prefix_products(blocks)
    U = P[-1]
    qp = quasienergies(U, T)
    modes = np.concatenate([qp.floquet_modes_t0[None], P @ qp.floquet_modes_t0], axis=0)
    occ = np.abs(modes) ** 2  # (samples+1, level, mode)
    avg = (occ[1:-1].sum(axis=0) + 0.5 * (occ[0] + occ[-1])) / samples
    degenerate = qp.min_gap() < DEGENERACY_TOL
    return FloquetPoint(qp, avg, degenerate)


def averaged_transition_probability(system: LadderSystem, drive: DriveSpec, from_: int = 0,
                                    to: int = 1, samples: int = SAMPLES_PER_PERIOD,
                                    start: str = "sudden") -> float:
    """Long-time average of |<to|psi(t)>|^2 for psi(0) = |from>.

    Sum over modes of |<mode|from>|^2 times the period average of
    |<to|mode(t)>|^2.  Exact for non-degenerate quasienergies; at a
    degeneracy a :class:`DegeneracyWarning` is issued and the diagonal
    value is still returned.  ``start="phase_averaged"`` also averages
    over the instant the drive is switched on.
    """
    if start not in ("sudden", "phase_averaged"):
        raise DomainError(f"unknown start convention {start!r}")
    fp = floquet_point(system, drive, samples=samples)
    if fp.degenerate:
        warnings.warn(f"quasienergy degeneracy at {drive.photon_energy:.9f} eV; "
                      "cross terms neglected", DegeneracyWarning, stacklevel=2)
    if start == "phase_averaged":
        return fp.transition_phase_averaged(from_, to)
    return fp.transition(from_, to)


def track_branches(points: list[QuasienergyPoint]) -> list[QuasienergyPoint]:
    """Label branches along a scan by maximal mode overlap with the previous point.

    Ties (overlap difference below 1e-9) are resolved in favour of the lower
    quasienergy, which is what the stable ascending mode order gives.
    """
    if not points:
        return points
    points[0].branch_labels = np.arange(len(points[0].quasienergies))
    for prev, cur in zip(points, points[1:]):
        S = np.abs(prev.floquet_modes_t0.conj().T @ cur.floquet_modes_t0) ** 2
        S = np.round(S / TIE_TOL) * TIE_TOL
        rows, cols = linear_sum_assignment(-S)
        labels = np.empty(len(cols), dtype=int)
        labels[cols] = prev.branch_labels[rows]
        cur.branch_labels = labels
    return points


def sum_rule_residual(point: QuasienergyPoint, system: LadderSystem) -> float:
    """sum(eps) - sum(E) modulo w; zero because the drive is traceless."""
    return float(wrap_difference(point.quasienergies.sum(), sum(system.level_energies),
                                 point.photon_energy))


# ---------------------------------------------------------------- scans


def _point_worker(args):
    system, energy, scale, phase = args
    return floquet_point(system, monochromatic(energy, scale, phase))


def _map_points(system, energies, scale, phase, threads):
    jobs = [(system, float(e), scale, phase) for e in energies]
    if threads and threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(_point_worker, jobs, chunksize=max(1, len(jobs) // (4 * threads))))
    return [_point_worker(j) for j in jobs]


def quasienergy_scan(system: LadderSystem, energies, scale: float = 1.0, phase: float = 0.0,
                     threads: int = 1) -> list[QuasienergyPoint]:
    energies = _check_grid(energies)
    pts = [fp.point for fp in _map_points(system, energies, scale, phase, threads)]
    return track_branches(pts)


@dataclass
class Resonance:
    center_ev: float
    height: float  # above the local baseline (peak prominence)
    fwhm_ev: float
    order: int
    peak_value: float

    def to_dict(self) -> dict:
        return {"center_eV": self.center_ev, "height": self.height, "fwhm_eV": self.fwhm_ev,
                "order": self.order, "peak_value": self.peak_value}


@dataclass
class Crossing:
    """Located approach between the |from>-like and |level>-like branches."""

    center_ev: float
    gap_ev: float
    level: int
    order: int


@dataclass
class SpectrumResult:
    photon_energies: np.ndarray
    absorption_strength: np.ndarray
    convolved_strength: np.ndarray
    resonances: list[Resonance]
    sample_energies: np.ndarray = None  # grid plus refinement points
    sample_strength: np.ndarray = None
    crossings: list[Crossing] = field(default_factory=list)
    degenerate_points: list[float] = field(default_factory=list)
    level_populations: np.ndarray = None  # pulsed scans: (grid, level)

    def resonance_near(self, energy: float, order: int | None = None) -> Resonance | None:
        cands = [r for r in self.resonances if order is None or r.order == order]
        if not cands:
            return None
        return min(cands, key=lambda r: abs(r.center_ev - energy))


def _check_grid(grid) -> np.ndarray:
    g = np.asarray(grid, dtype=float)
    if g.ndim != 1 or len(g) == 0:
        raise PreconditionError("energy grid is empty")
    if np.any(g <= 0) or np.any(np.diff(g) <= 0):
        raise PreconditionError("energy grid must be positive and strictly increasing")
    return g


def _branch_offsets(fp: FloquetPoint, from_: int) -> np.ndarray:
    qp = fp.point
    dom = qp.dominant_modes()
    eps = qp.quasienergies
    return wrap_difference(eps[dom], eps[dom[from_]], qp.photon_energy)


def locate_crossings(system: LadderSystem, grid: np.ndarray, points: list[FloquetPoint],
                     scale: float = 1.0, phase: float = 0.0, from_: int = 0,
                     max_iter: int = 80) -> list[Crossing]:
    """Find where the |from>-like branch meets another level's branch.

    Sign changes of the folded branch offset between neighbouring grid
    points (well inside the zone, so wrap-arounds are ignored) are bisected
    to the point where the dominant characters swap.  The remaining
    quasienergy separation is the avoided-crossing gap.
    """
    offs = np.array([_branch_offsets(fp, from_) for fp in points])
    found = []
    for j in range(system.n_levels):
        if j == from_:
            continue
        d = offs[:, j]
        for i in range(len(grid) - 1):
            quarter = 0.25 * grid[i]
            if d[i] == 0 or np.sign(d[i]) == np.sign(d[i + 1]):
                continue
            if abs(d[i]) > quarter or abs(d[i + 1]) > quarter:
                continue
            lo, hi, dlo, dhi = grid[i], grid[i + 1], d[i], d[i + 1]
            for _ in range(max_iter):
                if hi - lo < 1e-13:
                    break
                mid = 0.5 * (lo + hi)
                dm = _branch_offsets(floquet_point(system, monochromatic(mid, scale, phase)), from_)[j]
                if np.sign(dm) == np.sign(dlo):
                    lo, dlo = mid, dm
                else:
                    hi, dhi = mid, dm
            center = 0.5 * (lo + hi)
            order = max(1, round(abs(system.level_energies[j] - system.level_energies[from_]) / center))
            found.append(Crossing(center, float(min(abs(dlo), abs(dhi))), j, order))
    return sorted(found, key=lambda c: c.center_ev)


def refinement_points(crossings: list[Crossing], lo: float, hi: float, per_side: int = 60,
                      floor: float = 1e-9) -> np.ndarray:
    """Log-spaced points around each crossing, from 1e-2 to 1e3 resonance widths."""
    pts = []
    for c in crossings:
        width = max(c.gap_ev, floor) / c.order
        off = width * np.logspace(-2, 3, per_side)
        pts.append([c.center_ev])
        pts.append(c.center_ev + off)
        pts.append(c.center_ev - off)
    if not pts:
        return np.empty(0)
    x = np.concatenate(pts)
    return x[(x > lo) & (x < hi)]


def gaussian_convolve(x: np.ndarray, y: np.ndarray, x_out: np.ndarray, fwhm: float) -> np.ndarray:
    """Normalised Gaussian smoothing of samples on an arbitrary grid.

    The kernel is cut at +-4 sigma and renormalised at every output point
    over the samples it actually covers, so the edges are not pulled down.
    """
    sigma = fwhm / (2.0 * math.sqrt(2.0 * math.log(2.0)))
    out = np.empty(len(x_out))
    for i, x0 in enumerate(x_out):
        a, b = np.searchsorted(x, [x0 - 4 * sigma, x0 + 4 * sigma], side="left")
        b = min(len(x), b + 1)
        xs, ys = x[a:b], y[a:b]
        g = np.exp(-0.5 * ((xs - x0) / sigma) ** 2)
        if len(xs) < 2:
            out[i] = ys[0] if len(ys) else np.nan
            continue
        out[i] = np.trapezoid(ys * g, xs) / np.trapezoid(g, xs)
    return out


def detect_resonances(energies: np.ndarray, strength: np.ndarray, transition_energy: float,
                      rel_prominence: float = 1e-3) -> list[Resonance]:
    """Local maxima with parabolic centre refinement.

    ``height`` is the prominence (height above the higher neighbouring
    minimum) and ``fwhm`` is the full width at half that height.
    """
    if len(strength) < 3 or not np.any(np.isfinite(strength)):
        return []
    peaks, props = find_peaks(strength, prominence=0.0)
    if len(peaks) == 0:
        return []
    prom = props["prominences"]
    keep = prom >= rel_prominence * prom.max()
    peaks = peaks[keep]
    if len(peaks) == 0:
        return []
    widths = peak_widths(strength, peaks, rel_height=0.5,
                         prominence_data=(prom[keep], props["left_bases"][keep],
                                          props["right_bases"][keep]))
    idx = np.arange(len(energies))
    out = []
    for p, h, l, r in zip(peaks, prom[keep], widths[2], widths[3]):
        x0, x1, x2 = energies[p - 1:p + 2]
        y0, y1, y2 = strength[p - 1:p + 2]
        denom = (x0 - x1) * (x0 - x2) * (x1 - x2)
        a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom
        bq = (x2**2 * (y0 - y1) + x1**2 * (y2 - y0) + x0**2 * (y1 - y2)) / denom
        center = -bq / (2 * a) if a < 0 else x1
        if not (x0 <= center <= x2):
            center = x1
        fw = float(np.interp(r, idx, energies) - np.interp(l, idx, energies))
        order = max(1, round(transition_energy / center))
        out.append(Resonance(float(center), float(h), fw, int(order), float(strength[p])))
    return out


def spectrum_scan(system: LadderSystem, scale: float, omega_grid, convolution_fwhm: float = DEFAULT_FWHM,
                  from_: int = 0, to: int = 1, phase: float = 0.0, refine: bool = True,
                  threads: int = 1, rel_prominence: float = 1e-3) -> SpectrumResult:
    """Time-averaged from->to transition probability versus photon energy.

    Multi-photon resonances are far narrower than any practical grid, so
    before convolving, each located branch crossing gets a log-spaced
    cluster of extra samples; the convolution integrates over grid plus
    clusters, and the result is reported on the grid.
    """
    grid = _check_grid(omega_grid)
    if len(grid) > 1 and np.max(np.diff(grid)) > convolution_fwhm / 5 * (1 + 1e-9):
        raise PreconditionError(
            f"grid step {np.max(np.diff(grid)):.4g} eV is coarser than fwhm/5 = {convolution_fwhm / 5:.4g} eV")
    points = _map_points(system, grid, scale, phase, threads)
    raw = np.array([fp.transition(from_, to) for fp in points])
    degenerate = [float(e) for e, fp in zip(grid, points) if fp.degenerate]

    crossings = []
    xs, ys = grid, raw
    if refine and len(grid) > 1:
        crossings = locate_crossings(system, grid, points, scale, phase, from_)
        extra = np.setdiff1d(refinement_points(crossings, grid[0], grid[-1]), grid)
        if len(extra):
            extra_pts = _map_points(system, extra, scale, phase, threads)
            degenerate += [float(e) for e, fp in zip(extra, extra_pts) if fp.degenerate]
            xs = np.concatenate([grid, extra])
            ys = np.concatenate([raw, [fp.transition(from_, to) for fp in extra_pts]])
            order = np.argsort(xs, kind="stable")
            xs, ys = xs[order], ys[order]
    conv = gaussian_convolve(xs, ys, grid, convolution_fwhm) if convolution_fwhm > 0 else raw.copy()
    res = detect_resonances(grid, conv, system.transition_energy(from_, to), rel_prominence)
    return SpectrumResult(grid, raw, conv, res, xs, ys, crossings, sorted(degenerate))


def resonance_gap(system: LadderSystem, lo: float, hi: float, scale: float = 1.0, from_: int = 0,
                  to: int = 1, n: int = 41) -> Crossing | None:
    """Minimum-gap crossing between the from- and to-like branches in [lo, hi]."""
    grid = np.linspace(lo, hi, n)
    pts = _map_points(system, grid, scale, 0.0, 1)
    cands = [c for c in locate_crossings(system, grid, pts, scale, 0.0, from_) if c.level == to]
    return min(cands, key=lambda c: c.gap_ev) if cands else None


def feature_height(energies, strength, center: float, half_window: float = 0.040,
                   baseline_span: float = 0.100, degree: int = 2) -> float:
    """Largest excess over a smooth background within ``center +- half_window``.

    The background is a degree-``degree`` polynomial fitted to the points
    between ``half_window`` and ``baseline_span`` away from ``center``.
    Unlike the prominence this does not require the feature to be a local
    maximum, so it stays defined for weak, dispersive lines on a slope.
    """
    x = np.asarray(energies, dtype=float)
    y = np.asarray(strength, dtype=float)
    d = np.abs(x - center)
    inside = d <= half_window
    ring = (d > half_window) & (d <= baseline_span)
    if inside.sum() < 1 or ring.sum() < degree + 2:
        raise PreconditionError(f"too few samples around {center:.4f} eV for a baseline fit")
    coef = np.polyfit(x[ring] - center, y[ring], degree)
    return float(np.max(y[inside] - np.polyval(coef, x[inside] - center)))
