"""Least-squares data reduction: power law, Malus law / DOLP, Gaussian-convolved exponential decay."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy.special import erfc, erfcx

from .errors import DomainError, PreconditionError

MAX_ITER = 200
COST_RTOL = 1e-10
GRAD_TOL = 1e-8
LAMBDA0 = 1e-6  # Marquardt damping start; x10 on reject, /10 on accept
SQRT_EPS = math.sqrt(np.finfo(float).eps)


@dataclass
class DataSeries:
    x: np.ndarray
    y: np.ndarray
    y_err: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.y_err is not None:
            self.y_err = np.asarray(self.y_err, dtype=float)
        if self.x.shape != self.y.shape or self.x.ndim != 1:
            raise DomainError("x and y must be 1-D arrays of equal length")
        if self.y_err is not None and self.y_err.shape != self.x.shape:
            raise DomainError("y_err must match x")
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise DomainError("data contain NaN or Inf")

    def __len__(self):
        return len(self.x)

    @classmethod
    def from_csv(cls, path) -> "DataSeries":
        """Two- or three-column CSV (x, y[, y_err]); a non-numeric first row is a header."""
        rows = []
        with open(Path(path), newline="") as fh:
            for i, row in enumerate(csv.reader(fh)):
                row = [c.strip() for c in row if c.strip() != ""]
                if not row or row[0].startswith("#"):
                    continue
                try:
                    vals = [float(c) for c in row]
                except ValueError:
                    if i == 0:
                        continue
                    raise DomainError(f"{path}:{i + 1}: non-numeric entry in {row!r}") from None
                rows.append(vals)
        if not rows:
            raise DomainError(f"{path}: no data rows")
        ncol = {len(r) for r in rows}
        if len(ncol) != 1 or ncol.pop() not in (2, 3):
            raise DomainError(f"{path}: expected 2 or 3 columns on every row")
        a = np.array(rows)
        return cls(a[:, 0], a[:, 1], a[:, 2] if a.shape[1] == 3 else None)


@dataclass
class FitResult:
    params: dict[str, float]
    stderr: dict[str, float]
    residual_norm: float
    converged: bool
    iterations: int
    derived: dict[str, float] = field(default_factory=dict)
    flags: list[str] = field(default_factory=list)
    model: str = ""

    def __getitem__(self, name):
        if name in self.params:
            return self.params[name]
        return self.derived[name]

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "params": dict(self.params),
            "stderr": dict(self.stderr),
            "derived": dict(self.derived),
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "iterations": self.iterations,
            "flags": list(self.flags),
        }


# ------------------------------------------------------------------ engine


def _jacobian(fun, p, r0, lo, hi):
    J = np.empty((len(r0), len(p)))
    for j in range(len(p)):
        h = SQRT_EPS * max(abs(p[j]), 1.0)
        if p[j] + h > hi[j]:
            h = -h
        q = p.copy()
        q[j] += h
        J[:, j] = (fun(q) - r0) / h
    return J


def _projected_gradient(g, p, lo, hi):
    g = g.copy()
    g[(p <= lo) & (g > 0)] = 0.0
    g[(p >= hi) & (g < 0)] = 0.0
    return g


def nls_minimize(model: Callable, data: DataSeries, initial: Sequence[float],
                 bounds: tuple | None = None, names: Sequence[str] | None = None,
                 weights: np.ndarray | None = None, fixed: dict[int, float] | None = None,
                 max_iter: int = MAX_ITER) -> FitResult:
    """Levenberg-Marquardt with a forward-difference Jacobian and box bounds.

    Minimises ``sum(w * (model(x, p) - y)**2)``.  Steps are projected back
    into the box.  Stops when an accepted step changes the cost by less than
    1e-10 relative, or when the projected gradient inf-norm drops below
    1e-8.  Standard errors come from ``s^2 (J^T J)^-1`` at the solution with
    ``s^2`` the reduced chi-square.  ``fixed`` maps parameter index to a
    held value.
    """
    p_full = np.asarray(initial, dtype=float).copy()
    n_all = len(p_full)
    names = list(names) if names is not None else [f"p{i}" for i in range(n_all)]
    lo_all = np.full(n_all, -np.inf)
    hi_all = np.full(n_all, np.inf)
    if bounds is not None:
        lo_all = np.asarray(bounds[0], dtype=float) * np.ones(n_all)
        hi_all = np.asarray(bounds[1], dtype=float) * np.ones(n_all)
    fixed = dict(fixed or {})
    for i, v in fixed.items():
        p_full[i] = v
    if np.any(p_full < lo_all) or np.any(p_full > hi_all):
        raise PreconditionError("initial parameters lie outside the bounds")
    free = np.array([i for i in range(n_all) if i not in fixed], dtype=int)
    lo, hi = lo_all[free], hi_all[free]
    sw = np.sqrt(weights) if weights is not None else np.ones(len(data))
    if data.y_err is not None and weights is None:
        sw = 1.0 / np.maximum(data.y_err, np.finfo(float).tiny)

    def expand(q):
        full = p_full.copy()
        full[free] = q
        return full

    def resid(q):
        return sw * (np.asarray(model(data.x, expand(q)), dtype=float) - data.y)

    p = p_full[free].copy()
    r = resid(p)
    cost = 0.5 * float(r @ r)
    lam = LAMBDA0
    converged = False
    it = 0
    J = _jacobian(resid, p, r, lo, hi)
    while it < max_iter:
        g = J.T @ r
        if cost == 0.0 or np.max(np.abs(_projected_gradient(g, p, lo, hi)), initial=0.0) < GRAD_TOL:
            converged = True
            break
        A = J.T @ J
        D = np.diag(np.maximum(np.diag(A), 1e-12 * max(np.max(np.diag(A)), 1e-300)))
        it += 1
        accepted = False
        while lam < 1e16:
            try:
                step = np.linalg.solve(A + lam * D, -g)
            except np.linalg.LinAlgError:
                lam *= 10.0
                continue
            p_new = np.clip(p + step, lo, hi)
            r_new = resid(p_new)
            cost_new = 0.5 * float(r_new @ r_new)
            if np.isfinite(cost_new) and cost_new <= cost:
                accepted = True
                break
            lam *= 10.0
        if not accepted:
            break
        rel = (cost - cost_new) / max(cost, np.finfo(float).tiny)
        p, r, cost = p_new, r_new, cost_new
        lam = max(lam / 10.0, 1e-15)
        if rel < COST_RTOL:
            converged = True
            break
        J = _jacobian(resid, p, r, lo, hi)

    J = _jacobian(resid, p, r, lo, hi)
    dof = max(len(data) - len(p), 1)
    s2 = 2.0 * cost / dof
    cov = np.linalg.pinv(J.T @ J) * s2
    err_free = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    full = expand(p)
    stderr = np.zeros(n_all)
    stderr[free] = err_free
    return FitResult(
        params={k: float(v) for k, v in zip(names, full)},
        stderr={k: float(v) for k, v in zip(names, stderr)},
        residual_norm=float(np.linalg.norm(r)),
        converged=converged,
        iterations=it,
    )


# ------------------------------------------------------------------ power law


def fit_power_law(data: DataSeries) -> FitResult:
    """Straight-line fit of ln y against ln x; the slope is the exponent."""
    if np.any(data.x <= 0) or np.any(data.y <= 0):
        raise DomainError("power-law fit needs strictly positive x and y")
    if len(data) < 3:
        raise PreconditionError("need at least 3 points for a power-law fit")
    lx, ly = np.log(data.x), np.log(data.y)
    X = np.column_stack([lx, np.ones_like(lx)])
    coef, *_ = np.linalg.lstsq(X, ly, rcond=None)
    res = ly - X @ coef
    s2 = float(res @ res) / (len(data) - 2)
    cov = s2 * np.linalg.inv(X.T @ X)
    slope, icpt = coef
    return FitResult(
        params={"exponent": float(slope), "prefactor": float(math.exp(icpt))},
        stderr={"exponent": float(math.sqrt(cov[0, 0])),
                "prefactor": float(math.exp(icpt) * math.sqrt(cov[1, 1]))},
        residual_norm=float(np.linalg.norm(res)),
        converged=True,
        iterations=1,
        model="power",
    )


# ------------------------------------------------------------------ Malus law


def malus(theta, A, B, theta0):
    return A * np.cos(theta - theta0) ** 2 + B


def fit_malus(data: DataSeries, degrees: bool = True) -> FitResult:
    """I = A cos^2(theta - theta0) + B with A, B >= 0; DOLP = A / (A + 2B).

    Starting point: B = min(I), A = max(I) - min(I), theta0 at the maximum.
    """
    th = np.deg2rad(data.x) if degrees else data.x
    if len(data) < 5:
        raise PreconditionError("Malus fit needs at least 5 angles")
    if np.ptp(th) < math.pi - 1e-9:
        raise PreconditionError("angles must span at least 180 degrees")
    y = data.y
    if np.ptp(y) <= 1e-12 * max(abs(float(np.max(y))), 1e-300):
        B = float(np.mean(y))
        return FitResult({"A": 0.0, "B": B, "theta0": 0.0}, {"A": 0.0, "B": 0.0, "theta0": 0.0},
                         0.0, True, 0, {"dolp": 0.0, "dolp_stderr": 0.0}, ["degenerate"], "malus")
    t0 = float(th[np.argmax(y)])
    init = [float(np.ptp(y)), max(float(np.min(y)), 0.0), t0]
    bounds = ([0.0, 0.0, t0 - math.pi], [np.inf, np.inf, t0 + math.pi])
    series = DataSeries(th, y, data.y_err)
    fit = nls_minimize(lambda x, p: malus(x, *p), series, init, bounds, ["A", "B", "theta0"])
    A, B = fit.params["A"], fit.params["B"]
    fit.params["theta0"] = float(np.mod(fit.params["theta0"], math.pi))
    if degrees:
        fit.params["theta0"] = math.degrees(fit.params["theta0"])
        fit.stderr["theta0"] = math.degrees(fit.stderr["theta0"])
    dolp = A / (A + 2.0 * B) if A + 2.0 * B > 0 else 0.0
    # dD/dA = 2B/(A+2B)^2, dD/dB = -2A/(A+2B)^2; covariance neglected
    s = (A + 2.0 * B) ** 2
    dolp_err = math.hypot(2 * B / s * fit.stderr["A"], 2 * A / s * fit.stderr["B"]) if s else 0.0
    fit.derived = {"dolp": dolp, "dolp_stderr": dolp_err,
                   "i_max": A + B, "i_min": B}
    fit.model = "malus"
    return fit


def dolp(i_max: float, i_min: float) -> float:
    return (i_max - i_min) / (i_max + i_min)


# ------------------------------------------------------------------ lifetime


def emg(t, t0, sigma, tau):
    """Unit-area exponential decay (time constant tau, onset t0) convolved with a Gaussian.

    (1/2tau) exp(sigma^2/2tau^2 - (t-t0)/tau) erfc(sigma/(tau sqrt2) - (t-t0)/(sigma sqrt2)),
    evaluated through erfcx where the erfc argument is positive to avoid
    overflow times underflow.
    """
    t = np.asarray(t, dtype=float)
    x = t - t0
    z = sigma / (tau * math.sqrt(2.0)) - x / (sigma * math.sqrt(2.0))
    out = np.empty_like(x)
    pos = z > 0
    # exp(s^2/2tau^2 - x/tau) = exp(z^2 - x^2/2s^2)
    out[pos] = np.exp(-x[pos] ** 2 / (2.0 * sigma**2)) * erfcx(z[pos])
    neg = ~pos
    out[neg] = np.exp(sigma**2 / (2.0 * tau**2) - x[neg] / tau) * erfc(z[neg])
    return out / (2.0 * tau)


def emg_model(t, t0, sigma, tau, amplitude, baseline):
    return amplitude * emg(t, t0, sigma, tau) + baseline


EMG_NAMES = ("t0", "sigma", "tau", "amplitude", "baseline")


def emg_initial_guess(data: DataSeries) -> list[float]:
    """Deterministic start: t0 at the maximum, tau from the tail log-slope,
    sigma from the 10-90 % rise time, baseline from the pre-peak floor."""
    t, y = data.x, data.y
    ip = int(np.argmax(y))
    pre = y[: max(ip // 2, 1)]
    baseline = float(np.median(pre)) if len(pre) else float(np.min(y))
    baseline = max(baseline, 0.0)
    ys = y - baseline
    peak = ys[ip]
    rise = ys[: ip + 1]
    i10 = int(np.argmax(rise >= 0.1 * peak))
    i90 = int(np.argmax(rise >= 0.9 * peak))
    dt = float(np.median(np.diff(t)))
    sigma = max((t[i90] - t[i10]) / 2.563, dt)
    tail = (t > t[ip] + 2.0 * sigma) & (ys > 0.05 * peak) & (ys > 0)
    if tail.sum() >= 3:
        slope = np.polyfit(t[tail], np.log(ys[tail]), 1)[0]
        tau = -1.0 / slope if slope < 0 else (t[-1] - t[ip]) / 5.0
    else:
        tau = (t[-1] - t[ip]) / 5.0
    tau = max(tau, dt)
    area = float(np.trapezoid(np.clip(ys, 0, None), t))
    return [float(t[ip]), float(sigma), float(tau), max(area, 1e-12), baseline]


def fit_lifetime_emg(data: DataSeries, sigma: float | None = None,
                     initial: Sequence[float] | None = None, max_iter: int = MAX_ITER) -> FitResult:
    """Fit ``amplitude * EMG(t; t0, sigma, tau) + baseline`` to a decay trace.

    Residuals are weighted by 1/max(y, 1) (Poisson).  Passing ``sigma``
    holds the Gaussian width fixed, e.g. at a measured instrument response.
    """
    if np.any(data.y < 0):
        raise DomainError("counts must be non-negative")
    if np.any(np.diff(data.x) <= 0):
        raise DomainError("times must be strictly increasing")
    init = list(initial) if initial is not None else emg_initial_guess(data)
    fixed = None
    if sigma is not None:
        init[1] = sigma
        fixed = {1: sigma}
    span = data.x[-1] - data.x[0]
    dt = float(np.min(np.diff(data.x)))
    lo = [data.x[0] - span, 1e-6 * dt, 1e-6 * dt, 0.0, 0.0]
    hi = [data.x[-1], span, 10.0 * span, np.inf, np.inf]
    init = [min(max(v, l), h) for v, l, h in zip(init, lo, hi)]
    w = 1.0 / np.maximum(data.y, 1.0)
    fit = nls_minimize(lambda x, p: emg_model(x, *p), DataSeries(data.x, data.y), init, (lo, hi),
                       EMG_NAMES, weights=w, fixed=fixed, max_iter=max_iter)
    fit.model = "emg"
    t_peak = data.x[int(np.argmax(data.y))]
    if data.x[-1] - t_peak < 5.0 * fit.params["tau"]:
        fit.flags.append("trace_shorter_than_5tau")
    return fit


FITTERS = {
    "power": lambda d, **kw: fit_power_law(d),
    "malus": lambda d, **kw: fit_malus(d, degrees=kw.get("degrees", True)),
    "emg": lambda d, **kw: fit_lifetime_emg(d, sigma=kw.get("sigma")),
}
