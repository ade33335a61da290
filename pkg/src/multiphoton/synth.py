"""Synthetic measurement series for exercising the fits (seeded, deterministic)."""
from __future__ import annotations

import math

import numpy as np

from .fitkit import DataSeries, emg, malus


def lifetime_trace(tau=260.0, sigma=80.0, t0=1000.0, peak_counts=1e4, baseline=5.0,
                   t_max=5000.0, bin_width=4.0, seed=0, poisson=True) -> DataSeries:
    """TCSPC-like histogram (times in ps) with Poisson counting noise."""
    t = np.arange(0.0, t_max, bin_width)
    shape = emg(t, t0, sigma, tau)
    mean = peak_counts * shape / shape.max() + baseline
    if poisson:
        y = np.random.default_rng(seed).poisson(mean).astype(float)
    else:
        y = mean
    return DataSeries(t, y)


def lifetime_amplitude(tau, sigma, t0, peak_counts, t_max=5000.0, bin_width=4.0) -> float:
    """Amplitude parameter that gives ``peak_counts`` at the histogram maximum."""
    t = np.arange(0.0, t_max, bin_width)
    return peak_counts / float(emg(t, t0, sigma, tau).max())


def malus_series(dolp=0.87, noise=0.03, n_angles=37, theta0_deg=30.0, i_max=1000.0,
                 seed=0) -> DataSeries:
    """Intensity versus analyser angle (degrees, 0-360) with relative Gaussian noise."""
    theta = np.linspace(0.0, 360.0, n_angles)
    B = i_max * (1.0 - dolp) / (1.0 + dolp)
    A = i_max - B
    clean = malus(np.deg2rad(theta), A, B, math.radians(theta0_deg))
    rng = np.random.default_rng(seed)
    return DataSeries(theta, clean * (1.0 + noise * rng.standard_normal(n_angles)))


def power_series(exponent=3.0, prefactor=1.0, noise=0.05, n_points=12, decades=1.0, x0=1.0,
                 seed=0) -> DataSeries:
    x = x0 * np.logspace(0.0, decades, n_points)
    rng = np.random.default_rng(seed)
    return DataSeries(x, prefactor * x**exponent * (1.0 + noise * rng.standard_normal(n_points)))


GENERATORS = {
    "lifetime": lifetime_trace,
    "malus": malus_series,
    "power": power_series,
}
