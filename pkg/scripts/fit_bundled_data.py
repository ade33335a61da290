"""Fit every bundled synthetic measurement and print the recovered parameters."""
from multiphoton.config import bundled_data_path
from multiphoton.fitkit import DataSeries, fit_lifetime_emg, fit_malus, fit_power_law

RUNS = [
    ("lifetime_260ps.csv", fit_lifetime_emg, "tau"),
    ("lifetime_440ps.csv", fit_lifetime_emg, "tau"),
    ("malus_res3pa.csv", fit_malus, "dolp"),
    ("malus_pl2pa.csv", fit_malus, "dolp"),
    ("power_res3pa.csv", fit_power_law, "exponent"),
]

if __name__ == "__main__":
    for name, fitter, key in RUNS:
        fit = fitter(DataSeries.from_csv(bundled_data_path(name)))
        err = fit.stderr.get(key, fit.derived.get(f"{key}_stderr", float("nan")))
        print(f"{name:<20} {key:<9} {fit[key]:.4f} +- {err:.4f}  converged={fit.converged}")
