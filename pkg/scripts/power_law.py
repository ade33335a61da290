"""Pulsed 3PA population against intensity, perturbative and saturating ranges.

    python3 scripts/power_law.py --center 0.870 --duration-fs 100
"""
import argparse

import numpy as np

from multiphoton.fitkit import DataSeries, fit_power_law
from multiphoton.model import canonical_system
from multiphoton.pulsed import power_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--center", type=float, default=0.870)
    ap.add_argument("--duration-fs", type=float, default=100.0)
    args = ap.parse_args()
    system = canonical_system()
    for label, scales in (("perturbative", np.geomspace(0.05, 0.2, 7)),
                          ("canonical", np.geomspace(0.5, 2.0, 7))):
        pairs = power_scan(system, args.center, args.duration_fs * 1e-15, scales)
        fit = fit_power_law(DataSeries(*map(np.array, zip(*pairs))))
        print(f"{label:<13} slope {fit.params['exponent']:.4f} +- {fit.stderr['exponent']:.4f}  "
              f"max population {max(p for _, p in pairs):.3e}")


if __name__ == "__main__":
    main()
