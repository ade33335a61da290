"""3PA/2PA feature-height ratio against drive scale (parity suppression of 2PA).

    python3 scripts/parity_trend.py --scales 2 1 0.5 0.25
"""
import argparse

from multiphoton.config import RunConfig, make_grid
from multiphoton.floquet import feature_height, spectrum_scan


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scales", type=float, nargs="+", default=[1.0, 0.5, 0.25])
    args = ap.parse_args()
    rc = RunConfig.load("canonical")
    s = rc.resolved["scan"]
    grid = make_grid(s["start_eV"], s["stop_eV"], s["step_eV"])
    w0 = rc.system.transition_energy(0, 1)
    print("scale  h3          h2          ratio")
    for scale in args.scales:
        res = spectrum_scan(rc.system, scale, grid, s["convolution_fwhm_eV"])
        x, y = res.photon_energies, res.convolved_strength
        h3, h2 = feature_height(x, y, w0 / 3), feature_height(x, y, w0 / 2)
        print(f"{scale:<6g} {h3:.4e}  {h2:.4e}  {h3 / h2:.2f}")


if __name__ == "__main__":
    main()
