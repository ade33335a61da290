"""Regenerate the synthetic measurement files shipped in src/multiphoton/data/."""
from pathlib import Path

from multiphoton.cli import main

DATA = Path(__file__).resolve().parents[1] / "src" / "multiphoton" / "data"

RUNS = [
    ("lifetime_260ps.csv", "lifetime", 11, ["tau=260", "sigma=80"]),
    ("lifetime_440ps.csv", "lifetime", 12, ["tau=440", "sigma=80"]),
    ("malus_res3pa.csv", "malus", 21, ["dolp=0.87", "noise=0.03"]),
    ("malus_pl2pa.csv", "malus", 22, ["dolp=0.74", "noise=0.03"]),
    ("power_res3pa.csv", "power", 31, ["exponent=3", "noise=0.05"]),
]

if __name__ == "__main__":
    tmp = DATA / "_tmp"
    for name, kind, seed, params in RUNS:
        argv = ["synth", "--kind", kind, "--seed", str(seed), "--out", str(tmp)]
        for p in params:
            argv += ["--param", p]
        assert main(argv) == 0
        (tmp / f"synth_{kind}.csv").replace(DATA / name)
        print("wrote", DATA / name)
    for f in tmp.iterdir():
        f.unlink()
    tmp.rmdir()
