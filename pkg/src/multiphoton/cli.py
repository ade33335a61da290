"""Command-line front end.

    multiphoton spectrum       --config canonical --out out/
    multiphoton quasienergies  --config canonical --out out/
    multiphoton pulse-scan     --config pulse_scan --out out/
    multiphoton power-scan     --config power_scan --out out/
    multiphoton fit PATH --model {power,malus,emg} --out out/
    multiphoton synth --kind {lifetime,malus,power} --seed 0 --out out/
    multiphoton validate --out out/

Exit codes: 0 ok, 1 validation failure, 2 bad input/config, 3 numerical failure, 4 fit did not converge.
"""
from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

from . import __version__
from .config import ConfigError, RunConfig, make_grid
from .errors import DomainError, NumericError, PreconditionError, StepSizeError
from .fitkit import FITTERS, DataSeries
from .floquet import quasienergy_scan, spectrum_scan, sum_rule_residual
from .io import dumps, write_csv, write_json
from .pulsed import pulse_batch, pulse_spectrum_scan
from .synth import GENERATORS

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_NOCONV = 0, 2, 3, 4


def _manifest(out: Path, command: str, cfg: dict | None, outputs: list[Path], extra=None):
    m = {
        "tool": "multiphoton",
        "version": __version__,
        "command": command,
        "config": cfg,
        "outputs": sorted(p.name for p in outputs),
    }
    if extra:
        m.update(extra)
    write_json(out / "manifest.json", m)


def _timing(out: Path, t0: float):
    # wall time lives apart from the manifest so the manifest stays byte-reproducible
    write_json(out / "timing.json", {"wall_time_s": round(time.perf_counter() - t0, 3)})


def _resonances_json(result):
    return [r.to_dict() for r in result.resonances]


def cmd_spectrum(rc: RunConfig, out: Path, threads: int = 1) -> list[Path]:
    s = rc.section("scan")
    grid = make_grid(s["start_eV"], s["stop_eV"], s["step_eV"])
    if len(grid) == 0:
        raise ConfigError("key 'scan': empty photon-energy grid (stop_eV < start_eV)")
    d = rc.resolved["drive"]
    res = spectrum_scan(rc.system, d["amplitude_scale"], grid, s["convolution_fwhm_eV"],
                        s["from_level"], s["to_level"], d["carrier_phase_rad"], s["refine"], threads)
    files = [
        write_csv(out / "spectrum.csv", ["photon_energy_eV", "pbar_raw", "pbar_convolved"],
                  zip(res.photon_energies, res.absorption_strength, res.convolved_strength)),
        write_csv(out / "spectrum_samples.csv", ["photon_energy_eV", "pbar_raw"],
                  zip(res.sample_energies, res.sample_strength)),
        write_json(out / "resonances.json", _resonances_json(res)),
        write_json(out / "crossings.json", [
            {"center_eV": c.center_ev, "gap_eV": c.gap_ev, "level": c.level, "order": c.order}
            for c in res.crossings]),
    ]
    return files


def cmd_quasienergies(rc: RunConfig, out: Path, threads: int = 1) -> list[Path]:
    s = rc.section("scan")
    grid = make_grid(s["start_eV"], s["stop_eV"], s["step_eV"])
    if len(grid) == 0:
        raise ConfigError("key 'scan': empty photon-energy grid (stop_eV < start_eV)")
    d = rc.resolved["drive"]
    pts = quasienergy_scan(rc.system, grid, d["amplitude_scale"], d["carrier_phase_rad"], threads)
    n = rc.system.n_levels
    header = ["photon_energy_eV"] + [f"eps_{k}_eV" for k in range(n)] + ["sum_rule_residual_eV"]
    rows = [[p.photon_energy, *p.by_branch(), sum_rule_residual(p, rc.system)] for p in pts]
    return [write_csv(out / "quasienergies.csv", header, rows)]


def cmd_pulse_scan(rc: RunConfig, out: Path, threads: int = 1) -> list[Path]:
    p = rc.section("pulse")
    for key in ("start_eV", "stop_eV", "step_eV"):
        if key not in p:
            raise ConfigError(f"key 'pulse/{key}': required for pulse-scan")
    grid = make_grid(p["start_eV"], p["stop_eV"], p["step_eV"])
    if len(grid) == 0:
        raise ConfigError("key 'pulse': empty center-energy grid")
    d = rc.resolved["drive"]
    res = pulse_spectrum_scan(rc.system, grid, p["duration_fwhm_fs"] * 1e-15,
                              p["peak_scale"] * d["amplitude_scale"], p["level"],
                              d["carrier_phase_rad"], threads)
    n = rc.system.n_levels
    return [
        write_csv(out / "pulse_scan.csv", ["center_eV"] + [f"pop_{k}" for k in range(n)],
                  ([e, *pops] for e, pops in zip(res.photon_energies, res.level_populations))),
        write_json(out / "resonances.json", _resonances_json(res)),
    ]


def cmd_power_scan(rc: RunConfig, out: Path, threads: int = 1) -> list[Path]:
    p = rc.section("pulse")
    if not p.get("scales"):
        raise ConfigError("key 'pulse/scales': non-empty list required for power-scan")
    if "center_energy_eV" not in p:
        raise ConfigError("key 'pulse/center_energy_eV': required for power-scan")
    d = rc.resolved["drive"]
    scales = [s * d["amplitude_scale"] for s in p["scales"]]
    results = pulse_batch(rc.system, p["center_energy_eV"], p["duration_fwhm_fs"] * 1e-15, scales,
                          d["carrier_phase_rad"], threads)
    n = rc.system.n_levels
    lvl = p["level"]
    return [
        write_csv(out / "power_scan.csv",
                  ["intensity_proxy", "scale"] + [f"pop_{k}" for k in range(n)],
                  ([s * s, s, *r.final_populations] for s, r in zip(scales, results))),
        # two-column copy for `fit --model power`
        write_csv(out / "power_law.csv", ["intensity_proxy", f"pop_{lvl}"],
                  ((s * s, r.final_populations[lvl]) for s, r in zip(scales, results))),
    ]


def cmd_fit(path, model: str, out: Path | None, options: dict | None = None):
    """Returns (exit code, FitResult)."""
    data = DataSeries.from_csv(path)
    opts = dict(options or {})
    if "sigma_ps" in opts:
        opts["sigma"] = opts.pop("sigma_ps")
    fit = FITTERS[model](data, **opts)
    text = dumps(fit.to_dict())
    sys.stdout.write(text)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / f"fit_{model}.json").write_text(text)
    return (EXIT_OK if fit.converged else EXIT_NOCONV), fit


def cmd_synth(kind: str, seed: int, out: Path, params: dict) -> list[Path]:
    data = GENERATORS[kind](seed=seed, **params)
    x_name = {"lifetime": "t_ps", "malus": "angle_deg", "power": "intensity"}[kind]
    y_name = {"lifetime": "counts", "malus": "intensity", "power": "signal"}[kind]
    return [write_csv(out / f"synth_{kind}.csv", [x_name, y_name], zip(data.x, data.y))]


def _parse_params(items) -> dict:
    params = {}
    for item in items or []:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--param expects key=value, got {item!r}")
        try:
            params[key] = int(value) if value.lstrip("-").isdigit() else float(value)
        except ValueError:
            raise ConfigError(f"--param {key}: not a number: {value!r}") from None
    return params


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="multiphoton", description=__doc__.split("\n")[0])
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, config=True):
        if config:
            p.add_argument("--config", required=True, help="JSON config path or bundled name")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--seed", type=int, default=0)

    for name in ("spectrum", "quasienergies", "pulse-scan", "power-scan"):
        common(sub.add_parser(name))
    pf = sub.add_parser("fit")
    pf.add_argument("path", nargs="?", help="CSV with x, y[, y_err]")
    pf.add_argument("--model", choices=sorted(FITTERS))
    pf.add_argument("--sigma-ps", type=float, default=None, help="hold the EMG Gaussian width fixed")
    pf.add_argument("--radians", action="store_true", help="Malus angles are in radians")
    common(pf, config=False)
    pf.add_argument("--config", default=None)
    ps = sub.add_parser("synth")
    ps.add_argument("--kind", choices=sorted(GENERATORS), required=True)
    ps.add_argument("--param", action="append", help="generator keyword, key=value")
    common(ps, config=False)
    pv = sub.add_parser("validate")
    pv.add_argument("--cases", default=None, help="comma-separated subset of case names")
    pv.add_argument("--scale-b", type=float, default=1.0, help="multiply the canonical coupling")
    common(pv, config=False)
    return ap


SCAN_COMMANDS = {
    "spectrum": cmd_spectrum,
    "quasienergies": cmd_quasienergies,
    "pulse-scan": cmd_pulse_scan,
    "power-scan": cmd_power_scan,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    t0 = time.perf_counter()
    try:
        if args.command in SCAN_COMMANDS:
            rc = RunConfig.load(args.config)
            out = Path(args.out or rc.resolved["output"]["directory"])
            out.mkdir(parents=True, exist_ok=True)
            files = SCAN_COMMANDS[args.command](rc, out, args.threads)
            _manifest(out, args.command, rc.resolved, files + [out / "manifest.json"])
            _timing(out, t0)
            return EXIT_OK
        if args.command == "fit":
            path, model, options = args.path, args.model, {}
            if args.config:
                rc = RunConfig.load(args.config)
                fb = rc.section("fit")
                path = path or fb.get("input_path")
                model = model or fb["model"]
                options = dict(fb.get("options", {}))
            if not path or not model:
                raise ConfigError("fit needs an input path and --model")
            if args.sigma_ps is not None:
                options["sigma_ps"] = args.sigma_ps
            if args.radians:
                options["degrees"] = False
            out = Path(args.out) if args.out else None
            code, _ = cmd_fit(path, model, out, options)
            if out is not None:
                _manifest(out, "fit", {"input_path": str(path), "model": model, "options": options},
                          [out / f"fit_{model}.json", out / "manifest.json"])
            return code
        if args.command == "synth":
            out = Path(args.out or "out")
            files = cmd_synth(args.kind, args.seed, out, _parse_params(args.param))
            _manifest(out, "synth", {"kind": args.kind, "seed": args.seed,
                                     "params": _parse_params(args.param)},
                      files + [out / "manifest.json"])
            return EXIT_OK
        if args.command == "validate":
            from .validation import main_validate
            cases = args.cases.split(",") if args.cases else None
            return main_validate(Path(args.out or "validation_out"), cases, args.scale_b,
                                 args.threads)
    except (ConfigError, DomainError, PreconditionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, StepSizeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
