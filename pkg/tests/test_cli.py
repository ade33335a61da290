import csv
import json
from pathlib import Path

import numpy as np
import pytest

from multiphoton import cli
from multiphoton.config import bundled_config_path, bundled_data_path, load_config
from multiphoton.errors import StepSizeError
from multiphoton.fitkit import fit_lifetime_emg
from multiphoton.floquet import fold, wrap_difference


def run(*argv):
    return cli.main([str(a) for a in argv])


def read_csv(path):
    rows = list(csv.reader(open(path)))
    return rows[0], np.array(rows[1:], dtype=float)


def write_cfg(tmp_path, raw, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(raw))
    return p


@pytest.fixture(scope="module")
def canonical_spectrum(tmp_path_factory):
    out = tmp_path_factory.mktemp("spectrum")
    assert run("spectrum", "--config", "canonical", "--out", out) == 0
    return out


def test_spectrum_bundled(canonical_spectrum):
    res = json.loads((canonical_spectrum / "resonances.json").read_text())
    r3 = [r for r in res if r["order"] == 3]
    assert r3 and abs(r3[0]["center_eV"] - 0.870) <= 0.005
    assert set(r3[0]) >= {"center_eV", "height", "fwhm_eV", "order"}
    header, data = read_csv(canonical_spectrum / "spectrum.csv")
    assert header == ["photon_energy_eV", "pbar_raw", "pbar_convolved"]
    assert len(data) == 651
    man = json.loads((canonical_spectrum / "manifest.json").read_text())
    assert man["command"] == "spectrum" and man["config"]["scan"]["refine"] is True
    assert "wall_time_s" not in json.dumps(man)
    assert "wall_time_s" in json.loads((canonical_spectrum / "timing.json").read_text())


def test_spectrum_deterministic(tmp_path):
    raw = load_config("canonical")
    raw["scan"].update(start_eV=0.86, stop_eV=0.88)
    cfg = write_cfg(tmp_path, raw)
    for k in range(2):
        assert run("spectrum", "--config", cfg, "--out", tmp_path / f"r{k}") == 0
    for name in ("spectrum.csv", "spectrum_samples.csv", "resonances.json", "manifest.json"):
        assert (tmp_path / "r0" / name).read_bytes() == (tmp_path / "r1" / name).read_bytes()


def test_float_format_roundtrips(canonical_spectrum):
    first = open(canonical_spectrum / "spectrum.csv").read().splitlines()[1].split(",")
    assert all(float(repr(float(v))) == float(v) and "e" in v for v in first)


def test_empty_grid_exit_2(tmp_path, capsys):
    raw = load_config("canonical")
    raw["scan"].update(start_eV=1.0, stop_eV=0.9)
    assert run("spectrum", "--config", write_cfg(tmp_path, raw)) == 2
    assert "empty" in capsys.readouterr().err


def test_bad_config_diagnostics(tmp_path, capsys):
    raw = load_config("canonical")
    raw["scan"]["colour"] = 1
    assert run("spectrum", "--config", write_cfg(tmp_path, raw)) == 2
    assert "key 'scan'" in capsys.readouterr().err
    bad = tmp_path / "broken.json"
    bad.write_text('{\n  "system": {\n    "level_energies_eV": [0, 1,]\n  }\n}\n')
    assert run("spectrum", "--config", bad) == 2
    assert "line 3" in capsys.readouterr().err
    assert run("spectrum", "--config", tmp_path / "missing.json") == 2


def test_numeric_failure_exit_3(tmp_path, monkeypatch):
    def boom(*a, **k):
        raise StepSizeError("norm drift")
    monkeypatch.setattr(cli, "spectrum_scan", boom)
    assert run("spectrum", "--config", "canonical", "--out", tmp_path) == 3


def test_quasienergies_free(tmp_path):
    raw = load_config("canonical")
    raw["drive"] = {"amplitude_scale": 0.0}
    raw["scan"].update(start_eV=0.9, stop_eV=1.0, step_eV=0.01)
    assert run("quasienergies", "--config", write_cfg(tmp_path, raw), "--out", tmp_path) == 0
    header, data = read_csv(tmp_path / "quasienergies.csv")
    assert header == ["photon_energy_eV", "eps_0_eV", "eps_1_eV", "eps_2_eV", "sum_rule_residual_eV"]
    for row in data:
        bare = fold(np.array([0.0, 2.61, 2.68]), row[0])
        assert np.allclose(np.sort(row[1:4]), np.sort(bare), atol=1e-8)


def test_quasienergies_canonical_audit(tmp_path):
    assert run("quasienergies", "--config", "canonical", "--out", tmp_path) == 0
    _, data = read_csv(tmp_path / "quasienergies.csv")
    w, eps = data[:, 0], data[:, 1:4]
    assert np.all(np.abs(data[:, 4]) <= 1e-7)
    jumps = np.abs(wrap_difference(eps[1:], eps[:-1], w[1:, None]))
    # skip steps within 10 meV of any multiphoton resonance between bare levels
    E = np.array([0.0, 2.61, 2.68])
    res = [abs(a - b) / n for a in E for b in E if a < b for n in range(1, 8)]
    mid = 0.5 * (w[1:] + w[:-1])
    away = np.all(np.abs(mid[:, None] - np.array(res)[None, :]) > 0.010, axis=1)
    # a branch keeps its slope between crossings, so compare each step with its neighbours
    for k in range(3):
        for i in np.where(away)[0]:
            local = jumps[max(i - 5, 0):i + 6, k]
            assert jumps[i, k] < 5 * np.median(local)


@pytest.mark.slow
def test_pulse_scan_bundled(tmp_path):
    assert run("pulse-scan", "--config", "pulse_scan", "--out", tmp_path) == 0
    header, data = read_csv(tmp_path / "pulse_scan.csv")
    assert header == ["center_eV", "pop_0", "pop_1", "pop_2"]
    assert abs(data[np.argmax(data[:, 2]), 0] - 2.61 / 3) <= 0.005
    assert np.allclose(data[:, 1:].sum(axis=1), 1, atol=1e-8)


def test_power_scan_pipeline(tmp_path):
    assert run("power-scan", "--config", "power_scan", "--out", tmp_path) == 0
    code, fit = cli.cmd_fit(tmp_path / "power_law.csv", "power", None)
    assert code == 0 and abs(fit.params["exponent"] - 3.0) <= 0.15
    assert run("fit", tmp_path / "power_law.csv", "--model", "power", "--out", tmp_path) == 0
    assert json.loads((tmp_path / "fit_power.json").read_text())["converged"] is True


def test_power_scan_single_point(tmp_path):
    raw = load_config("power_scan")
    raw["pulse"]["scales"] = [0.1]
    assert run("power-scan", "--config", write_cfg(tmp_path, raw), "--out", tmp_path) == 0
    _, data = read_csv(tmp_path / "power_scan.csv")
    assert data.shape == (1, 5)


def test_fit_bundled_data(tmp_path):
    assert run("fit", bundled_data_path("lifetime_260ps.csv"), "--model", "emg", "--out", tmp_path) == 0
    tau = json.loads((tmp_path / "fit_emg.json").read_text())["params"]["tau"]
    assert abs(tau - 260) <= 20
    assert run("fit", bundled_data_path("malus_res3pa.csv"), "--model", "malus", "--out", tmp_path) == 0
    d = json.loads((tmp_path / "fit_malus.json").read_text())["derived"]["dolp"]
    assert abs(d - 0.87) <= 0.02
    assert run("fit", bundled_data_path("lifetime_440ps.csv"), "--model", "emg", "--sigma-ps", "80",
               "--out", tmp_path) == 0


def test_fit_errors(tmp_path, monkeypatch):
    bad = tmp_path / "bad.csv"
    bad.write_text("1,2,3,4\n5,6,7,8\n")
    assert run("fit", bad, "--model", "power") == 2
    assert run("fit", "--model", "power") == 2
    monkeypatch.setitem(cli.FITTERS, "emg", lambda d, **kw: fit_lifetime_emg(d, max_iter=1))
    assert run("fit", bundled_data_path("lifetime_260ps.csv"), "--model", "emg", "--out", tmp_path) == 4
    assert json.loads((tmp_path / "fit_emg.json").read_text())["converged"] is False


def test_fit_from_config(tmp_path):
    raw = {"system": {"level_energies_eV": [0.0, 1.0], "coupling_b_rad_s": 0.0},
           "fit": {"input_path": str(bundled_data_path("power_res3pa.csv")), "model": "power"}}
    assert run("fit", "--config", write_cfg(tmp_path, raw), "--out", tmp_path) == 0


def test_synth_deterministic(tmp_path):
    for k in range(2):
        assert run("synth", "--kind", "malus", "--seed", 4, "--param", "dolp=0.8",
                   "--out", tmp_path / f"s{k}") == 0
    a = (tmp_path / "s0" / "synth_malus.csv").read_bytes()
    assert a == (tmp_path / "s1" / "synth_malus.csv").read_bytes()
    assert run("synth", "--kind", "power", "--param", "noise", "--out", tmp_path) == 2
    assert run("synth", "--kind", "power", "--param", "noise=abc", "--out", tmp_path) == 2


def test_bundled_data_matches_generator(tmp_path):
    assert run("synth", "--kind", "lifetime", "--seed", 11, "--param", "tau=260",
               "--param", "sigma=80", "--out", tmp_path) == 0
    assert (tmp_path / "synth_lifetime.csv").read_bytes() == \
        bundled_data_path("lifetime_260ps.csv").read_bytes()


def test_validate_subset(tmp_path):
    assert run("validate", "--cases", "parameter_chain,rabi_rwa", "--out", tmp_path) == 0
    rep = json.loads((tmp_path / "report.json").read_text())
    assert [c["name"] for c in rep["cases"]] == ["parameter_chain", "rabi_rwa"]
    assert run("validate", "--cases", "nonsense", "--out", tmp_path) == 2


def test_bundled_configs_load():
    for name in ("canonical", "canonical_derived", "pulse_scan", "power_scan"):
        assert bundled_config_path(name).exists()
        load_config(name)
