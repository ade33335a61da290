"""All ten acceptance criteria, run through the validation harness twice.

One PASS/FAIL line per criterion is printed (visible with ``pytest -v -s``
and in the terminal summary of ``pytest -v``).
"""
import filecmp
from pathlib import Path

import pytest

from multiphoton.validation import CASE_NAMES, run_validation

CRITERIA = list(enumerate(CASE_NAMES, start=1))
_lines = []


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("acceptance")
    first = run_validation(None, base / "run1")
    second = run_validation(None, base / "run2")
    return base, first, second


def _artifacts(root: Path):
    return sorted(str(p.relative_to(root)) for p in root.rglob("*")
                  if p.is_file() and p.name != "timing.json")


def _record(k, name, ok, detail):
    line = f"criterion {k:2d} {name:<18} {'PASS' if ok else 'FAIL'}  {detail}"
    _lines.append(line)
    print(line)


@pytest.mark.parametrize("k,name", CRITERIA, ids=[n for _, n in CRITERIA])
def test_criterion(runs, k, name):
    _, (report, timings), _ = runs
    case = next(c for c in report["cases"] if c["name"] == name)
    wall = timings[name]["wall_time_s"]
    ok = case["passed"] and timings[name]["within_budget"]
    _record(k, name, ok, f"{wall:.1f}s/{case['runtime_budget_s']:g}s {case['observed']}")
    assert case["passed"], case
    assert timings[name]["within_budget"], timings[name]


def test_full_suite_byte_identical(runs):
    base, _, _ = runs
    a, b = base / "run1", base / "run2"
    names = _artifacts(a)
    assert names == _artifacts(b)
    assert "report.json" in names and len(names) > 10
    _, mismatch, errors = filecmp.cmpfiles(a, b, names, shallow=False)
    _record(10, "full-suite rerun", not (mismatch or errors), f"{len(names)} artifacts compared")
    assert not mismatch and not errors


def pytest_terminal_summary_lines():
    return list(_lines)
