"""Acceptance criteria 1-10, one pass/fail line each.

The full suite runs twice through the command-line entry point; criterion
10 compares the two CSV files byte for byte and checks the wall time.
"""

import csv
import json
import subprocess
import sys
import time
from collections import defaultdict

import pytest

from id_regret.suite import SUITE_BUDGET

TITLES = {
    1: "Gaussian identity report",
    2: "Gaussian reduction integral",
    3: "Cauchy benchmark and regret self-convergence",
    4: "Classifier table",
    5: "Blyth sequence",
    6: "Transience witness",
    7: "Energy estimator concordance",
    8: "Detailed balance and invariance",
    9: "Integral tail test and capacity scaling",
    10: "Suite wall time and determinism",
}


def _run_suite(path):
    t0 = time.perf_counter()
    proc = subprocess.run([sys.executable, "-m", "id_regret.cli", "suite", "--output", str(path)],
                          capture_output=True, text=True)
    return proc.returncode, time.perf_counter() - t0


@pytest.fixture(scope="module")
def runs(tmp_path_factory):
    base = tmp_path_factory.mktemp("suite")
    first, second = base / "run1.csv", base / "run2.csv"
    code1, wall1 = _run_suite(first)
    code2, wall2 = _run_suite(second)
    checks = defaultdict(list)
    with first.open() as fh:
        for row in csv.DictReader(fh):
            checks[int(row["criterion"])].append(row)
    prov = json.loads((base / "run1.csv.provenance.json").read_text())
    return {"checks": checks, "codes": (code1, code2), "walls": (wall1, wall2),
            "identical": first.read_bytes() == second.read_bytes(), "provenance": prov}


def _report(number, passed, detail=""):
    print(f"\ncriterion {number:2d}: {'PASS' if passed else 'FAIL'}  {TITLES[number]}  {detail}".rstrip())


@pytest.mark.parametrize("number", range(1, 10))
def test_criterion(runs, number):
    rows = runs["checks"][number]
    assert rows, f"criterion {number} produced no checks"
    failed = [r for r in rows if r["passed"] != "true"]
    detail = "; ".join(f"{r['check']}={r['value']} (need {r['bound']})" for r in failed)
    _report(number, not failed, detail)
    assert not failed, detail


def test_criterion_10_time_and_determinism(runs):
    walls = runs["walls"]
    in_budget = all(w <= SUITE_BUDGET for w in walls)
    ok = in_budget and runs["identical"]
    _report(10, ok, f"wall times {walls[0]:.0f} s, {walls[1]:.0f} s; identical CSV: {runs['identical']}")
    assert runs["identical"], "suite CSV differs between two consecutive runs"
    assert in_budget, f"suite wall time above {SUITE_BUDGET:.0f} s"


def test_suite_exit_code_reflects_failures(runs):
    any_failed = any(r["passed"] != "true" for rows in runs["checks"].values() for r in rows)
    assert runs["codes"][0] == (2 if any_failed else 0)
    assert runs["provenance"]["status"] == runs["codes"][0]
