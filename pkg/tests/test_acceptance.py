"""Acceptance criteria 1-9, each run as its built-in preset at the stated tolerance.

Every test prints one ``criterion k [PASS|FAIL]`` line, whatever pytest's
capture mode.
"""
import time

import pytest

from wittenflow.cli import CRITERIA, preset, run

# wall-clock budget per criterion, seconds
BUDGET = {1: 5, 2: 30, 3: 30, 4: 60, 5: 60, 6: 60, 7: 120, 8: 120, 9: 120}


def _execute(name):
    start = time.perf_counter()
    verdict = run(preset(name), write=False)
    return verdict, time.perf_counter() - start


def _line(label, verdict, elapsed, budget):
    ok = verdict.passed and elapsed < budget
    worst = "; ".join(f"{c.name}={c.measured:.2e}/{c.tolerance:.0e}" for c in verdict.checks)
    extra = " | ".join(verdict.diagnostics)
    text = f"{label} [{'PASS' if ok else 'FAIL'}] {verdict.name} {elapsed:.1f}s/{budget}s  {worst or extra}"
    return ok, text


@pytest.mark.parametrize("k", sorted(CRITERIA))
def test_criterion(k, capsys):
    verdict, elapsed = _execute(CRITERIA[k])
    ok, text = _line(f"criterion {k}", verdict, elapsed, BUDGET[k])
    with capsys.disabled():
        print("\n" + text)
    for line in verdict.summary_lines():
        print(line)
    assert verdict.passed, "\n".join(verdict.summary_lines())
    assert elapsed < BUDGET[k], f"took {elapsed:.1f}s, budget {BUDGET[k]}s"


def test_gaussian_baseline_resolved_grid(capsys):
    # criterion 5 with N = 1024, where the initial kernel is resolved
    verdict, elapsed = _execute("gaussian-baseline-fine")
    ok, text = _line("criterion 5 (N=1024)", verdict, elapsed, BUDGET[5])
    with capsys.disabled():
        print("\n" + text)
    assert ok, "\n".join(verdict.summary_lines())
