"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``; the per-criterion lines
are collected in the "acceptance criteria" section of the terminal summary.
"""

import math
import subprocess
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from kbv.apps import erdos_kac_experiment, indicator_process, poisson_marginal_tv
from kbv.bounds import BoundParams, chernoff_poisson_tail, le_bound, poisson_tail_interval
from kbv.exact import exact_tv, lower_bound_witness
from kbv.experiments import bonferroni_scan, default_gamma, partition_report, theorem1_row
from kbv.laws import certify_ht, make_law
from kbv.primes import GammaSet, gamma_first_k

N_GRID = (100, 1000, 10_000)
K_GRID = (3, 5, 8)


def record(number: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:>2}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def test_criterion_01_oracle_goldens():
    start = time.perf_counter()
    a = exact_tv(make_law("uniform", 4), GammaSet(4, (2,)))
    b = exact_tv(make_law("uniform", 1), GammaSet(1, (2,)))
    elapsed = time.perf_counter() - start
    ok = a == Fraction(1, 8) and b == Fraction(1, 2) and elapsed < 1
    record(1, ok, f"tv(n=4)={a}, tv(n=1)={b}, {elapsed:.3f}s")


def test_criterion_02_bonferroni_sandwich():
    start = time.perf_counter()
    checks = violations = 0
    for kind in ("uniform", "pareto"):
        for n in N_GRID:
            law = make_law(kind, n, s=Fraction(1, 2))
            for k in K_GRID:
                scan = bonferroni_scan(law, gamma_first_k(n, k), 6)
                checks += scan.checks
                violations += scan.violations + scan.geo_violations
    elapsed = time.perf_counter() - start
    record(2, violations == 0 and elapsed < 120,
           f"{checks} sandwich checks, {violations} violations, {elapsed:.1f}s")


def _criterion3_grid():
    for n in N_GRID:
        law = make_law("uniform", n)
        for k in K_GRID:
            g = gamma_first_k(n, k)
            for delta in (0.2, 0.3):
                yield partition_report(law, BoundParams(1.0, 1.0, 1.0, n, g, delta))


@pytest.fixture(scope="module")
def criterion3_reports():
    start = time.perf_counter()
    reports = list(_criterion3_grid())
    return reports, time.perf_counter() - start


def test_criterion_03_lemma_inequalities(criterion3_reports):
    reports, elapsed = criterion3_reports
    certified = all(r.verdicts["hypothesis_holds"] for r in reports)
    bad = [(r.n, r.gamma) for r in reports if not (r.verdicts["many_ok"] and r.verdicts["high_ok"])]
    ok = certified and not bad and elapsed < 300
    record(3, ok, f"{len(reports)} configurations, law certified={certified}, violations={bad}, {elapsed:.1f}s")


def test_criterion_04_partition_additivity(criterion3_reports):
    reports, _ = criterion3_reports
    bad = [(r.n, r.gamma) for r in reports if r.many + r.high + r.small != 2 * r.tv]
    record(4, not bad, f"{len(reports)} configurations, exact mismatches={bad}")


def _log_grid(lo_exp: int, hi_exp: int, per_decade: int = 4) -> list[int]:
    pts = np.logspace(lo_exp, hi_exp, (hi_exp - lo_exp) * per_decade + 1)
    return sorted({int(round(x)) for x in pts})


def test_criterion_05_ht_certificates():
    grid = _log_grid(1, 5)
    uniform_ok = all(certify_ht(make_law("uniform", n), 1.0, 1.0).holds for n in grid)
    details = [f"uniform t=1 k=1 on {len(grid)} n: {uniform_ok}"]
    ok = uniform_ok
    for s in (Fraction(0), Fraction(1, 4), Fraction(1, 2)):
        holds = {n: certify_ht(make_law("pareto", n, s=s), float(1 - s), 3.0).holds for n in grid}
        failing = [n for n, h in holds.items() if not h]
        n0 = grid[0] if not failing else next((n for n in grid if n > max(failing)), None)
        extended = None
        if n0 is None:
            # kappa = 3 never suffices on the grid; look further before declaring failure
            extended = [certify_ht(make_law("pareto", n, s=s), float(1 - s), 3.0).holds for n in (3 * 10**5, 10**6)]
            ok &= any(extended)
        # n0 above 10^4 for s in {0, 1/4} is reported but only kappa = 3 never sufficing fails
        late = n0 is not None and s < Fraction(1, 2) and n0 > 10**4
        details.append(f"pareto s={s}: n0={n0}{' (above 10^4)' if late else ''}")
    record(5, ok, "; ".join(details))


def test_criterion_06_chernoff():
    start = time.perf_counter()
    checks = violations = 0
    for lam in (Fraction(1, 4), Fraction(1, 2), Fraction(1), Fraction(2)):
        base = math.ceil(lam)
        for x in range(base + 1, base + 11):
            checks += 1
            _, hi = poisson_tail_interval(lam, x)
            if not le_bound(hi, chernoff_poisson_tail(float(lam), x)):
                violations += 1
    elapsed = time.perf_counter() - start
    record(6, violations == 0 and elapsed < 1, f"{checks} grid points, {violations} violations, {elapsed:.3f}s")


def test_criterion_07_theorem1_crossover():
    start = time.perf_counter()
    rows = []
    for n in (10**4, 10**5, 10**6, 10**7):
        law = make_law("uniform", n)
        rows.append(theorem1_row(law, default_gamma(n), t=1.0, kappa=1.0, epsilon=1.0))
    elapsed = time.perf_counter() - start
    ok = all(r.accept for r in rows) and elapsed < 1800
    table = ", ".join(
        f"n={r.n}: |G|={r.gamma_size} tv={float(r.tv):.3g} bound={r.bound:.3g}"
        f"{' (vacuous)' if r.vacuous else ''}" for r in rows
    )
    record(7, ok, f"{table}; {elapsed:.1f}s")


def test_criterion_08_lower_bound_witness():
    bad = []
    for p in (2, 3):
        for n in (100, 1000, 10_000):
            tv = exact_tv(make_law("uniform", n), GammaSet(n, (p,)))
            wider = exact_tv(make_law("uniform", n), gamma_first_k(n, 4))
            _, witness = lower_bound_witness(n, p)
            if not (tv >= witness >= Fraction(1, p * n) and wider >= Fraction(1, p * n)):
                bad.append((p, n))
    record(8, not bad, f"6 (p, n) pairs, failures={bad}")


def test_criterion_09_erdos_kac():
    start = time.perf_counter()
    rows = erdos_kac_experiment("uniform", [10**4, 10**5, 10**6, 10**7], t=1.0, kappa=1.0)
    elapsed = time.perf_counter() - start
    w = [r.w1 for r in rows]
    steps = sum(1 for a, b in zip(w, w[1:]) if b < a)
    ratios = [r.ratio for r in rows]
    band = max(ratios) / min(ratios)
    ok = all(math.isfinite(x) for x in w) and steps >= 2 and band <= 50 and elapsed < 600
    record(9, ok, f"W1={[round(x, 4) for x in w]}, decreasing steps={steps}/3, "
                  f"ratio band={band:.2f}, {elapsed:.1f}s")


def test_criterion_10_poisson():
    start = time.perf_counter()
    details = []
    ok = True
    for a in (10, 50, 100):
        spec = indicator_process(a, max_atoms=16)
        m = poisson_marginal_tv(spec, 1.0, max_atoms=16)
        ok &= m.holds
        details.append(f"a={a}: tv={m.tv:.3g} <= lecam={float(m.lecam):.3g} <= {m.two_over_an:.3g}"
                       f"{' (16-atom window)' if spec.truncated else ''}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 60
    record(10, ok, "; ".join(details) + f"; {elapsed:.2f}s")


DETERMINISM_COMMANDS = [
    ["tv-exact", "--n", "10000", "--gamma-size", "6"],
    ["certify-ht", "--law", "pareto", "--s", "0.5", "--n", "1000", "--t", "0.5"],
    ["bound", "--n", "1000000", "--gamma-size", "10", "--C", "1"],
    ["partition", "--n-grid", "1000,10000", "--gamma-size", "5", "--output", "csv"],
    ["bonferroni", "--n", "1000", "--gamma-size", "5", "--law", "pareto", "--s", "1/2"],
    ["erdos-kac", "--n-grid", "1000,10000", "--output", "csv"],
    ["poisson", "--a-n", "10,50", "--n", "10000"],
    ["sweep", "--n-grid", "10000,100000"],
]


def test_criterion_11_determinism(tmp_path):
    mismatched = []
    for i, argv in enumerate(DETERMINISM_COMMANDS):
        blobs = []
        for run in range(2):
            target = tmp_path / f"{i}_{run}"
            proc = subprocess.run([sys.executable, "-m", "kbv", *argv, "--out", str(target)], capture_output=True)
            blobs.append(target.read_bytes() if proc.returncode == 0 else None)
        if blobs[0] is None or blobs[0] != blobs[1]:
            mismatched.append(argv[0])
    record(11, not mismatched, f"{len(DETERMINISM_COMMANDS)} commands run twice, differing={mismatched}")
