"""End-to-end acceptance checks, one test per criterion.

Every check records a one-line PASS/FAIL verdict in ``RESULTS``; the
conftest prints them after the run.  The file also runs on its own::

    python3 tests/test_acceptance.py
"""

import io
import math
import time
from contextlib import redirect_stdout

import numpy as np
import pytest

from retrial_qbd import (
    IterationSchedule,
    ModelParams,
    blocking,
    build_blocks,
    build_table,
    closed_form_c2,
    embed_full,
    eval_rows,
    mean_busy_and_little,
    rate_rows,
    stationary_distribution,
    tail_diagnostics,
)
from retrial_qbd.cli import main as cli_main
from retrial_qbd.oracle import dense_rate_matrix, truncated_generator_solve
from retrial_qbd.stationary import total_variation

RESULTS = {}

# printed relative errors, rows rho = 0.1..0.9, columns one/two/three terms
TABLE_N100 = [
    (0.0051053401, 0.0003425140, 0.0000228094),
    (0.0086100661, 0.0006446694, 0.0000491957),
    (0.0120849796, 0.0009702635, 0.0000821267),
    (0.0155304303, 0.0013188638, 0.0001219509),
    (0.0189467632, 0.0016900430, 0.0001690102),
    (0.0223343192, 0.0020833798, 0.0002236397),
    (0.0256934342, 0.0024984580, 0.0002861679),
    (0.0290244403, 0.0029348670, 0.0003569166),
    (0.0323276648, 0.0033922015, 0.0004362009),
]
TABLE_N1000 = [
    (0.0004109342, 0.0000030754, 0.0000000215),
    (0.0008055116, 0.0000063974, 0.0000000500),
    (0.0011997010, 0.0000100293, 0.0000000863),
    (0.0015935030, 0.0000139704, 0.0000001309),
    (0.0019869182, 0.0000182201, 0.0000001843),
    (0.0023799470, 0.0000227778, 0.0000002472),
    (0.0027725901, 0.0000276429, 0.0000003200),
    (0.0031648480, 0.0000328146, 0.0000004033),
    (0.0035567214, 0.0000382924, 0.0000004976),
]

# loads, lambda2/lambda1, mu, nu used by the rate-row grids
RATE_GRID = [(0.5, 4.0, 1.0, 1.0), (0.9, 24.0, 1.0, 1.0), (0.7, 4.0, 0.1, 2.0)]


def record(num, title, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'}  criterion {num:>2}  {title}: {detail}"
    RESULTS[num] = (ok, line)
    return ok, line


def sig6_match(value, printed):
    """Agreement to 6 significant digits, or to the printed resolution when fewer are shown.

    The tables print 10 decimals, so a value like 0.0000000215 carries only
    three significant digits; half a unit of the last printed decimal is the
    finest meaningful comparison there.
    """
    exp = math.floor(math.log10(abs(printed)))
    half_unit_6th = 0.5 * 10.0 ** (exp - 5)
    return abs(value - printed) <= max(half_unit_6th, 0.5e-10)


def _taylor_cli(n):
    buf = io.StringIO()
    with redirect_stdout(buf):
        code = cli_main(["taylor", "--n", str(n)])
    assert code == 0
    lines = buf.getvalue().strip().splitlines()[1:]
    return [[float(x) for x in line.split(",")[1:]] for line in lines]


def _table_check(num, n, printed):
    t0 = time.perf_counter()
    got = _taylor_cli(n)
    elapsed = time.perf_counter() - t0
    misses = []
    for r, (row_got, row_printed) in enumerate(zip(got, printed)):
        for m, (a, b) in enumerate(zip(row_got, row_printed)):
            if not sig6_match(a, b):
                misses.append(f"rho=0.{r + 1}/m={m + 1}: {a:.10f} vs {b:.10f}")
    ok = not misses and elapsed < 5.0
    detail = f"{27 - len(misses)}/27 values match, {elapsed:.2f}s"
    if misses:
        detail += "; misses " + ", ".join(misses)
    return record(num, f"Table at n={n}", ok, detail)


def check_1():
    return _table_check(1, 100, TABLE_N100)


def check_2():
    return _table_check(2, 1000, TABLE_N1000)


def check_3():
    sets = [(0.5, 0.5, 1.0, 1.0), (1.0, 0.2, 0.5, 2.0), (0.3, 1.2, 2.0, 1.0), (0.1, 1.5, 0.3, 1.0), (1.8, 0.0, 1.0, 1.0)]
    schedule = IterationSchedule(epsilon=1e-15)
    t0 = time.perf_counter()
    worst = 0.0
    for lam1, lam2, mu, nu in sets:
        p = ModelParams(2, lam1, lam2, mu, nu)
        for n in range(1, 51):
            a = rate_rows(p, n, schedule).stacked()
            b = closed_form_c2(p, n).stacked()
            worst = max(worst, float(np.abs(a - b).max()))
    elapsed = time.perf_counter() - t0
    return record(3, "c=2 closed form", worst <= 1e-12 and elapsed < 1.0, f"max abs diff {worst:.2e}, {elapsed:.2f}s")


def _rate_grid():
    for c in (2, 3, 5, 20):
        for rho, r21, mu, nu in RATE_GRID:
            p = ModelParams.from_rho(c, rho, r21, mu, nu)
            for n in (1, 10, 100):
                yield p, n


def check_4():
    worst = 0.0
    for p, n in _rate_grid():
        R = embed_full(rate_rows(p, n))
        R2 = embed_full(rate_rows(p, n + 1))
        res = build_blocks(p, n - 1).q0 + R @ build_blocks(p, n).q1 + R @ R2 @ build_blocks(p, n + 1).q2
        worst = max(worst, float(np.abs(res).max()))
    return record(4, "rate-equation residual", worst <= 1e-8, f"max {worst:.2e} (bound 1e-8)")


def check_5():
    worst = 0.0
    for p, n in _rate_grid():
        rows = rate_rows(p, n)
        c = p.c
        e1 = abs(rows.r1[:c].sum() / (p.lam / (n * p.mu)) - 1.0)
        e0 = abs(rows.r0[:c].sum() / (p.lambda2 / (n * p.mu)) - 1.0) if p.lambda2 > 0 else abs(rows.r0[:c].sum())
        worst = max(worst, e0, e1)
    return record(5, "row-sum identities", worst <= 1e-10, f"max relative {worst:.2e} (bound 1e-10)")


def check_6():
    worst = 0.0
    count = 0
    for c in range(2, 7):
        for rho, r21, mu, nu in RATE_GRID:
            p = ModelParams.from_rho(c, rho, r21, mu, nu)
            for n in (1, 10, 100):
                rows = rate_rows(p, n)
                D = dense_rate_matrix(p, n, rows.iterations)
                worst = max(worst, float(np.abs(D - embed_full(rows)).max()))
                count += 1
    return record(6, "rate rows vs dense fixed point", worst <= 1e-10, f"{count} cases, max {worst:.2e}")


def check_7():
    t0 = time.perf_counter()
    worst = 0.0
    Ns = []
    for rho in (0.3, 0.5, 0.7):
        p = ModelParams.from_rho(5, rho, 4.0, 1.0, 1.0)
        d = stationary_distribution(p)
        ref = truncated_generator_solve(p, d.N)
        worst = max(worst, total_variation(d.pi, ref.pi))
        Ns.append(d.N)
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-8 and max(Ns) <= 2000 and elapsed < 60
    return record(7, "distribution vs direct solve", ok, f"max TV {worst:.2e}, N={Ns}, {elapsed:.2f}s")


def check_8():
    t0 = time.perf_counter()
    worst = 0.0
    for c in (25, 50, 100, 200):
        for rho in (0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8):
            p = ModelParams.from_rho(c, rho, 24.0, 1.0, 1.0)
            _, err = mean_busy_and_little(stationary_distribution(p, eps_trunc=1e-10), p)
            worst = max(worst, err)
    elapsed = time.perf_counter() - t0
    return record(8, "Little's law error", worst <= 1e-6 and elapsed < 120, f"max e_N {worst:.2e}, {elapsed:.2f}s")


def check_9():
    lows, highs = [], []
    for mu in (0.1, 1.0, 10.0):
        p = ModelParams.from_rho(100, 0.7, 24.0, mu, 1.0)
        low, high = blocking(stationary_distribution(p))
        lows.append(low)
        highs.append(high)
    ok = all(np.diff(lows) >= 0) and all(np.diff(highs) >= 0) and all(h <= l for h, l in zip(highs, lows))
    detail = "low " + ", ".join(f"{x:.4e}" for x in lows) + "; high " + ", ".join(f"{x:.4e}" for x in highs)
    return record(9, "blocking nondecreasing in mu", ok, detail)


def check_10():
    p = ModelParams.from_rho(100, 0.9, 24.0, 1.0, 1.0)
    n = 1000
    exact = rate_rows(p, n)
    table = build_table(p, 9)
    c = p.c
    worst = 0.0
    for terms in (8, 9, 10):
        approx = eval_rows(table, n, terms - 1)
        for a, e in ((approx.r0[c], exact.r0[c]), (approx.r1[c], exact.r1[c])):
            worst = max(worst, abs(a - e) / abs(e))
    return record(10, "expansion at c=100, n=1000", worst <= 1e-6, f"max relative error over 8..10 terms {worst:.2e}")


def check_11():
    p = ModelParams(100, 1 / 25, 24 / 25, 1.0, 1 / 70)
    N = 1000
    d = stationary_distribution(p, N=N, log_space=True)
    phases = (0, 25, 50, 75, 100)
    ts = tail_diagnostics(d, p, phases)
    slopes = [ts.slope(j, N // 2, N) for j in range(len(phases))]
    lb = ts.log_bound_ratio
    bounded = float(np.max(lb[N // 2 : N + 1]) - lb[N // 2]) <= math.log(1e3)
    ok = all(s < 0 for s in slopes) and bounded
    detail = ", ".join(f"i={i}: {s:+.4f}" for i, s in zip(phases, slopes))
    detail += f"; bound proxy {'holds' if bounded else 'fails'}"
    return record(11, "tail slopes and bound proxy", ok, detail)


def check_12(cases=200, seed=2024):
    from properties import check_random_case

    rng = np.random.default_rng(seed)
    failures = []
    for _ in range(cases):
        c = int(rng.integers(2, 51))
        rho = float(rng.uniform(0.05, 0.95))
        mu = float(10 ** rng.uniform(-1, 1))
        nu = float(10 ** rng.uniform(-1, 1))
        r21 = float(rng.uniform(0.0, 30.0))
        p = ModelParams.from_rho(c, rho, r21, mu, nu)
        problems = check_random_case(p, oracle=c <= 6)
        if problems:
            failures.append(f"{p}: {problems[0]}")
    detail = f"{cases - len(failures)}/{cases} random cases pass"
    if failures:
        detail += "; first: " + failures[0]
    return record(12, "randomized invariants", not failures, detail)


CHECKS = [check_1, check_2, check_3, check_4, check_5, check_6, check_7, check_8, check_9, check_10, check_11, check_12]


@pytest.mark.parametrize("check", CHECKS, ids=[f"criterion_{i}" for i in range(1, 13)])
def test_criterion(check):
    ok, line = check()
    print(line)
    assert ok, line


if __name__ == "__main__":
    import os
    import sys

    sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))
    failed = 0
    for chk in CHECKS:
        ok, line = chk()
        print(line, flush=True)
        failed += not ok
    sys.exit(1 if failed else 0)
