"""Invariant checks shared by the hypothesis suite and the acceptance run.

``check_random_case`` returns a list of human-readable problems (empty when
every invariant holds) instead of asserting, so one driver can report the
first failure of many random cases.
"""

import math

import numpy as np

from retrial_qbd import (
    ModelParams,
    NumericalBreakdown,
    blocking,
    build_blocks,
    build_table,
    check_stability,
    embed_full,
    leading_coeffs,
    mean_busy_and_little,
    rate_rows,
    stationary_distribution,
    tail_diagnostics,
    truncation_point,
)
from retrial_qbd.oracle import dense_rate_matrix, truncated_generator
from retrial_qbd.stationary import gth_stationary

LEVELS = (1, 10, 100)


def model_problems(p: ModelParams):
    out = []
    c = p.c
    for n in (0, 1, 37, 10**4):
        b = build_blocks(p, n)
        total = b.q0 + b.q1 + b.q2
        scale = max(1.0, float(np.abs(b.q1).max()))
        if np.abs(total.sum(axis=1)).max() > 1e-12 * scale:
            out.append(f"generator row sums nonzero at n={n}")
        nz0 = np.count_nonzero(b.q0)
        if nz0 != (2 if p.lambda2 > 0 else 1):
            out.append(f"q0 has {nz0} nonzeros")
        if n > 0 and np.count_nonzero(b.q2) != c:
            out.append(f"q2 has {np.count_nonzero(b.q2)} nonzeros")
        if np.any(np.triu(b.q1, 2)) or np.any(np.tril(b.q1, -2)):
            out.append("q1 not tridiagonal")
    bumped = ModelParams(c, p.lambda1 * 1.01, p.lambda2, p.mu, p.nu)
    if bumped.rho < p.rho:
        out.append("load not monotone in lambda1")
    return out


def rate_problems(p: ModelParams, oracle=False):
    out = []
    c = p.c
    for n in LEVELS:
        rows = rate_rows(p, n)
        nxt = rate_rows(p, n + 1)
        if rows.r0.min() < 0 or rows.r1.min() < 0:
            out.append(f"negative rate entry at n={n}")
        s1 = rows.r1[:c].sum() / (p.lam / (n * p.mu)) - 1.0
        s0 = rows.r0[:c].sum() / (p.lambda2 / (n * p.mu)) - 1.0 if p.lambda2 > 0 else rows.r0[:c].sum()
        if max(abs(s0), abs(s1)) > 1e-10:
            out.append(f"row-sum identity off by {max(abs(s0), abs(s1)):.2e} at n={n}")
        R, R2 = embed_full(rows), embed_full(nxt)
        res = build_blocks(p, n - 1).q0 + R @ build_blocks(p, n).q1 + R @ R2 @ build_blocks(p, n + 1).q2
        if np.abs(res).max() > 1e-8:
            out.append(f"rate-equation residual {np.abs(res).max():.2e} at n={n}")
        if oracle:
            D = dense_rate_matrix(p, n, rows.iterations)
            if np.abs(D - R).max() > 1e-10:
                out.append(f"dense oracle differs by {np.abs(D - R).max():.2e} at n={n}")
            k = max(1, rows.iterations // 4)
            if np.any(dense_rate_matrix(p, n, 2 * k) - dense_rate_matrix(p, n, k) < -1e-14):
                out.append(f"dense iteration not monotone in k at n={n}")
    return out


def stationary_problems(p: ModelParams, doubling=True):
    out = []
    c = p.c
    d = stationary_distribution(p)
    pi = d.pi
    if pi.min() < 0:
        out.append("negative probability")
    if abs(pi.sum() - 1.0) > 1e-12:
        out.append(f"mass off by {abs(pi.sum() - 1.0):.2e}")
    R0, R1 = d.rates
    for n in range(1, d.N + 1):
        x = d.pi[n - 1, c - 1] * R0[n] + d.pi[n - 1, c] * R1[n]
        if np.abs(x - d.pi[n]).max() > 1e-10 * max(1.0, float(np.abs(x).max())):
            out.append(f"levelwise recursion broken at n={n}")
            break
    Q = truncated_generator(p, d.N)
    bal = (pi.ravel() @ Q)[: -(c + 1)]
    if np.abs(bal).max() > 1e-8:
        out.append(f"balance residual {np.abs(bal).max():.2e}")
    if not d.boundary.residual <= 1e-8:
        out.append(f"boundary residual {d.boundary.residual:.2e}")
    if doubling:
        d2 = stationary_distribution(p, N=2 * d.N)
        gap = float(np.abs(d2.pi[: d.N // 2 + 1] - pi[: d.N // 2 + 1]).max())
        if gap >= 1e-10:
            out.append(f"doubling N moved probabilities by {gap:.2e}")
    if truncation_point(p, 1e-12) < truncation_point(p, 1e-8):
        out.append("truncation level not monotone in eps")
    return out, d


def metrics_problems(p: ModelParams, d):
    out = []
    low, high = blocking(d)
    if not 0 <= high <= low <= 1 + 1e-12:
        out.append(f"blocking order violated: low={low}, high={high}")
    mean, err = mean_busy_and_little(d, p)
    if not (0 <= mean <= p.c and err >= 0):
        out.append(f"mean busy {mean} outside [0, c]")
    ts = tail_diagnostics(d, p, (p.c,))
    N = d.N
    if N >= 4:
        lb = ts.log_bound_ratio[N // 2 : N + 1]
        lb = lb[np.isfinite(lb)]
        if lb.size and lb.max() - lb[0] > math.log(1e3):
            out.append("bound ratio grows beyond 1e3 over the upper half")
    return out


def taylor_problems(p: ModelParams):
    out = []
    t0 = build_table(p, 0)
    if not np.array_equal(t0.theta, leading_coeffs(p).theta):
        out.append("order-0 table differs from the leading coefficients")
    t = build_table(p, 3)
    for m in range(4):
        if t.get(0, -1, m) != 0.0 or t.get(1, p.c + 1, m) != 0.0:
            out.append("out-of-range coefficient not zero")
    return out


def check_random_case(p: ModelParams, oracle=False, doubling=True):
    """All invariants for one parameter point; a breakdown is reported, not raised."""
    check_stability(p)
    try:
        problems = model_problems(p) + rate_problems(p, oracle) + taylor_problems(p)
        sp, d = stationary_problems(p, doubling)
        problems += sp + metrics_problems(p, d)
    except NumericalBreakdown as exc:
        problems = [f"NumericalBreakdown: {exc}"]
    return problems


def gth_reference(p: ModelParams, R1):
    """Boundary vector through the plain GTH helper, for cross-checks."""
    A = build_blocks(p, 0).q1 + R1 @ build_blocks(p, 1).q2
    return gth_stationary(A)
