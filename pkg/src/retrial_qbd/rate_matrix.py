"""The two nonzero rows of the level rate matrices.

Only rows ``c - 1`` and ``c`` of ``R(n)`` are nonzero, because the orbit only
grows from those phases.  A single level map costs ``O(c)``:
:func:`rate_step` solves the restricted rate equation for both rows at once,
:func:`rate_rows` iterates it to convergence over a doubling schedule, and
:func:`closed_form_c2` gives the explicit two-server rows.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import InvalidParameter, NoConvergence, NumericalBreakdown, WrongServerCount
from .model import ModelParams, check_stability, validate

_STATUS_TEXT = {
    _kernels.PIVOT_BREAKDOWN: "censored exit rate lost its level-leaving part",
    _kernels.NEGATIVE_ENTRY: "negative rate entry (input rows overshoot the arrival rates)",
    _kernels.SINGULAR_ANCHOR: "singular or non-finite anchor system",
}


def _raise_status(status, n):
    if status != _kernels.OK:
        raise NumericalBreakdown(f"level {n}: {_STATUS_TEXT.get(status, status)}")


@dataclass(frozen=True)
class RateRows:
    """Rows ``c - 1`` (``r0``) and ``c`` (``r1``) of the level-``n`` rate matrix.

    ``iterations`` is the composition depth ``k`` behind the rows (0 when not
    produced by iteration, e.g. closed form or a Taylor approximation).
    ``deficit`` is ``(lambda2, lam) - n mu (sum_{i<c} r0[i], sum_{i<c} r1[i])``,
    the arrival flow the rows fail to return; it is zero for the exact rows.
    Iterated rows carry it as a product of nonnegative terms, otherwise it is
    formed by subtraction on demand.
    """

    r0: np.ndarray
    r1: np.ndarray
    level: int
    iterations: int = 0
    deficit: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def c(self) -> int:
        return self.r0.shape[0] - 1

    def stacked(self) -> np.ndarray:
        """The rows as a ``2 x (c + 1)`` array."""
        return np.vstack([self.r0, self.r1])

    @classmethod
    def zeros(cls, c, level):
        return cls(np.zeros(c + 1), np.zeros(c + 1), level)

    def deficits(self, params: ModelParams) -> np.ndarray:
        if self.deficit is not None:
            return np.asarray(self.deficit, dtype=float)
        out = np.empty(2)
        _kernels.row_deficits(
            self.c, params.lambda1, params.lambda2, params.mu, self.level,
            np.ascontiguousarray(self.r0, dtype=float), np.ascontiguousarray(self.r1, dtype=float), out,
        )
        return out


@dataclass(frozen=True)
class IterationSchedule:
    """Composition depths ``k_l`` and the stopping tolerance.

    By default ``k_l = 2**l``.  An explicit strictly increasing ``ks`` sequence
    overrides the doubling rule (and caps ``max_l`` at its length).
    """

    epsilon: float = 1e-13
    max_l: int = 40
    ks: tuple = field(default=())

    def __post_init__(self):
        if not self.epsilon > 0:
            raise InvalidParameter("epsilon", "must be > 0")
        if self.ks:
            if any(k < 1 for k in self.ks) or any(b <= a for a, b in zip(self.ks, self.ks[1:])):
                raise InvalidParameter("ks", "must be strictly increasing positive integers")

    def k(self, l: int) -> int:
        if self.ks:
            return int(self.ks[l])
        return 2**l

    @property
    def length(self) -> int:
        return min(self.max_l + 1, len(self.ks)) if self.ks else self.max_l + 1


def _workspace(c):
    m = max(c - 1, 1)
    return np.empty(m), np.empty(m), np.empty(m)


def rate_step(params: ModelParams, n: int, next_rows: RateRows | None = None) -> RateRows:
    """Apply the level-``n`` map to the rows of level ``n + 1``.

    With ``next_rows=None`` the zero rows are used, giving the one-step
    approximation ``-Q0 Q1(n)^{-1}`` restricted to its nonzero rows.

    Raises
    ------
    NumericalBreakdown
        If the level solve degenerates; with nonnegative deficits in the
        input rows this cannot happen for valid parameters.
    """
    validate(params)
    if n < 1:
        raise InvalidParameter("n", f"level must be >= 1, got {n}")
    c = params.c
    if next_rows is None:
        nxt0 = nxt1 = np.zeros(c + 1)
        dnxt = np.array([params.lambda2, params.lam])
        depth = 1
    else:
        if next_rows.c != c:
            raise InvalidParameter("next_rows", f"rows have {next_rows.c + 1} phases, expected {c + 1}")
        nxt0 = np.ascontiguousarray(next_rows.r0, dtype=float)
        nxt1 = np.ascontiguousarray(next_rows.r1, dtype=float)
        # deficits are measured at the level the rows are applied from
        dnxt = RateRows(nxt0, nxt1, n + 1, deficit=next_rows.deficit).deficits(params)
        depth = next_rows.iterations + 1
    out0 = np.empty(c + 1)
    out1 = np.empty(c + 1)
    dout = np.empty(2)
    status = _kernels.rate_step(
        c, params.lambda1, params.lambda2, params.mu, params.nu, n, nxt0, nxt1, dnxt, out0, out1, dout,
        *_workspace(c),
    )
    _raise_status(status, n)
    return RateRows(out0, out1, n, depth, dout)


def compose_rows(params: ModelParams, n: int, k: int) -> RateRows:
    """``k``-step rows: one downward pass from zero rows at level ``n + k``."""
    validate(params)
    if n < 1 or k < 1:
        raise InvalidParameter("k", "need n >= 1 and k >= 1")
    c = params.c
    out0 = np.empty(c + 1)
    out1 = np.empty(c + 1)
    dout = np.empty(2)
    status = _kernels.compose(c, params.lambda1, params.lambda2, params.mu, params.nu, n, k, out0, out1, dout)
    _raise_status(status, n)
    return RateRows(out0, out1, n, k, dout)


def inf_norm(rows) -> float:
    """Max absolute row sum of a ``2 x (c + 1)`` array."""
    return float(np.abs(np.asarray(rows)).sum(axis=1).max())


def rate_rows(params: ModelParams, n: int, schedule: IterationSchedule | None = None) -> RateRows:
    """Converged rows of ``R(n)``.

    Builds ``r_k`` for ``k = k_0, k_1, ...`` and stops once two consecutive
    approximations differ by at most ``epsilon * max(1, ||r_k||)`` in the
    max-row-sum norm and the deficits of ``r_k`` are at most ``epsilon``
    times the arrival rates ``(lambda2, lam)``.

    The deficit test matters under heavy load with slow retrials: there the
    compositions can sit on a plateau for a range of ``k`` (consecutive
    iterates agree to round-off) while still missing most of the returning
    flow, because the orbit mass lives far above level ``n``.

    Raises
    ------
    NoConvergence
        When the schedule is exhausted.
    """
    check_stability(params)
    schedule = schedule or IterationSchedule()
    eps = schedule.epsilon
    target = eps * np.array([params.lambda2, params.lam])
    prev = compose_rows(params, n, schedule.k(0))
    diff = float("nan")
    for l in range(1, schedule.length):
        cur = compose_rows(params, n, schedule.k(l))
        a = cur.stacked()
        diff = inf_norm(a - prev.stacked())
        if diff <= eps * max(1.0, inf_norm(a)) and np.all(cur.deficit <= target):
            return cur
        prev = cur
    raise NoConvergence(schedule.length - 1, diff)


def closed_form_c2(params: ModelParams, n: int) -> RateRows:
    """Explicit rows of ``R(n)`` for two channels.

    The last entries are re-derived from the column-``c`` balance; the
    numerator factor is ``lam (lam + (n+1)mu) + lambda1 nu``.
    """
    validate(params)
    if params.c != 2:
        raise WrongServerCount(f"closed form needs c=2, got c={params.c}")
    if n < 1:
        raise InvalidParameter("n", f"level must be >= 1, got {n}")
    lam, lam1, lam2, mu, nu = params.lam, params.lambda1, params.lambda2, params.mu, params.nu
    S = lam + nu + n * mu
    S1 = lam + nu + (n + 1) * mu
    T = 3 * lam + 2 * nu + 2 * (n + 1) * mu
    K = lam * (lam + (n + 1) * mu) + lam1 * nu
    nmu = n * mu
    r0 = np.array([
        lam2 * nu / (nmu * S),
        lam2 * (lam + nmu) / (nmu * S),
        lam2 * (lam + nmu) * K / (nmu * S * T * nu),
    ])
    r1 = np.array([
        lam * nu / (nmu * S),
        lam * (lam + nmu) / (nmu * S),
        lam / nu * (S1 / T + (lam + nmu) * K / (nmu * S * T)),
    ])
    return RateRows(r0, r1, n)


def embed_full(rows: RateRows) -> np.ndarray:
    """Dense ``(c + 1) x (c + 1)`` matrix with ``r0, r1`` as its last two rows."""
    c = rows.c
    R = np.zeros((c + 1, c + 1))
    R[c - 1] = rows.r0
    R[c] = rows.r1
    return R


def alpha_beta_step(params: ModelParams, n: int, next_rows: RateRows | None = None) -> RateRows:
    """Reference level map via the affine ``alpha + beta * x_c`` back-substitution.

    Every entry is written as an affine function of the last entry and the
    chain is run from phase ``c`` down to phase 0, where the column-0 balance
    fixes ``x_c``.  The chain grows like ``(b/lam)^c`` and cancels badly for
    moderate ``c``; kept only to cross-check :func:`rate_step` on small cases.
    """
    validate(params)
    c = params.c
    lam, lam1, lam2, mu, nu = params.lam, params.lambda1, params.lambda2, params.mu, params.nu
    if next_rows is None:
        p0 = p1 = np.zeros(c + 1)
    else:
        p0, p1 = next_rows.r0, next_rows.r1
    g = (n + 1) * mu
    b = -(lam + np.arange(c + 1) * nu + n * mu)
    b[c] = -(lam + c * nu)

    out = []
    for s in (0, 1):
        alpha = np.zeros(c + 1)
        beta = np.zeros(c + 1)
        beta[c] = 1.0
        denom = lam1 + g * p0[c - 1]
        beta[c - 1] = -(b[c] + g * p1[c - 1]) / denom
        alpha[c - 1] = 0.0 if s == 0 else -lam / denom
        for i in range(c - 1, 0, -1):
            alpha[i - 1] = -(b[i] * alpha[i] + (i + 1) * nu * alpha[i + 1] + g * p0[i - 1] * alpha[c - 1]) / lam
            beta[i - 1] = (
                -(b[i] * beta[i] + (i + 1) * nu * beta[i + 1]) / lam
                - (g * p0[i - 1] * beta[c - 1] + g * p1[i - 1]) / lam
            )
            if s == 0 and i == c - 1:
                alpha[i - 1] -= lam2 / lam
        xc = -(b[0] * alpha[0] + nu * alpha[1]) / (b[0] * beta[0] + nu * beta[1])
        out.append(alpha + beta * xc)
    return RateRows(out[0], out[1], n, 0 if next_rows is None else next_rows.iterations + 1)


def rows_to_csv(rows_list, fmt="{:.12g}") -> str:
    """CSV text with columns ``level,row,phase,value``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["level", "row", "phase", "value"])
    for rows in rows_list:
        for which, vec in ((0, rows.r0), (1, rows.r1)):
            for phase, value in enumerate(vec):
                w.writerow([rows.level, which, phase, fmt.format(value)])
    return buf.getvalue()
