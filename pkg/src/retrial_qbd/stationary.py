"""Stationary distribution on orbit levels ``0..N``.

The backward sweep computes the rate rows of every level from a converged
top level ``N``; the boundary vector at level 0 then seeds a forward pass
``x_n = x_{c-1,n-1} r0(n) + x_{c,n-1} r1(n)`` that is normalized at the end.
A log-space variant of the same sweep keeps deep-level probabilities whose
values fall below the double range (needed for tail diagnostics).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import BoundaryResidualTooLarge, InvalidParameter, NoConvergence, NumericalBreakdown, TruncationOverflow
from .model import ModelParams, build_blocks, check_stability
from .rate_matrix import IterationSchedule, RateRows, _STATUS_TEXT, compose_rows, embed_full, rate_rows

TRUNCATION_CAP = 10**6
BOUNDARY_TOL = 1e-8


@dataclass(frozen=True)
class BoundaryVector:
    """Level-0 vector ``x`` (sums to one) and the ratios ``beta = x / x_c``."""

    x: np.ndarray
    beta: np.ndarray
    method: str = "recursion"
    residual: float = float("nan")


@dataclass(frozen=True)
class StationaryDist:
    """Probabilities ``pi[n, i]`` for levels ``n = 0..N`` and phases ``i = 0..c``.

    ``log_pi`` is filled only by the log-space solver; it keeps entries that
    underflow to zero in ``pi``.  ``rates`` holds the rate rows used for the
    forward pass, as a pair of ``(N + 1, c + 1)`` arrays (row 0 unused).
    """

    pi: np.ndarray
    N: int
    epsilon_trunc: float
    normalization: float
    params: ModelParams
    log_pi: np.ndarray | None = None
    boundary: BoundaryVector | None = None
    rates: tuple | None = field(default=None, repr=False)
    top_iterations: int = 0

    @property
    def c(self) -> int:
        return self.pi.shape[1] - 1

    @property
    def total_mass(self) -> float:
        return float(self.pi.sum())

    def level(self, n: int) -> np.ndarray:
        return self.pi[n]

    def log_prob(self) -> np.ndarray:
        """Natural log of ``pi``, exact in the log-space solver and ``log(pi)`` otherwise."""
        if self.log_pi is not None:
            return self.log_pi
        with np.errstate(divide="ignore"):
            return np.log(self.pi)


def truncation_point(params: ModelParams, eps: float = 1e-10, cap: int = TRUNCATION_CAP) -> int:
    """Truncation level from the single-server surrogate orbit law.

    The surrogate is the orbit-size distribution of the single-server
    retrial queue with arrival rate ``lam / c``, service rate ``nu`` and
    retrial rate ``mu``; ``N`` is the first level where its cumulative mass
    exceeds ``1 - eps``.

    Raises
    ------
    TruncationOverflow
        If ``N`` would exceed ``cap``.
    """
    rho = check_stability(params)
    if not eps > 0:
        raise InvalidParameter("eps", f"must be > 0, got {eps!r}")
    phi = params.lam / (params.c * params.mu)
    N = _kernels.truncation_level(rho, phi, float(eps), int(cap))
    if N < 0:
        raise TruncationOverflow(cap)
    return int(N)


def boundary_vector(params: ModelParams, rows1: RateRows, fallback: bool = True) -> BoundaryVector:
    """Level-0 vector solving ``x (Q1(0) + R(1) Q2(1)) = 0``, ``x e = 1``.

    Runs the downward ratio recursion anchored at ``beta_c = 1`` and then
    checks the residual of the defining system.  Above ``1e-8`` (the
    recursion subtracts, which costs accuracy at large ``c`` or heavy load)
    a GTH elimination of the same generator takes over when ``fallback`` is
    set.

    Raises
    ------
    BoundaryResidualTooLarge
        When the recursion fails the residual check and ``fallback`` is off.
    """
    c = params.c
    lam, lam1, mu, nu = params.lam, params.lambda1, params.mu, params.nu
    r0, r1 = rows1.r0, rows1.r1
    beta = np.zeros(c + 1)
    beta[c] = 1.0
    beta[c - 1] = (lam + c * nu - mu * r1[c - 1]) / (lam1 + mu * r0[c - 1])
    for i in range(c - 1, 0, -1):
        beta[i - 1] = (
            (lam + i * nu) * beta[i] - (i + 1) * nu * beta[i + 1] - mu * (r0[i - 1] * beta[c - 1] + r1[i - 1])
        ) / lam
    with np.errstate(all="ignore"):
        x = beta / beta.sum()
    R1 = embed_full(rows1)
    A = build_blocks(params, 0).q1 + R1 @ build_blocks(params, 1).q2
    residual = float(np.abs(x @ A).max()) if np.all(np.isfinite(x)) else math.inf
    if residual <= BOUNDARY_TOL and np.all(x >= 0):
        return BoundaryVector(x=x, beta=beta, method="recursion", residual=residual)
    if not fallback:
        raise BoundaryResidualTooLarge(residual)
    x = gth_stationary(A)
    return BoundaryVector(x=x, beta=x / x[c], method="gth", residual=float(np.abs(x @ A).max()))


def gth_stationary(Q: np.ndarray) -> np.ndarray:
    """Stationary vector of a small irreducible generator by GTH elimination.

    Only the off-diagonal entries are used; each pivot is the sum of the
    remaining off-diagonal rates of its row, so no subtraction occurs.
    """
    A = np.array(Q, dtype=float)
    m = A.shape[0]
    np.fill_diagonal(A, 0.0)
    for k in range(m - 1, 0, -1):
        s = A[k, :k].sum()
        if not s > 0:
            raise NumericalBreakdown(f"generator is reducible at state {k}")
        A[:k, :k] += np.outer(A[:k, k], A[k, :k]) / s
        A[:k, k] /= s
    x = np.zeros(m)
    x[0] = 1.0
    for k in range(1, m):
        x[k] = x[:k] @ A[:k, k]
    return x / x.sum()


def _check(status, level):
    if status != _kernels.OK:
        raise NumericalBreakdown(f"level {level}: {_STATUS_TEXT.get(status, status)}")


def _log_top_rows(params, N, k):
    c = params.c
    l0 = np.empty(c + 1)
    l1 = np.empty(c + 1)
    d = np.empty(2)
    status = _kernels.log_compose(c, params.lambda1, params.lambda2, params.mu, params.nu, N, k, l0, l1, d)
    _check(status, N)
    return l0, l1, d


def _swept_rows(params, N, schedule):
    """Rate rows on levels ``1..N`` and their deficits.

    The top rows come from :func:`rate_rows`.  Their deficit is tiny at
    level ``N`` but is multiplied by the rate entries at every level of the
    sweep, which can exceed one by a wide margin at low levels (heavy load,
    slow retrials); the composition depth at the top is doubled until the
    relative deficit is within ``schedule.epsilon`` on every level.
    """
    c = params.c
    args = (c, params.lambda1, params.lambda2, params.mu, params.nu)
    rhs = np.array([params.lambda2, params.lam])
    target = schedule.epsilon * rhs
    top = rate_rows(params, N, schedule)
    k = top.iterations
    r0, r1, d = top.r0, top.r1, top.deficits(params)
    R0 = np.zeros((N + 1, c + 1))
    R1 = np.zeros((N + 1, c + 1))
    D = np.zeros((N + 1, 2))
    k_cap = 2**schedule.max_l
    while True:
        R0[N], R1[N], D[N] = r0, r1, d
        status, lvl = _kernels.sweep(*args, N, R0, R1, D)
        _check(status, lvl)
        worst = D[1:] - target
        if np.all(worst <= 0):
            return R0, R1, D, k
        if 2 * k > k_cap:
            raise NoConvergence(schedule.max_l, float(np.max(D[1:] / np.where(rhs > 0, rhs, 1.0))))
        k *= 2
        deeper = compose_rows(params, N, k)
        r0, r1, d = deeper.r0, deeper.r1, deeper.deficit


def stationary_distribution(
    params: ModelParams,
    eps_rate: float = 1e-13,
    eps_trunc: float = 1e-10,
    N: int | None = None,
    schedule: IterationSchedule | None = None,
    log_space: bool = False,
    boundary_fallback: bool = True,
) -> StationaryDist:
    """Approximate stationary distribution on levels ``0..N``.

    Parameters
    ----------
    params : ModelParams
    eps_rate : float
        Stopping tolerance for the top-level rate rows.
    eps_trunc : float
        Tail mass target used to pick ``N`` when ``N`` is not given.
    N : int, optional
        Truncation level override.
    schedule : IterationSchedule, optional
        Composition depths for the top level (``eps_rate`` replaces its
        tolerance).
    log_space : bool
        Run the sweep and forward pass on logarithms.  Use this when deep
        levels underflow; ``pi`` is still returned in linear scale.
    """
    check_stability(params)
    if N is None:
        N = truncation_point(params, eps_trunc)
    N = int(N)
    if N < 1:
        N = 1
    schedule = schedule or IterationSchedule()
    schedule = IterationSchedule(epsilon=eps_rate, max_l=schedule.max_l, ks=schedule.ks)
    c = params.c
    args = (c, params.lambda1, params.lambda2, params.mu, params.nu)

    R0, R1, D, k = _swept_rows(params, N, schedule)
    rows1 = RateRows(R0[1].copy(), R1[1].copy(), 1, k + N - 1, D[1].copy())
    bnd = boundary_vector(params, rows1, fallback=boundary_fallback)

    if not log_space:
        X = np.empty((N + 1, c + 1))
        _kernels.propagate(bnd.x, R0, R1, X)
        total = X.sum()
        pi = X / total
        return StationaryDist(
            pi=pi,
            N=N,
            epsilon_trunc=eps_trunc,
            normalization=float(total),
            params=params,
            boundary=bnd,
            rates=(R0, R1),
            top_iterations=k,
        )

    LR0 = np.full((N + 1, c + 1), -np.inf)
    LR1 = np.full((N + 1, c + 1), -np.inf)
    LD = np.empty((N + 1, 2))
    LR0[N], LR1[N], LD[N] = _log_top_rows(params, N, k)
    status, lvl = _kernels.log_sweep(*args, N, LR0, LR1, LD)
    _check(status, lvl)
    with np.errstate(divide="ignore"):
        lx0 = np.log(bnd.x)
    LX = np.empty((N + 1, c + 1))
    _kernels.log_propagate(lx0, LR0, LR1, LX)
    m = LX.max()
    log_total = m + math.log(np.exp(LX - m).sum())
    log_pi = LX - log_total
    return StationaryDist(
        pi=np.exp(log_pi),
        N=N,
        epsilon_trunc=eps_trunc,
        normalization=float(math.exp(log_total)),
        params=params,
        log_pi=log_pi,
        boundary=bnd,
        rates=(np.exp(LR0), np.exp(LR1)),
        top_iterations=k,
    )


def distribution_to_csv(dist: StationaryDist, fmt="{:.12g}") -> str:
    """CSV text with columns ``n,phase,probability``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "phase", "probability"])
    for n in range(dist.N + 1):
        for i in range(dist.c + 1):
            w.writerow([n, i, fmt.format(dist.pi[n, i])])
    return buf.getvalue()


def total_variation(p: np.ndarray, q: np.ndarray) -> float:
    """Half the l1 distance between two distributions of equal shape."""
    return 0.5 * float(np.abs(np.asarray(p) - np.asarray(q)).sum())
