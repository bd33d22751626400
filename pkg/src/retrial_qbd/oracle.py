"""Brute-force reference solvers used to cross-check the fast path.

Nothing here exploits the two-nonzero-row structure of the rate matrices:
every step is a full linear solve on ``(c + 1)``-dimensional blocks, or on the
whole truncated generator.  They are slow on purpose and meant for tests and
``--verify`` runs.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import SingularSystem, SizeBudgetExceeded
from .model import ModelParams, build_blocks, validate

#: largest number of states the truncated generator solve accepts
STATE_BUDGET = 20000
#: singular-value gap that separates a null direction from the rest
NULL_GAP = 1e-9


def _solve_right(X, U):
    # X @ inv(U) computed as solve(U.T, X.T).T, partial pivoting via LAPACK
    try:
        out = np.linalg.solve(U.T, X.T).T
    except np.linalg.LinAlgError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(out)):
        raise SingularSystem("non-finite entries in dense solve")
    return out


def dense_rate_matrix(params: ModelParams, n: int, k: int, diagonal: str = "exit") -> np.ndarray:
    """``k``-step approximation of the level-``n`` rate matrix.

    Composes ``X -> -Q0 (Q1(m) + X Q2(m + 1))^{-1}`` for ``m = n + k - 1``
    down to ``n``, starting from the zero matrix.  As ``k`` grows the result
    increases monotonically to the minimal nonnegative solution.

    ``U = Q1(m) + X Q2(m + 1)`` has nonnegative off-diagonal entries and
    row sums ``-(Q2(m) e + d)``, where ``d = Q0 e - X Q2 e`` is the upward
    flow that ``X`` fails to return (``d = Q0 e`` for ``X = 0``, then
    ``d <- X d`` per level).  With ``diagonal="exit"`` (default) the diagonal
    of ``U`` is set from those row sums instead of being added up directly;
    the direct sum cancels badly once ``X`` grows large (heavy load, slow
    retrials) and ``diagonal="direct"`` keeps that form for comparison.
    Either way each level is a full partial-pivoted dense solve.
    """
    validate(params)
    if n < 1 or k < 1:
        raise ValueError("need n >= 1 and k >= 1")
    if diagonal not in ("exit", "direct"):
        raise ValueError(f"diagonal must be 'exit' or 'direct', got {diagonal!r}")
    size = params.c + 1
    X = np.zeros((size, size))
    d = build_blocks(params, n + k).q0.sum(axis=1)
    for m in range(n + k - 1, n - 1, -1):
        lo = build_blocks(params, m)
        hi = build_blocks(params, m + 1)
        U = lo.q1 + X @ hi.q2
        if diagonal == "exit":
            off = U - np.diag(np.diag(U))
            U = off - np.diag(off.sum(axis=1) + lo.q2.sum(axis=1) + d)
        X = -_solve_right(lo.q0, U)
        d = X @ d
    return X


def boundary_solve(params: ModelParams, R1: np.ndarray):
    """Null vector of ``Q1(0) + R1 Q2(1)``, scaled to sum one.

    Takes the right singular vector of ``A.T`` for the smallest singular
    value.  The rows of ``R1`` can be large under heavy load, so the
    smallest singular value is judged against the second smallest rather
    than against a fixed fraction of the largest.

    Raises
    ------
    SingularSystem
        If the null space is not one-dimensional.
    """
    from .stationary import BoundaryVector

    validate(params)
    A = build_blocks(params, 0).q1 + R1 @ build_blocks(params, 1).q2
    _, sv, vh = scipy.linalg.svd(A.T)
    if sv[-2] <= NULL_GAP * sv[0]:
        raise SingularSystem("boundary null space has dimension > 1")
    if sv[-1] > NULL_GAP * sv[-2]:
        raise SingularSystem("boundary system has no null vector")
    x = vh[-1]
    x = x / x.sum()
    return BoundaryVector(x=x, beta=x / x[-1], method="null_space")


def truncated_generator(params: ModelParams, N: int) -> scipy.sparse.csr_matrix:
    """Generator on levels ``0..N`` with the upward flow out of ``N`` folded back.

    The last diagonal block absorbs ``diag(Q0 e)`` so every row sums to zero.
    """
    validate(params)
    size = params.c + 1
    rows = []
    for n in range(N + 1):
        blocks = build_blocks(params, n)
        row = [None] * (N + 1)
        q1 = blocks.q1
        if n == N:
            q1 = q1 + np.diag(blocks.q0.sum(axis=1))
        else:
            row[n + 1] = scipy.sparse.csr_matrix(blocks.q0)
        row[n] = scipy.sparse.csr_matrix(q1)
        if n > 0:
            row[n - 1] = scipy.sparse.csr_matrix(blocks.q2)
        rows.append(row)
    if N == 0:
        return scipy.sparse.csr_matrix(rows[0][0])
    Q = scipy.sparse.bmat(rows, format="csr")
    assert Q.shape == ((N + 1) * size, (N + 1) * size)
    return Q


def truncated_generator_solve(params: ModelParams, N: int):
    """Stationary vector of :func:`truncated_generator` by a direct solve.

    One balance equation is replaced by the normalization ``pi e = 1`` and the
    system is factorized with sparse LU (partial pivoting).

    Raises
    ------
    SizeBudgetExceeded
        When ``(N + 1)(c + 1)`` exceeds :data:`STATE_BUDGET`.
    """
    from .stationary import StationaryDist

    validate(params)
    size = params.c + 1
    total = (N + 1) * size
    if total > STATE_BUDGET:
        raise SizeBudgetExceeded(f"{total} states exceed the oracle budget {STATE_BUDGET}")
    A = truncated_generator(params, N).T.tolil()
    A[-1, :] = np.ones(total)
    b = np.zeros(total)
    b[-1] = 1.0
    try:
        pi = scipy.sparse.linalg.spsolve(A.tocsc(), b)
    except RuntimeError as exc:
        raise SingularSystem(str(exc)) from exc
    if not np.all(np.isfinite(pi)):
        raise SingularSystem("truncated generator solve produced non-finite values")
    pi = np.clip(pi, 0.0, None)
    pi = pi / pi.sum()
    return StationaryDist(
        pi=pi.reshape(N + 1, size),
        N=N,
        epsilon_trunc=float("nan"),
        normalization=1.0,
        params=params,
    )
