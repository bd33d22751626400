"""Hot loops over the two nonzero rows of the level rate matrices.

Every function here is decorated with :func:`retrial_qbd._accel.kernel`, so it
is either numba-compiled or plain Python depending on the environment.  Rows
are stored as two float64 vectors of length ``c + 1``: ``r0`` (row ``c - 1``
of the rate matrix) and ``r1`` (row ``c``).

Status codes returned by the kernels::

    0  ok
    1  a censored exit rate lost its positive level-leaving part
    2  an anchor entry came out below -NEG_TOL (only possible with negative deficits)
    3  the 2x2 anchor system was singular or produced non-finite values
"""

import math

import numpy as np

from ._accel import kernel

OK = 0
PIVOT_BREAKDOWN = 1
NEGATIVE_ENTRY = 2
SINGULAR_ANCHOR = 3

# anchors this far below zero count as rounding and are clamped
NEG_TOL = 1e-14


@kernel
def rate_step(c, lam1, lam2, mu, nu, n, nxt0, nxt1, dnxt, out0, out1, dout, B, E, F):
    """One application of the level-``n`` map to the rows of level ``n + 1``.

    Solves ``r U = -Q0`` restricted to the two nonzero rows, where
    ``U = Q1(n) + X Q2(n + 1)`` and ``X`` holds ``nxt0, nxt1``.  The solve is
    phrased as censoring of the phase process at level ``n``: phases
    ``0..c-2`` are eliminated upward, leaving a 2x2 generator on phases
    ``c-1, c``.  Every quantity is a sum or product of nonnegative terms,
    and diagonal entries are formed as total exit rates, so there is no
    cancellation even where the rows grow geometrically with falling ``n``.

    ``dnxt`` holds the deficits ``rhs_s - (n+1) mu sum_{i<c} nxt_s[i]`` of the
    input rows (``rhs = (lambda2, lam)``), i.e. the arrival flow that the
    truncated upper levels fail to return.  The deficits of the output rows
    are written to ``dout``; they obey ``d_s(n) = u_s d_0(n+1) + v_s d_1(n+1)``
    with ``u_s, v_s`` the anchor entries.

    ``B[i]`` is the exit rate of phase ``i`` once phases below it are
    censored, ``C`` the part of it that leaves the level, and ``E[i], F[i]``
    the flows from phases ``c-1, c`` that arrive at ``i``.
    """
    lam = lam1 + lam2
    g = (n + 1) * mu
    nmu = n * mu

    C = nmu
    B[0] = lam + C
    E[0] = 0.0
    F[0] = 0.0
    lostE = 0.0
    lostF = 0.0
    for i in range(1, c - 1):
        C = nmu + i * nu * C / B[i - 1]
        if not C > 0.0:
            return PIVOT_BREAKDOWN
        w = lam / B[i - 1]
        B[i] = lam + C
        E[i] = g * nxt0[i - 1] + w * E[i - 1]
        F[i] = g * nxt1[i - 1] + w * F[i - 1]
        lostE += E[i] * C / B[i]
        lostF += F[i] * C / B[i]

    j = c - 2
    s01 = lam1 + g * nxt0[c - 1]
    s10 = c * nu + g * nxt1[c - 2] + lam * F[j] / B[j]
    out_lo = nmu + dnxt[0] + (c - 1) * nu * C / B[j] + lostE
    out_hi = dnxt[1] + lostF
    det = out_lo * out_hi + out_lo * s10 + s01 * out_hi
    if not (det > 0.0 and math.isfinite(det)):
        return SINGULAR_ANCHOR

    # x A = q with A = [[out_lo + s01, -s01], [-s10, out_hi + s10]]
    u0 = lam2 * (out_hi + s10) / det
    v0 = lam2 * s01 / det
    u1 = lam * s10 / det
    v1 = lam * (out_lo + s01) / det
    if min(min(u0, v0), min(u1, v1)) < -NEG_TOL:
        return NEGATIVE_ENTRY
    u0 = max(u0, 0.0)
    v0 = max(v0, 0.0)
    u1 = max(u1, 0.0)
    v1 = max(v1, 0.0)
    if not (math.isfinite(u0) and math.isfinite(v0) and math.isfinite(u1) and math.isfinite(v1)):
        return SINGULAR_ANCHOR

    out0[c] = v0
    out0[c - 1] = u0
    out1[c] = v1
    out1[c - 1] = u1
    for i in range(c - 2, -1, -1):
        out0[i] = ((i + 1) * nu * out0[i + 1] + E[i] * u0 + F[i] * v0) / B[i]
        out1[i] = ((i + 1) * nu * out1[i + 1] + E[i] * u1 + F[i] * v1) / B[i]
    d0 = u0 * dnxt[0] + v0 * dnxt[1]
    d1 = u1 * dnxt[0] + v1 * dnxt[1]
    dout[0] = d0
    dout[1] = d1
    return OK


@kernel
def row_deficits(c, lam1, lam2, mu, n, r0, r1, dout):
    """Deficits of arbitrary level-``n`` rows, by direct subtraction."""
    s0 = 0.0
    s1 = 0.0
    for i in range(c):
        s0 += r0[i]
        s1 += r1[i]
    dout[0] = lam2 - n * mu * s0
    dout[1] = lam1 + lam2 - n * mu * s1


@kernel
def compose(c, lam1, lam2, mu, nu, n, k, out0, out1, dout):
    """Rows of the ``k``-fold composition started from zero rows at level ``n + k``.

    The zero rows return nothing, so their deficits are the full arrival
    rates ``(lambda2, lam)``.
    """
    size = c + 1
    a0 = np.zeros(size)
    a1 = np.zeros(size)
    b0 = np.empty(size)
    b1 = np.empty(size)
    da = np.array([lam2, lam1 + lam2])
    db = np.empty(2)
    B = np.empty(max(c - 1, 1))
    E = np.empty(max(c - 1, 1))
    F = np.empty(max(c - 1, 1))
    for m in range(n + k - 1, n - 1, -1):
        status = rate_step(c, lam1, lam2, mu, nu, m, a0, a1, da, b0, b1, db, B, E, F)
        if status != OK:
            return status
        a0, b0 = b0, a0
        a1, b1 = b1, a1
        da, db = db, da
    out0[:] = a0
    out1[:] = a1
    dout[:] = da
    return OK


@kernel
def sweep(c, lam1, lam2, mu, nu, top, R0, R1, D):
    """Fill levels ``top - 1 .. 1`` of ``R0, R1`` from the rows stored at ``top``.

    ``D[top]`` must hold the deficits of the top rows; the deficits of every
    lower level are written to ``D``.  Returns ``(status, level)``; ``level``
    is where a failure happened.
    """
    B = np.empty(max(c - 1, 1))
    E = np.empty(max(c - 1, 1))
    F = np.empty(max(c - 1, 1))
    for m in range(top - 1, 0, -1):
        status = rate_step(c, lam1, lam2, mu, nu, m, R0[m + 1], R1[m + 1], D[m + 1], R0[m], R1[m], D[m], B, E, F)
        if status != OK:
            return status, m
    return OK, 0


@kernel
def propagate(x0, R0, R1, X):
    """``X[n] = X[n-1, c-1] * R0[n] + X[n-1, c] * R1[n]`` for ``n >= 1``."""
    c = x0.shape[0] - 1
    X[0, :] = x0
    for n in range(1, X.shape[0]):
        s0 = X[n - 1, c - 1]
        s1 = X[n - 1, c]
        for i in range(c + 1):
            X[n, i] = s0 * R0[n, i] + s1 * R1[n, i]


@kernel
def _lae(a, b):
    # log(exp(a) + exp(b)) with -inf as the log of zero
    if a == -np.inf:
        return b
    if b == -np.inf:
        return a
    if a > b:
        return a + math.log1p(math.exp(b - a))
    return b + math.log1p(math.exp(a - b))


@kernel
def _safe_log(x):
    if x > 0.0:
        return math.log(x)
    return -np.inf


@kernel
def log_rate_step(c, lam1, lam2, mu, nu, n, lnxt0, lnxt1, dnxt, lout0, lout1, dout, B, LE, LF):
    """:func:`rate_step` with rows held as natural logarithms.

    Every term of the elimination and of the fill is nonnegative, so the
    recursion carries over to log-sum-exp form unchanged.  Entries far
    below the float64 range (the low phases at deep levels) stay finite.
    The 2x2 generator is formed in linear scale: its entries are bounded
    below by ``c nu`` or ``n mu``, so underflowing flows do not matter there.
    Deficits stay linear.
    """
    lam = lam1 + lam2
    g = (n + 1) * mu
    nmu = n * mu
    lg = math.log(g)

    C = nmu
    B[0] = lam + C
    LE[0] = -np.inf
    LF[0] = -np.inf
    lostE = 0.0
    lostF = 0.0
    for i in range(1, c - 1):
        C = nmu + i * nu * C / B[i - 1]
        if not C > 0.0:
            return PIVOT_BREAKDOWN
        lw = math.log(lam / B[i - 1])
        B[i] = lam + C
        LE[i] = _lae(lg + lnxt0[i - 1], lw + LE[i - 1])
        LF[i] = _lae(lg + lnxt1[i - 1], lw + LF[i - 1])
        lostE += math.exp(LE[i]) * C / B[i]
        lostF += math.exp(LF[i]) * C / B[i]

    j = c - 2
    s01 = lam1 + g * math.exp(lnxt0[c - 1])
    s10 = c * nu + g * math.exp(lnxt1[c - 2]) + lam * math.exp(LF[j]) / B[j]
    out_lo = nmu + dnxt[0] + (c - 1) * nu * C / B[j] + lostE
    out_hi = dnxt[1] + lostF
    det = out_lo * out_hi + out_lo * s10 + s01 * out_hi
    if not (det > 0.0 and math.isfinite(det)):
        return SINGULAR_ANCHOR
    u0 = lam2 * (out_hi + s10) / det
    v0 = lam2 * s01 / det
    u1 = lam * s10 / det
    v1 = lam * (out_lo + s01) / det
    if min(min(u0, v0), min(u1, v1)) < -NEG_TOL:
        return NEGATIVE_ENTRY

    lu0 = _safe_log(u0)
    lv0 = _safe_log(v0)
    lu1 = _safe_log(u1)
    lv1 = _safe_log(v1)
    lout0[c] = lv0
    lout0[c - 1] = lu0
    lout1[c] = lv1
    lout1[c - 1] = lu1
    for i in range(c - 2, -1, -1):
        lb = math.log(B[i])
        lnu = math.log((i + 1) * nu)
        lout0[i] = _lae(lnu + lout0[i + 1], _lae(LE[i] + lu0, LF[i] + lv0)) - lb
        lout1[i] = _lae(lnu + lout1[i + 1], _lae(LE[i] + lu1, LF[i] + lv1)) - lb
    d0 = u0 * dnxt[0] + v0 * dnxt[1]
    d1 = u1 * dnxt[0] + v1 * dnxt[1]
    dout[0] = d0
    dout[1] = d1
    return OK


@kernel
def log_compose(c, lam1, lam2, mu, nu, n, k, lout0, lout1, dout):
    size = c + 1
    a0 = np.full(size, -np.inf)
    a1 = np.full(size, -np.inf)
    b0 = np.empty(size)
    b1 = np.empty(size)
    da = np.array([lam2, lam1 + lam2])
    db = np.empty(2)
    B = np.empty(max(c - 1, 1))
    LE = np.empty(max(c - 1, 1))
    LF = np.empty(max(c - 1, 1))
    for m in range(n + k - 1, n - 1, -1):
        status = log_rate_step(c, lam1, lam2, mu, nu, m, a0, a1, da, b0, b1, db, B, LE, LF)
        if status != OK:
            return status
        a0, b0 = b0, a0
        a1, b1 = b1, a1
        da, db = db, da
    lout0[:] = a0
    lout1[:] = a1
    dout[:] = da
    return OK


@kernel
def log_sweep(c, lam1, lam2, mu, nu, top, LR0, LR1, D):
    B = np.empty(max(c - 1, 1))
    LE = np.empty(max(c - 1, 1))
    LF = np.empty(max(c - 1, 1))
    for m in range(top - 1, 0, -1):
        status = log_rate_step(
            c, lam1, lam2, mu, nu, m, LR0[m + 1], LR1[m + 1], D[m + 1], LR0[m], LR1[m], D[m], B, LE, LF
        )
        if status != OK:
            return status, m
    return OK, 0


@kernel
def log_propagate(lx0, LR0, LR1, LX):
    c = lx0.shape[0] - 1
    LX[0, :] = lx0
    for n in range(1, LX.shape[0]):
        s0 = LX[n - 1, c - 1]
        s1 = LX[n - 1, c]
        for i in range(c + 1):
            LX[n, i] = _lae(s0 + LR0[n, i], s1 + LR1[n, i])


@kernel
def truncation_level(rho, phi, eps, cap):
    """Smallest ``N`` whose single-server surrogate mass exceeds ``1 - eps``.

    The surrogate orbit law has terms ``p0[n] = rho^n/n! (1-rho)^(phi+1) (phi)_n``
    and ``p1[n] = rho^(n+1)/n! (1-rho)^(phi+1) (1+phi)_n``; both are advanced by
    their term ratios in log space.  Returns -1 when ``cap`` is reached first.
    """
    lp0 = (phi + 1.0) * math.log1p(-rho)
    lp1 = lp0 + math.log(rho)
    lrho = math.log(rho)
    total = 0.0
    comp = 0.0
    target = 1.0 - eps
    for n in range(cap + 1):
        term = math.exp(lp0) + math.exp(lp1)
        # Kahan summation keeps the running mass accurate to ~1e-16
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
        if total > target:
            return n
        if phi + n > 0.0:
            lp0 += lrho + math.log(phi + n) - math.log(n + 1.0)
        else:
            lp0 = -np.inf
        lp1 += lrho + math.log(1.0 + phi + n) - math.log(n + 1.0)
    return -1
