"""Large-level expansion of the rate rows in powers of ``1/n``.

Entry ``c - k`` of either row behaves like ``1/n^k`` for large ``n``; the
coefficient table ``theta[s, k, m]`` refines it to

    r_{c-k}^{(s,n)} ~ sum_{i=0}^{m} theta[s, k, i] (-1)^i / n^(k+i)

where ``s = 0`` is row ``c - 1`` and ``s = 1`` is row ``c`` of ``R(n)``.
Coefficients are stored unsigned; :func:`eval_rows` applies ``(-1)^i``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, NumericalBreakdown
from .model import ModelParams, validate
from .rate_matrix import RateRows, inf_norm

VARIANTS = ("theorem", "appendix")


def pochhammer(phi: float, n: int) -> float:
    """Rising factorial ``phi (phi + 1) ... (phi + n - 1)``; 1 for ``n = 0``."""
    out = 1.0
    for j in range(n):
        out *= phi + j
    return out


@dataclass(frozen=True)
class TaylorTable:
    """Coefficients ``theta[s, k, m]`` for ``s in {0, 1}``, ``k = 0..c``, ``m = 0..m_max``."""

    theta: np.ndarray
    m_max: int
    params: ModelParams
    variant: str = "theorem"

    @property
    def c(self) -> int:
        return self.params.c

    def get(self, s: int, k: int, m: int) -> float:
        """Coefficient with the out-of-range convention: zero for ``k`` outside ``0..c`` or ``m < 0``."""
        if k < 0 or k > self.c or m < 0:
            return 0.0
        if m > self.m_max:
            raise IndexError(f"order {m} exceeds table depth {self.m_max}")
        return float(self.theta[s, k, m])


def leading_coeffs(params: ModelParams) -> TaylorTable:
    """First-order coefficients (``m_max = 0``)."""
    validate(params)
    c = params.c
    lam, lam2, mu, nu = params.lam, params.lambda2, params.mu, params.nu
    theta = np.zeros((2, c + 1, 1))
    theta[0, 0, 0] = 0.0
    theta[1, 0, 0] = lam / (c * nu)
    theta[0, 1, 0] = lam2 / mu
    theta[1, 1, 0] = lam / mu
    for k in range(2, c + 1):
        factor = (c - k + 1) * nu / mu
        theta[0, k, 0] = theta[0, k - 1, 0] * factor
        theta[1, k, 0] = theta[1, k - 1, 0] * factor
    return TaylorTable(theta, 0, params)


def build_table(params: ModelParams, m_max: int, variant: str = "theorem") -> TaylorTable:
    """Coefficients up to order ``m_max``.

    For each order ``m`` the ``k = 1`` entries come first (they only need
    lower orders), then ``k = 2..c`` in increasing ``k`` (each needs the
    same-order entry at ``k - 1``), then ``k = 0`` (which needs the same-order
    ``k = 1`` entry of row ``c``).

    ``variant="appendix"`` uses the same-order ``k = 1`` coefficient in the
    leading term of the ``k = 0`` recursion instead of the previous order.
    It is kept to show that only the default reproduces the expected
    remainder order.
    """
    if variant not in VARIANTS:
        raise InvalidParameter("variant", f"must be one of {VARIANTS}, got {variant!r}")
    if m_max < 0:
        raise InvalidParameter("m_max", f"must be >= 0, got {m_max}")
    base = leading_coeffs(params)
    c = params.c
    lam, lam1, mu, nu = params.lam, params.lambda1, params.mu, params.nu
    theta = np.zeros((2, c + 1, m_max + 1))
    theta[:, :, 0] = base.theta[:, :, 0]

    def th(s, k, m):
        if k < 0 or k > c or m < 0:
            return 0.0
        return theta[s, k, m]

    # (k+i)_{j-i} / (j-i)! only depends on k + i and j - i
    weight = {}

    def w(a, d):
        key = (a, d)
        if key not in weight:
            weight[key] = pochhammer(a, d) / math.factorial(d)
        return weight[key]

    def Phi(s, k, j):
        sign = -1.0 if j % 2 else 1.0
        return sign * sum(th(s, k + 1, i) * w(k + i, j - i) for i in range(j + 1))

    def Phi_tilde(j):
        sign = -1.0 if j % 2 else 1.0
        return sign * sum(th(1, 1, i) * w(i, j - i) for i in range(1, j + 1))

    for m in range(1, m_max + 1):
        for s in (0, 1):
            theta[s, 1, m] = sum(th(s, j, m + 1 - j) * (-1.0) ** j for j in range(2, min(c, m + 1) + 1))
        for k in range(2, c + 1):
            # Phi depends on s only through its own superscript, not the row being built
            phi0 = [Phi(0, k, j) for j in range(m - 1)]
            phi1 = [Phi(1, k, j) for j in range(m)]
            for s in (0, 1):
                val = (
                    (c - k + 1) * nu / mu * th(s, k - 1, m)
                    + lam / mu * th(s, k + 1, m - 2)
                    + (lam + (c - k) * nu) / mu * th(s, k, m - 1)
                )
                val += sum(phi0[j] * th(s, 1, m - j - 2) * (-1.0) ** j for j in range(m - 1))
                val += sum(phi1[j] * th(s, 0, m - j - 1) * (-1.0) ** (j + 1) for j in range(m))
                theta[s, k, m] = val
        phi00 = [Phi(0, 0, j) for j in range(m)]
        phit = [0.0] + [Phi_tilde(j) for j in range(1, m + 1)]
        lead = m - 1 if variant == "theorem" else m
        for s in (0, 1):
            val = -lam1 * th(s, 1, lead)
            val += mu * sum(phi00[j] * th(s, 1, m - j - 1) * (-1.0) ** (j + 1) for j in range(m))
            val += mu * sum(phit[j] * th(s, 0, m - j) * (-1.0) ** j for j in range(1, m + 1))
            theta[s, 0, m] = val / (c * nu)
    if not np.all(np.isfinite(theta)):
        raise NumericalBreakdown("Taylor coefficients overflowed binary64")
    return TaylorTable(theta, m_max, params, variant)


def eval_rows(table: TaylorTable, n: int, m: int) -> RateRows:
    """Approximate rows of ``R(n)`` from the orders ``0..m`` of ``table``.

    Each term is formed as ``exp(log|theta| - (k + i) log n)`` so that large
    coefficients at large ``k`` do not overflow before the power of ``n``
    brings them back into range.
    """
    if m > table.m_max or m < 0:
        raise InvalidParameter("m", f"must be in 0..{table.m_max}, got {m}")
    if n < 1:
        raise InvalidParameter("n", f"level must be >= 1, got {n}")
    c = table.c
    logn = math.log(n)
    rows = np.zeros((2, c + 1))
    for s in (0, 1):
        for k in range(c + 1):
            acc = 0.0
            for i in range(m + 1):
                t = table.theta[s, k, i]
                if t == 0.0:
                    continue
                term = math.exp(math.log(abs(t)) - (k + i) * logn)
                acc += math.copysign(term, t) * (-1.0 if i % 2 else 1.0)
            rows[s, c - k] = acc
    return RateRows(rows[0], rows[1], n)


def relative_error(approx: RateRows, exact: RateRows) -> float:
    """``||approx - exact|| / ||exact||`` in the max-row-sum norm of the stacked rows."""
    a = approx.stacked()
    e = exact.stacked()
    if a.shape != e.shape:
        raise InvalidParameter("approx", f"shape {a.shape} does not match {e.shape}")
    return inf_norm(a - e) / inf_norm(e)
