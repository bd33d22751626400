"""Model parameters and the level-dependent generator blocks.

State ``(i, n)``: ``i`` busy channels (phase, ``0..c``) and ``n`` calls in
the retrial orbit (level).  One channel is reserved: fresh calls are blocked
as soon as ``c - 1`` channels are busy, handover calls and retrials only when
all ``c`` are busy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidParameter, Unstable


@dataclass(frozen=True)
class ModelParams:
    """Rates and server count of the guard-channel retrial queue.

    Attributes
    ----------
    c : int
        Number of channels (servers), including the guard channel.
    lambda1 : float
        Arrival rate of handover (high priority) calls.
    lambda2 : float
        Arrival rate of fresh (low priority) calls.
    mu : float
        Retrial rate per call in orbit.
    nu : float
        Service rate per busy channel.
    """

    c: int
    lambda1: float
    lambda2: float
    mu: float
    nu: float

    @property
    def lam(self) -> float:
        """Total arrival rate."""
        return self.lambda1 + self.lambda2

    @property
    def rho(self) -> float:
        """Offered load per channel, ``lam / (c * nu)``."""
        return self.lam / (self.c * self.nu)

    @classmethod
    def from_rho(cls, c, rho, ratio21, mu, nu) -> "ModelParams":
        """Build parameters from a load and the fresh-to-handover ratio.

        ``lam = rho * c * nu`` is split as ``lambda1 = lam / (1 + ratio21)``
        and ``lambda2 = lam - lambda1``.
        """
        if not (isinstance(ratio21, (int, float)) and math.isfinite(ratio21) and ratio21 >= 0):
            raise InvalidParameter("ratio21", f"must be a finite number >= 0, got {ratio21!r}")
        if not (isinstance(rho, (int, float)) and math.isfinite(rho) and rho > 0):
            raise InvalidParameter("rho", f"must be a finite number > 0, got {rho!r}")
        lam = rho * c * nu
        lambda1 = lam / (1.0 + ratio21)
        return cls(c=c, lambda1=lambda1, lambda2=lam - lambda1, mu=mu, nu=nu)

    def as_dict(self) -> dict:
        return {
            "c": self.c,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "mu": self.mu,
            "nu": self.nu,
        }


def _finite_number(name, value):
    if isinstance(value, bool) or not isinstance(value, (int, float, np.floating, np.integer)):
        raise InvalidParameter(name, f"must be a number, got {value!r}")
    if not math.isfinite(value):
        raise InvalidParameter(name, f"must be finite, got {value!r}")


def validate(params: ModelParams) -> ModelParams:
    """Return ``params`` unchanged if every field is admissible.

    Raises
    ------
    InvalidParameter
        Naming the first offending field.
    """
    c = params.c
    if isinstance(c, bool) or not isinstance(c, (int, np.integer)):
        raise InvalidParameter("c", f"must be an integer, got {c!r}")
    if c < 2:
        raise InvalidParameter("c", f"at least two channels are required, got {c}")
    for name in ("lambda1", "lambda2", "mu", "nu"):
        _finite_number(name, getattr(params, name))
    if params.lambda1 <= 0:
        raise InvalidParameter("lambda1", f"must be > 0, got {params.lambda1!r}")
    if params.lambda2 < 0:
        raise InvalidParameter("lambda2", f"must be >= 0, got {params.lambda2!r}")
    if params.mu <= 0:
        raise InvalidParameter("mu", f"must be > 0, got {params.mu!r}")
    if params.nu <= 0:
        raise InvalidParameter("nu", f"must be > 0, got {params.nu!r}")
    return params


def check_stability(params: ModelParams) -> float:
    """Return the traffic intensity, raising :class:`Unstable` unless it is < 1."""
    validate(params)
    rho = params.rho
    if rho >= 1.0:
        raise Unstable(rho)
    return rho


@dataclass(frozen=True)
class QbdBlocks:
    """Generator blocks at one level.

    ``q0`` moves the orbit up one level, ``q1`` stays within the level and
    ``q2`` moves it down one level.  All are ``(c + 1) x (c + 1)``.
    """

    q0: np.ndarray
    q1: np.ndarray
    q2: np.ndarray
    level: int


def build_blocks(params: ModelParams, n: int) -> QbdBlocks:
    """Dense generator blocks ``(Q0, Q1, Q2)`` at orbit level ``n``."""
    validate(params)
    if n < 0:
        raise InvalidParameter("n", f"level must be >= 0, got {n}")
    c = int(params.c)
    lam, lam1, lam2 = params.lam, params.lambda1, params.lambda2
    mu, nu = params.mu, params.nu
    size = c + 1

    q0 = np.zeros((size, size))
    q0[c - 1, c - 1] = lam2
    q0[c, c] = lam

    q2 = np.zeros((size, size))
    idx = np.arange(c)
    q2[idx, idx + 1] = n * mu

    q1 = np.zeros((size, size))
    phases = np.arange(size)
    diag = -(lam + phases * nu + n * mu)
    diag[c] = -(lam + c * nu)
    q1[phases, phases] = diag
    q1[idx, idx + 1] = lam
    q1[c - 1, c] = lam1
    q1[idx + 1, idx] = (idx + 1) * nu
    return QbdBlocks(q0=q0, q1=q1, q2=q2, level=n)
