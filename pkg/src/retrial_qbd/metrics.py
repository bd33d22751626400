"""Blocking probabilities, mean busy channels and tail diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import ModelParams, validate
from .stationary import StationaryDist


@dataclass(frozen=True)
class PerformanceReport:
    blocking_low: float
    blocking_high: float
    mean_busy: float
    little_error: float
    tail_exponent: float

    def as_dict(self) -> dict:
        return {
            "blocking_low": self.blocking_low,
            "blocking_high": self.blocking_high,
            "mean_busy": self.mean_busy,
            "little_error": self.little_error,
            "tail_exponent": self.tail_exponent,
        }


def blocking(dist: StationaryDist):
    """Blocking probabilities ``(low, high)``.

    Fresh calls are blocked with ``c - 1`` or ``c`` busy channels (``low``);
    handover calls and retrials only with all ``c`` busy (``high``).
    """
    c = dist.c
    high = float(dist.pi[:, c].sum())
    low = float(dist.pi[:, c - 1].sum()) + high
    return low, high


def mean_busy_and_little(dist: StationaryDist, params: ModelParams):
    """Mean number of busy channels and its distance from ``lam / nu``."""
    phases = np.arange(dist.c + 1)
    mean = float(dist.pi.sum(axis=0) @ phases)
    return mean, abs(params.lam / params.nu - mean)


def tail_exponent(params: ModelParams) -> float:
    """Polynomial exponent ``a = (c^2 nu + lam) / (c mu)`` of the tail bound."""
    validate(params)
    c = params.c
    return (c * c * params.nu + params.lam) / (c * params.mu)


def report(dist: StationaryDist, params: ModelParams) -> PerformanceReport:
    low, high = blocking(dist)
    mean, err = mean_busy_and_little(dist, params)
    return PerformanceReport(low, high, mean, err, tail_exponent(params))


@dataclass(frozen=True)
class TailSeries:
    """Tail diagnostics on levels ``n = 0..N``.

    ``log_ratio[n, j]`` is ``log(pi[n, phases[j]] / rho^n)`` and
    ``log_bound_ratio[n]`` is ``log(||(pi[n, c-1], pi[n, c])||_1 / (n^a rho^n))``
    (undefined at ``n = 0``, stored as nan).
    """

    levels: np.ndarray
    phases: tuple
    log_ratio: np.ndarray
    log_bound_ratio: np.ndarray
    a: float

    @property
    def ratio(self) -> np.ndarray:
        return np.exp(self.log_ratio)

    @property
    def bound_ratio(self) -> np.ndarray:
        return np.exp(self.log_bound_ratio)

    def slope(self, j: int, lo: int, hi: int) -> float:
        """Least-squares slope of ``log ratio`` against ``log n`` over ``lo <= n <= hi``."""
        sel = (self.levels >= max(lo, 1)) & (self.levels <= hi)
        x = np.log(self.levels[sel])
        y = self.log_ratio[sel, j]
        return float(np.polyfit(x, y, 1)[0])


def tail_diagnostics(dist: StationaryDist, params: ModelParams, phases=None) -> TailSeries:
    """Level-scaled probabilities for the asymptotic checks, in log space."""
    c = dist.c
    if phases is None:
        phases = tuple(range(c + 1))
    phases = tuple(int(i) for i in phases)
    lp = dist.log_prob()
    levels = np.arange(dist.N + 1)
    log_rho = math.log(params.rho)
    log_ratio = lp[:, list(phases)] - (levels * log_rho)[:, None]
    a = tail_exponent(params)
    tail = np.logaddexp(lp[:, c - 1], lp[:, c])
    with np.errstate(divide="ignore"):
        log_n = np.log(levels.astype(float))
    log_bound = tail - a * log_n - levels * log_rho
    log_bound[0] = np.nan
    return TailSeries(levels, phases, log_ratio, log_bound, a)
