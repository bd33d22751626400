"""Flat ``key=value`` run configuration and parameter resolution."""

from __future__ import annotations

import configparser
import math

from .errors import InvalidParameter
from .model import ModelParams, validate

RATE_KEYS = ("lambda1", "lambda2")
LOAD_KEYS = ("rho", "ratio21")
FLOAT_KEYS = ("lambda1", "lambda2", "mu", "nu", "rho", "ratio21", "eps_rate", "eps_trunc")
INT_KEYS = ("c", "n_max", "m_max")


def load_config(path) -> dict:
    """Read a flat ``key=value`` file (``#`` comments allowed) into typed values.

    Dashes in keys are folded to underscores, so ``eps-rate`` and
    ``eps_rate`` are the same key.
    """
    parser = configparser.ConfigParser(delimiters=("=",), comment_prefixes=("#", ";"))
    with open(path, encoding="utf-8") as fh:
        parser.read_string("[run]\n" + fh.read(), source=str(path))
    out = {}
    for key, raw in parser["run"].items():
        key = key.strip().replace("-", "_")
        out[key] = _coerce(key, raw.strip())
    return out


def _coerce(key, raw):
    try:
        if key in INT_KEYS:
            value = float(raw)
            if not value.is_integer():
                raise ValueError
            return int(value)
        if key in FLOAT_KEYS:
            return float(raw)
    except ValueError:
        raise InvalidParameter(key, f"cannot parse {raw!r}") from None
    return raw


def resolve_params(values: dict) -> ModelParams:
    """Turn a mapping of raw settings into validated :class:`ModelParams`.

    Exactly one parameterization must be used: explicit ``lambda1`` and
    ``lambda2``, or a load ``rho`` with the ratio ``ratio21 = lambda2/lambda1``.
    """
    given = {k for k, v in values.items() if v is not None}
    rates = given & set(RATE_KEYS)
    loads = given & set(LOAD_KEYS)
    if rates and loads:
        raise InvalidParameter("rho", "give either lambda1/lambda2 or rho/ratio21, not both")
    for key in ("c", "mu", "nu"):
        if key not in given:
            raise InvalidParameter(key, "missing")
    c, mu, nu = values["c"], values["mu"], values["nu"]
    if loads:
        for key in LOAD_KEYS:
            if key not in given:
                raise InvalidParameter(key, "missing (needed with the rho parameterization)")
        if not (isinstance(nu, (int, float)) and math.isfinite(nu) and nu > 0):
            raise InvalidParameter("nu", f"must be > 0, got {nu!r}")
        params = ModelParams.from_rho(c, values["rho"], values["ratio21"], mu, nu)
    else:
        for key in RATE_KEYS:
            if key not in given:
                raise InvalidParameter(key, "missing")
        params = ModelParams(c, values["lambda1"], values["lambda2"], mu, nu)
    return validate(params)
