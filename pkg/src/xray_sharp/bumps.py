"""Smooth cutoff functions shared by every module.

All functions are vectorized over numpy arrays and return float arrays.

``beta0`` equals 1 on ``|x| <= 1/2`` and vanishes for ``|x| >= 1``;
``beta(x) = beta0(x/2) - beta0(x)`` is supported in ``[1/2, 2]`` and its
dyadic dilates telescope::

    sum_{k=0}^{K} beta(2**-k r) = beta0(2**-(K+1) r) - beta0(r).
"""

from __future__ import annotations

import numpy as np


def _h(x):
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    pos = x > 0
    out[pos] = np.exp(-1.0 / x[pos])
    return out


def smoothstep(u):
    """C-infinity step: 1 for ``u <= 0``, 0 for ``u >= 1``.

    Satisfies ``smoothstep(u) + smoothstep(1 - u) = 1``.
    """
    u = np.asarray(u, dtype=float)
    a = _h(1.0 - u)
    b = _h(u)
    return a / (a + b)


def beta0(x):
    """Radial plateau bump: 1 on ``|x| <= 1/2``, 0 for ``|x| >= 1``."""
    return smoothstep(2.0 * np.abs(np.asarray(x, dtype=float)) - 1.0)


def beta(x):
    """Dyadic annulus bump supported in ``[1/2, 2]``."""
    x = np.asarray(x, dtype=float)
    return beta0(x / 2.0) - beta0(x)


def beta_N(x, N: int):
    """Difference ``beta0(x) - beta0(2**(2 N!) x)`` used by the scale splitting."""
    from math import factorial

    x = np.asarray(x, dtype=float)
    return beta0(x) - beta0(np.ldexp(x, 2 * factorial(N)))


def beta0_of_log(logx):
    """``beta0(exp(logx))`` evaluated without overflow for huge ``logx``."""
    logx = np.asarray(logx, dtype=float)
    with np.errstate(over="ignore"):
        x = np.exp(np.minimum(logx, 50.0))
    return beta0(x)


def compact_bump(x):
    """``exp(1 - 1/(1 - x^2))`` on ``|x| < 1`` and 0 elsewhere; peak value 1."""
    x = np.asarray(x, dtype=float)
    out = np.zeros_like(x)
    inside = np.abs(x) < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - x[inside] ** 2))
    return out


def zeta(x):
    """Smooth partition of unity on the line: ``sum_nu zeta(x - nu) = 1``.

    ``zeta`` is supported in ``[-1, 1]``; it is ``beta0`` divided by the
    periodization of ``beta0`` (which is at least 1 everywhere).
    """
    x = np.asarray(x, dtype=float)
    frac = x - np.floor(x)
    # periodization sum_nu beta0(frac - nu) only sees nu in {-1, 0, 1, 2}
    per = beta0(frac + 1.0) + beta0(frac) + beta0(frac - 1.0) + beta0(frac - 2.0)
    return beta0(x) / per
