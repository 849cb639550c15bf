"""Least-squares slope fits on a log2 scale."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InvalidArgument


@dataclass(frozen=True)
class DecayFit:
    slope: float
    intercept: float
    r2: float

    def as_dict(self) -> dict:
        return asdict(self)


def fit_decay(points) -> DecayFit:
    """Fit ``log2 y = slope * x + intercept`` by least squares.

    Parameters
    ----------
    points : sequence of (x, y)
        At least three pairs with ``y > 0``.

    Returns
    -------
    DecayFit
        ``r2`` is 1 when the residual vanishes, including constant ``y``.
    """
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise InvalidArgument("points must be (x, y) pairs")
    if arr.shape[0] < 3:
        raise InvalidArgument("need at least 3 points")
    x, y = arr[:, 0], arr[:, 1]
    if not np.all(y > 0):
        raise InvalidArgument("y values must be positive")
    ly = np.log2(y)
    slope, intercept = np.polyfit(x, ly, 1)
    resid = ly - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float(((ly - ly.mean()) ** 2).sum())
    # rounding noise on an exactly linear fit
    if ss_tot == 0.0 or ss_res <= 1e-24 * max(ss_tot, 1.0):
        r2 = 1.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return DecayFit(float(slope), float(intercept), float(r2))
