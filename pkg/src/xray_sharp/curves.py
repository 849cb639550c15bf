"""Curves ``gamma: [-1, 1] -> R^d`` with derivatives, plus nondegeneracy tools.

Built-in curves (moment, finite type with constant factors, perturbed
moment) carry exact analytic derivatives. Curves from arbitrary callables
fall back to centered finite differences with one Richardson step.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial
from typing import Callable, Sequence

import numpy as np

from .errors import InvalidArgument, TypeUndetermined

I_INTERVAL = (-1.0, 1.0)

DerivFn = Callable[[np.ndarray, int], np.ndarray]


@dataclass(frozen=True, eq=False)
class Curve:
    """A smooth curve with derivative access.

    Parameters
    ----------
    dim : int
        Ambient dimension ``d``.
    deriv_fn : callable
        ``deriv_fn(s, j)`` returns the ``j``-th derivative at the parameter
        array ``s`` with shape ``s.shape + (d,)``.
    label : str
        Human-readable name.
    exact : bool
        Whether derivatives are analytic (True) or finite differences.
    increment_fn : callable, optional
        ``increment_fn(s, s0)`` returning ``gamma(s) - gamma(s0)`` without
        cancellation. Defaults to plain subtraction.
    """

    dim: int
    deriv_fn: DerivFn
    label: str = "curve"
    exact: bool = True
    increment_fn: Callable | None = field(default=None, repr=False)

    @property
    def max_order(self) -> int:
        return 3 * self.dim + 1

    def eval_deriv(self, s, j: int = 0) -> np.ndarray:
        if j < 0:
            raise InvalidArgument("derivative order must be nonnegative")
        s = np.asarray(s, dtype=float)
        return np.asarray(self.deriv_fn(s, int(j)), dtype=float)

    def __call__(self, s) -> np.ndarray:
        return self.eval_deriv(s, 0)

    def derivative_matrix(self, s: float, orders: Sequence[int]) -> np.ndarray:
        """Columns ``gamma^{(j)}(s)`` for ``j`` in ``orders``; shape (d, len(orders))."""
        return np.stack([self.eval_deriv(s, j) for j in orders], axis=-1)

    def increment(self, s, s0) -> np.ndarray:
        """``gamma(s) - gamma(s0)``, accurate when ``s`` is close to ``s0``."""
        s = np.asarray(s, dtype=float)
        s0 = np.asarray(s0, dtype=float)
        if self.increment_fn is not None:
            return self.increment_fn(s, s0)
        return self.eval_deriv(s, 0) - self.eval_deriv(s0, 0)

    def scaled(self, c: float) -> "Curve":
        """The curve ``c * gamma``."""
        base = self

        def fn(s, j):
            return c * base.eval_deriv(s, j)

        def inc(s, s0):
            return c * base.increment(s, s0)

        return Curve(self.dim, fn, f"{c}*{self.label}", self.exact, inc)


@dataclass(frozen=True)
class LiftedCurve:
    """The lift ``G(s) = (1, gamma(s))`` in ``R^{d+1}``."""

    base: Curve

    @property
    def dim(self) -> int:
        return self.base.dim + 1

    def eval_deriv(self, s, j: int = 0) -> np.ndarray:
        g = self.base.eval_deriv(s, j)
        first = np.full(g.shape[:-1] + (1,), 1.0 if j == 0 else 0.0)
        return np.concatenate([first, g], axis=-1)

    def eval(self, s) -> np.ndarray:
        return self.eval_deriv(s, 0)


@dataclass(frozen=True)
class RegularityBound:
    B: float

    def __post_init__(self):
        if not self.B >= 1.0:
            raise InvalidArgument("regularity bound must be at least 1")


# ----------------------------------------------------------------------------
# polynomial curves
# ----------------------------------------------------------------------------


def _poly_curve(coeffs: np.ndarray, label: str) -> Curve:
    """Curve ``sum_n coeffs[n] s**n`` with ``coeffs`` of shape (deg+1, d)."""
    coeffs = np.asarray(coeffs, dtype=float)
    deg = coeffs.shape[0] - 1
    d = coeffs.shape[1]

    def fn(s, j):
        out = np.zeros(s.shape + (d,))
        for n in range(j, deg + 1):
            c = coeffs[n]
            if not np.any(c):
                continue
            fall = factorial(n) / factorial(n - j)
            out += fall * (s[..., None] ** (n - j)) * c
        return out

    def inc(s, s0):
        # s**n - s0**n = (s - s0) * sum_{i<n} s**i s0**(n-1-i)
        s, s0 = np.broadcast_arrays(s, s0)
        ds = (s - s0)[..., None]
        out = np.zeros(s.shape + (d,))
        for n in range(1, deg + 1):
            c = coeffs[n]
            if not np.any(c):
                continue
            acc = np.zeros(s.shape)
            for i in range(n):
                acc = acc + s**i * s0 ** (n - 1 - i)
            out += acc[..., None] * c
        return ds * out

    return Curve(d, fn, label, True, inc)


def moment_curve(d: int) -> Curve:
    """The moment curve ``(s, s^2/2!, ..., s^d/d!)``."""
    if int(d) != d or d < 2:
        raise InvalidArgument("moment curve needs d >= 2")
    d = int(d)
    coeffs = np.zeros((d + 1, d))
    for n in range(1, d + 1):
        coeffs[n, n - 1] = 1.0 / factorial(n)
    return _poly_curve(coeffs, f"moment(d={d})")


def finite_type_curve(exponents: Sequence[int], perturbations=None) -> Curve:
    """The curve ``(s^{a_1} phi_1(s), ..., s^{a_d} phi_d(s))``.

    Parameters
    ----------
    exponents : sequence of int
        Strictly increasing positive exponents ``a_1 < ... < a_d``.
    perturbations : sequence, optional
        Per-coordinate factors ``phi_j``. Numbers give exact polynomial
        curves; callables are differentiated numerically. Defaults to
        ``1/a_j!``.
    """
    a = [int(x) for x in exponents]
    if len(a) < 1 or a[0] < 1 or any(a[i] >= a[i + 1] for i in range(len(a) - 1)):
        raise InvalidArgument("exponents must be positive and strictly increasing")
    d = len(a)
    if perturbations is None:
        perturbations = [1.0 / factorial(x) for x in a]
    if len(perturbations) != d:
        raise InvalidArgument("need one perturbation per coordinate")
    label = f"finite_type{tuple(a)}"
    if all(np.isscalar(p) for p in perturbations):
        coeffs = np.zeros((a[-1] + 1, d))
        for i, (ai, phi) in enumerate(zip(a, perturbations)):
            coeffs[ai, i] = float(phi)
        return _poly_curve(coeffs, label)

    phis = [p if callable(p) else (lambda s, c=float(p): np.full_like(s, c)) for p in perturbations]

    def value(s):
        s = np.asarray(s, dtype=float)
        return np.stack([s**ai * phi(s) for ai, phi in zip(a, phis)], axis=-1)

    return curve_from_callable(value, d, label)


def perturbed_moment_curve(d: int, eps: float) -> Curve:
    """Moment curve plus ``eps * sin(i s)`` in coordinate ``i`` (1-based)."""
    base = moment_curve(d)
    freqs = np.arange(1, d + 1, dtype=float)

    def fn(s, j):
        pert = eps * freqs**j * np.sin(s[..., None] * freqs + j * np.pi / 2)
        return base.eval_deriv(s, j) + pert

    def inc(s, s0):
        s, s0 = np.broadcast_arrays(s, s0)
        # sin(a) - sin(b) = 2 cos((a+b)/2) sin((a-b)/2)
        half = 0.5 * (s - s0)[..., None] * freqs
        mid = 0.5 * (s + s0)[..., None] * freqs
        return base.increment(s, s0) + eps * 2.0 * np.cos(mid) * np.sin(half)

    return Curve(d, fn, f"perturbed_moment(d={d},eps={eps})", True, inc)


# ----------------------------------------------------------------------------
# finite-difference curves
# ----------------------------------------------------------------------------


def fd_step(j: int) -> float:
    """Step used for the ``j``-th finite-difference derivative.

    First derivatives use 1e-4. Higher orders balance roundoff ``eps/h^j``
    against the ``h^4`` truncation of the extrapolated stencil.
    """
    if j <= 1:
        return 1e-4
    return max(1e-4, np.finfo(float).eps ** (1.0 / (j + 4)))


def _central_difference(value, s, j, h):
    # sum_i (-1)^i C(j, i) f(s + (j/2 - i) h) / h^j, error O(h^2)
    from math import comb

    acc = 0.0
    for i in range(j + 1):
        acc = acc + (-1) ** i * comb(j, i) * value(s + (j / 2 - i) * h)
    return acc / h**j


def curve_from_callable(value: Callable, dim: int, label: str = "callable") -> Curve:
    """Wrap ``value(s) -> (..., d)`` as a curve with numerical derivatives.

    Derivatives use centered differences at steps ``h`` and ``h/2``
    combined by Richardson extrapolation, giving ``O(h^4)`` accuracy.
    """

    def fn(s, j):
        if j == 0:
            return np.asarray(value(s), dtype=float)
        h = fd_step(j)
        d1 = _central_difference(value, s, j, h)
        d2 = _central_difference(value, s, j, h / 2)
        return (4.0 * d2 - d1) / 3.0

    return Curve(int(dim), fn, label, False)


# ----------------------------------------------------------------------------
# diagnostics
# ----------------------------------------------------------------------------


def vol_parallelepiped(vectors) -> float:
    """L-dimensional volume ``sqrt(det(V V^T))`` of the spanned parallelepiped.

    Computed as the product of singular values of ``V``; forming the Gram
    matrix would square the conditioning and turn round-off into ``sqrt(eps)``.
    """
    V = np.asarray(vectors, dtype=float)
    if V.ndim == 1:
        V = V[None, :]
    L, d = V.shape
    if L < 1 or L > d:
        raise InvalidArgument("need 1 <= L <= d vectors")
    return float(np.prod(np.linalg.svd(V, compute_uv=False)))


def wronskian_det(curve: Curve, s: float) -> float:
    """``det(gamma'(s), ..., gamma^{(d)}(s))``."""
    W = curve.derivative_matrix(float(s), range(1, curve.dim + 1))
    return float(np.linalg.det(W))


def check_nondegenerate(curve: Curve, interval=I_INTERVAL, n_samples: int = 101):
    """Sample the Wronskian on a uniform grid.

    Returns
    -------
    (bool, float)
        Whether the minimum of ``|det|`` is positive, and that minimum.
    """
    if n_samples < 2:
        raise InvalidArgument("n_samples must be at least 2")
    grid = np.linspace(interval[0], interval[1], n_samples)
    m = min(abs(wronskian_det(curve, s)) for s in grid)
    return bool(m > 0.0), float(m)


def max_type(curve: Curve, interval=(-0.5, 0.5), tolerance: float = 1e-8, n_samples: int = 101, cap: int | None = None) -> int:
    """Largest sampled type ``L(s)``: the first L with full-rank derivative span.

    Rank is decided by singular values above ``tolerance`` times the largest.
    """
    cap = curve.max_order if cap is None else cap
    d = curve.dim
    worst = 0
    for s in np.linspace(interval[0], interval[1], n_samples):
        derivs = curve.derivative_matrix(float(s), range(1, cap + 1))
        found = None
        for L in range(d, cap + 1):
            sv = np.linalg.svd(derivs[:, :L], compute_uv=False)
            if sv[0] > 0 and np.sum(sv > tolerance * sv[0]) == d:
                found = L
                break
        if found is None:
            raise TypeUndetermined(f"no type <= {cap} at s={s:.6g}")
        worst = max(worst, found)
    return worst


def curve_bound(curve: Curve, n_samples: int = 201, interval=I_INTERVAL) -> RegularityBound:
    """Smallest ``B >= 1`` with ``sum_{j<=3d+1} |gamma^{(j)}(s)| <= B/100`` on the grid."""
    s = np.linspace(interval[0], interval[1], n_samples)
    total = np.zeros_like(s)
    for j in range(curve.max_order + 1):
        total += np.linalg.norm(curve.eval_deriv(s, j), axis=-1)
    return RegularityBound(max(1.0, 100.0 * float(total.max())))


CURVE_REGISTRY = {
    "moment": lambda d, **kw: moment_curve(d),
    "finite_type": lambda d=None, exponents=(1, 2, 4), **kw: finite_type_curve(exponents),
    "perturbed_moment": lambda d, eps=0.05, **kw: perturbed_moment_curve(d, eps),
}


def make_curve(name: str, **params) -> Curve:
    """Construct a registered curve by name."""
    if name not in CURVE_REGISTRY:
        raise InvalidArgument(f"unknown curve {name!r}; known: {sorted(CURVE_REGISTRY)}")
    return CURVE_REGISTRY[name](**params)
