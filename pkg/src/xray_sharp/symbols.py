"""Symbols, the frequency-side cutoff constructions, and the implicit root ``sigma``.

Evaluation convention. A symbol of arity ``"stxi"`` is called as
``a(s, t, xi)`` and one of arity ``"sttauxi"`` as ``a(s, t, tau, xi)``.
Scalar arguments broadcast against each other and ``xi`` carries one
extra trailing axis of length ``d``; the result has the broadcast shape.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .bumps import beta, beta0, compact_bump
from .curves import Curve, LiftedCurve
from .errors import InvalidArgument, NoRootError

STXI = "stxi"
STTAUXI = "sttauxi"


@dataclass(frozen=True, eq=False)
class Symbol:
    """A frequency-side amplitude with declared support metadata.

    Parameters
    ----------
    arity : {"stxi", "sttauxi"}
        Argument signature.
    fn : callable
        The evaluator.
    s_interval, t_interval : (float, float)
        Closed intervals outside which ``fn`` vanishes.
    xi_mask : callable, optional
        ``xi_mask(xi) -> bool array`` selecting frequencies where the
        symbol may be nonzero; fibers outside are skipped.
    tau_window : callable, optional
        For ``sttauxi`` symbols: ``tau_window(xi) -> (lo, hi)`` arrays
        bounding the tau-support per frequency.
    bound_B : float
        Declared size constant.
    label : str
        Descriptor used in reports.
    """

    arity: str
    fn: Callable
    s_interval: tuple = (-1.0, 1.0)
    t_interval: tuple = (1.0, 2.0)
    xi_mask: Callable | None = None
    tau_window: Callable | None = None
    bound_B: float = 1.0
    label: str = "symbol"
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.arity not in (STXI, STTAUXI):
            raise InvalidArgument(f"unknown arity {self.arity!r}")

    def __call__(self, *args):
        return self.fn(*args)

    def mask(self, xi: np.ndarray) -> np.ndarray:
        xi = np.atleast_2d(xi)
        if self.xi_mask is None:
            return np.ones(xi.shape[0], dtype=bool)
        return np.asarray(self.xi_mask(xi), dtype=bool)


def _dot(curve_vals, xi):
    return np.sum(curve_vals * xi, axis=-1)


def _norm(xi):
    return np.linalg.norm(xi, axis=-1)


def zero_symbol(arity: str = STXI) -> Symbol:
    if arity == STXI:
        fn = lambda s, t, xi: np.zeros(np.broadcast_shapes(np.shape(s), np.shape(t), np.shape(xi)[:-1]))
    else:
        fn = lambda s, t, tau, xi: np.zeros(
            np.broadcast_shapes(np.shape(s), np.shape(t), np.shape(tau), np.shape(xi)[:-1])
        )
    return Symbol(arity, fn, xi_mask=lambda xi: np.zeros(len(xi), bool), tau_window=_zero_window, label="zero")


def _zero_window(xi):
    z = np.zeros(len(xi))
    return z, z


def psi_chi(cutoffs) -> Symbol:
    """``a(s, t, xi) = psi(s) chi(t)``."""

    def fn(s, t, xi):
        shape = np.broadcast_shapes(np.shape(s), np.shape(t), np.shape(xi)[:-1])
        return np.broadcast_to(cutoffs.psi(s) * cutoffs.chi(t), shape)

    return Symbol(STXI, fn, label="psi_chi")


def psi_chi_lp(cutoffs, k: int) -> Symbol:
    """``a(s, t, xi) = psi(s) chi(t) beta(2^{-k} |xi|)``."""

    def fn(s, t, xi):
        return cutoffs.psi(s) * cutoffs.chi(t) * beta(_norm(xi) / 2.0**k)

    def mask(xi):
        r = _norm(xi)
        return (r > 2.0 ** (k - 1)) & (r < 2.0 ** (k + 1))

    return Symbol(STXI, fn, xi_mask=mask, label=f"psi_chi_lp({k})", meta={"k": k})


def tau_extended(a: Symbol, tau_bound: float) -> Symbol:
    """``a(s, t, xi) beta0(tau / tau_bound)``: a tau-flat extension of ``a``.

    The plateau ``|tau| <= tau_bound / 2`` must contain the tau-spectrum of
    ``t -> a(s, t, xi) exp(-i t gamma(s).xi)`` for ``T`` to reproduce ``R``.
    """

    def fn(s, t, tau, xi):
        return a(s, t, xi) * beta0(np.asarray(tau) / tau_bound)

    def window(xi):
        n = len(xi)
        return np.full(n, -tau_bound), np.full(n, tau_bound)

    return Symbol(STTAUXI, fn, a.s_interval, a.t_interval, a.xi_mask, window, a.bound_B, f"tau_ext({a.label})")


# ----------------------------------------------------------------------------
# sigma(xi): root of s -> <gamma^{(N-1)}(s), xi>
# ----------------------------------------------------------------------------


def sigma_solve(
    curve: Curve,
    N: int,
    xi,
    interval=(-1.0, 1.0),
    n_scan: int = 129,
    s_hint: float = 0.0,
    rtol: float = 1e-10,
) -> float:
    """Solve ``<gamma^{(N-1)}(s), xi> = 0`` for ``s`` in ``interval``.

    A uniform scan brackets sign changes; the bracket nearest ``s_hint`` is
    narrowed by bisection and polished with safeguarded Newton steps.

    Raises
    ------
    NoRootError
        If no sign change exists on the scan grid.
    """
    xi = np.asarray(xi, dtype=float)
    nrm = float(np.linalg.norm(xi))
    if nrm == 0.0:
        raise InvalidArgument("xi must be nonzero")
    if N < 2:
        raise InvalidArgument("N must be at least 2")

    def h(s):
        return float(np.dot(curve.eval_deriv(s, N - 1), xi))

    def dh(s):
        return float(np.dot(curve.eval_deriv(s, N), xi))

    grid = np.linspace(interval[0], interval[1], n_scan)
    vals = _dot(curve.eval_deriv(grid, N - 1), xi)
    exact = np.nonzero(vals == 0.0)[0]
    brackets = [(grid[i], grid[i]) for i in exact]
    sgn = np.sign(vals)
    for i in np.nonzero(sgn[:-1] * sgn[1:] < 0)[0]:
        brackets.append((grid[i], grid[i + 1]))
    if not brackets:
        raise NoRootError("no sign change of <gamma^(N-1)(s), xi> on the interval")
    lo, hi = min(brackets, key=lambda b: abs(0.5 * (b[0] + b[1]) - s_hint))
    if lo == hi:
        return float(lo)
    flo = h(lo)
    # bisection down to a small bracket
    for _ in range(200):
        if hi - lo <= 1e-6 * max(1.0, abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        fm = h(mid)
        if fm == 0.0:
            return float(mid)
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    s = 0.5 * (lo + hi)
    tol = rtol * nrm
    for _ in range(50):
        f = h(s)
        if abs(f) <= 0.01 * tol:
            break
        df = dh(s)
        step = f / df if df != 0 else 0.0
        s_new = s - step
        if not (lo <= s_new <= hi) or df == 0:
            s_new = 0.5 * (lo + hi)
        fn = h(s_new)
        if np.sign(fn) == np.sign(flo):
            lo, flo = s_new, fn
        else:
            hi = s_new
        if s_new == s:
            break
        s = s_new
    if abs(h(s)) > tol:
        raise NoRootError(f"Newton polish did not reach residual {tol:.3g}")
    return float(s)


def sigma_solve_many(curve: Curve, N: int, xis, **kw) -> np.ndarray:
    return np.array([sigma_solve(curve, N, x, **kw) for x in np.atleast_2d(xis)])


# ----------------------------------------------------------------------------
# the a_N / a_0 / a_1 decomposition
# ----------------------------------------------------------------------------


def admissible_delta0(d: int, N: int, B: float, delta_star: float = 1e-2) -> float:
    """The largest admissible base scale ``min(delta_star, 2^{-3dN} B^{-N})``."""
    return min(delta_star, 2.0 ** (-3 * d * N) * B ** (-N))


def build_aN(a: Symbol, curve: Curve, delta0: float, d: int, B: float, N: int | None = None) -> Symbol:
    """Restrict ``a`` to frequencies almost orthogonal to ``gamma', ..., gamma^{(N-1)}``.

    ``a_N = a * prod_{j=1}^{N-1} beta0(100 d B delta0^{-N} gamma^{(j)}(s).xi / |xi|)``.
    ``N`` defaults to ``d``.
    """
    if a.arity != STXI:
        raise InvalidArgument("build_aN expects an (s, t, xi) symbol")
    N = d if N is None else N
    scale = 100.0 * d * B * delta0 ** (-N)

    def fn(s, t, xi):
        r = _norm(xi)
        out = a(s, t, xi)
        safe = np.where(r > 0, r, 1.0)
        for j in range(1, N):
            out = out * beta0(scale * _dot(curve.eval_deriv(s, j), xi) / safe)
        return np.where(r > 0, out, 0.0)

    return Symbol(
        STXI,
        fn,
        a.s_interval,
        a.t_interval,
        a.xi_mask,
        None,
        a.bound_B,
        f"aN({a.label},delta0={delta0:g})",
        {**a.meta, "delta0": delta0, "N": N, "B": B, "d": d},
    )


def split_a0_a1(aN: Symbol, curve: Curve, delta0: float, k: int, N: int | None = None):
    """Split ``a_N`` by the size of ``tau + gamma(s).xi`` at scale ``2^k delta0^N``.

    Returns
    -------
    (Symbol, Symbol)
        ``a0 = a_N beta0(delta0^{-2N} 2^{-2k} |tau + gamma(s).xi|^2)`` and
        ``a1 = a_N - a0``, so that ``a_N = a0 + a1`` pointwise.
    """
    N = aN.meta.get("N") if N is None else N
    if N is None:
        raise InvalidArgument("N unknown; pass it explicitly")
    width = 2.0**k * delta0**N
    gmax = _curve_sup(curve, aN.s_interval)

    def tau_factor(s, tau, xi):
        u = (np.asarray(tau) + _dot(curve.eval_deriv(s, 0), xi)) / width
        return beta0(u * u)

    def f0(s, t, tau, xi):
        return aN(s, t, xi) * tau_factor(s, tau, xi)

    def f1(s, t, tau, xi):
        return aN(s, t, xi) * (1.0 - tau_factor(s, tau, xi))

    def window0(xi):
        r = _norm(xi)
        return -gmax * r - width, gmax * r + width

    meta = {**aN.meta, "k": k, "tau_width": width}
    a0 = Symbol(STTAUXI, f0, aN.s_interval, aN.t_interval, aN.xi_mask, window0, aN.bound_B, "a0", meta)
    a1 = Symbol(STTAUXI, f1, aN.s_interval, aN.t_interval, aN.xi_mask, None, aN.bound_B, "a1", meta)
    return a0, a1


def _curve_sup(curve: Curve, interval) -> float:
    s = np.linspace(interval[0], interval[1], 257)
    return float(np.linalg.norm(curve.eval_deriv(s, 0), axis=-1).max())


# ----------------------------------------------------------------------------
# Lambda regions and the symbol-class verifier
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class LambdaRegion:
    """The slab ``Lambda_k(delta, s0)`` of frequencies adapted to the curve at ``s0``."""

    k: int
    delta: float
    s0: float
    B: float
    lifted: LiftedCurve
    N: int

    def pairings(self, tau, xi) -> np.ndarray:
        """``<G^{(j)}(s0), (tau, xi)>`` for ``j = 0..N-1``, stacked last."""
        tau = np.asarray(tau, dtype=float)
        xi = np.asarray(xi, dtype=float)
        cols = []
        for j in range(self.N):
            G = self.lifted.eval_deriv(self.s0, j)
            cols.append(G[0] * tau + _dot(G[1:], xi))
        return np.stack(cols, axis=-1)

    def bounds(self) -> np.ndarray:
        return np.array([self.B * 2.0 ** (self.k + 5) * self.delta ** (self.N - j) for j in range(self.N)])


def lambda_membership(region: LambdaRegion, tau, xi) -> np.ndarray:
    """Membership in ``Lambda_k``: annulus condition and the N pairing bounds."""
    xi = np.asarray(xi, dtype=float)
    r = _norm(xi)
    ann = (r >= 2.0 ** (region.k - 1)) & (r <= 2.0 ** (region.k + 1))
    pair = np.abs(region.pairings(tau, xi)) <= region.bounds()
    return ann & np.all(pair, axis=-1)


@dataclass
class ClassReport:
    support_ok: bool
    derivative_ok: bool
    worst_ratio: float
    n_support_probes: int
    n_derivative_probes: int
    max_order: str = "j<=2, |alpha|<=2"


def class_Ak_verify(
    symb: Symbol,
    delta: float,
    s0: float,
    curve: Curve,
    B: float,
    k: int,
    N: int,
    rng: np.random.Generator | None = None,
    n_probes: int = 4000,
    n_deriv: int = 200,
    fd_h: float = 1e-3,
    frame=None,
) -> ClassReport:
    """Numerically test membership of an ``(s, t, tau, xi)`` symbol in the class.

    Support: probes are drawn outside the declared box ``[s0-delta, s0+delta]
    x [1, 2] x Lambda_k(delta, s0)`` but close to it; any nonzero value there
    fails the check. Derivatives: centered differences of
    ``a(s, t, 2^k L(eta))`` in ``t`` and in ``eta`` up to second order are
    compared against ``B |eta|^{-|alpha|}`` (in rescaled units).
    """
    from .decomp import make_frame

    rng = np.random.default_rng(0) if rng is None else rng
    d = curve.dim
    region = LambdaRegion(k, delta, s0, B, LiftedCurve(curve), N)
    frame = make_frame(curve, s0, delta, N) if frame is None else frame
    Lfull = frame.Lfull

    # support probes: sample eta in a box twice the nominal, map by 2^k L
    n = n_probes
    eta = rng.uniform(-1, 1, size=(n, d + 1)) * 2.0 ** 2
    s = s0 + delta * rng.uniform(-2.0, 2.0, size=n)
    t = rng.uniform(0.5, 2.5, size=n)
    tx = 2.0**k * eta @ Lfull.T
    tau, xi = tx[:, 0], tx[:, 1:]
    vals = np.asarray(symb(s, t, tau, xi))
    outside = (
        (np.abs(s - s0) > delta)
        | (t < 1.0)
        | (t > 2.0)
        | ~lambda_membership(region, tau, xi)
    )
    support_ok = not bool(np.any(np.abs(vals[outside]) > 1e-14))

    # derivative probes inside the support
    worst = 0.0
    inside = np.nonzero((~outside) & (np.abs(vals) > 0))[0][:n_deriv]
    for idx in inside:
        e0 = eta[idx]
        s_i, t_i = s[idx], t[idx]
        scale = np.linalg.norm(e0)

        def g(tt, ee):
            te = 2.0**k * (Lfull @ ee)
            return float(np.real(symb(s_i, tt, te[0], te[1:])))

        base = abs(g(t_i, e0))
        worst = max(worst, base / B)
        h = fd_h
        for order in (1, 2):
            dt = _fd_scalar(lambda u: g(u, e0), t_i, order, h)
            worst = max(worst, abs(dt) / B)
        for c in range(d + 1):
            unit = np.zeros(d + 1)
            unit[c] = 1.0
            hh = h * scale
            for order in (1, 2):
                # (tau, xi) = 2^k eta turns the bound B |(tau, xi)|^{-|alpha|}
                # into B |eta|^{-|alpha|} for derivatives in eta
                de = _fd_scalar(lambda u: g(t_i, e0 + u * unit), 0.0, order, hh)
                worst = max(worst, abs(de) * scale**order / B)
    derivative_ok = worst <= 1.0 + 1e-9 if len(inside) else True
    return ClassReport(support_ok, derivative_ok, float(worst), int(outside.sum()), int(len(inside)))


def model_class_symbol(curve: Curve, k: int, delta: float, s0: float, N: int, chi=None, width: float = 1.0) -> Symbol:
    """A concrete member of the class adapted to ``(k, delta, s0)``.

    ``a = bump((s - s0)/delta) chi(t) beta(2^{-k}|xi|) beta0(u_0) prod_{j=1}^{N-1} beta0(u_j)``
    with ``u_0 = 2^{-k} delta^{-N} (tau + gamma(s0).xi) / width`` and
    ``u_j = 2^{-k} delta^{-(N-j)} gamma^{(j)}(s0).xi / width``. In the rescaled
    variables ``(tau, xi) = 2^k L(eta)`` every factor is a fixed bump of
    ``eta``, so the derivative bounds do not depend on ``k``.
    """
    chi = (lambda t: compact_bump(2.0 * np.asarray(t, dtype=float) - 3.0)) if chi is None else chi
    g0 = np.asarray(curve(np.array([s0]))[0])
    gj = [np.asarray(curve.eval_deriv(np.array([s0]), j)[0]) for j in range(1, N)]
    sc = 2.0**k

    def fn(s, t, tau, xi):
        xi = np.asarray(xi, dtype=float)
        out = compact_bump((np.asarray(s, dtype=float) - s0) / delta) * chi(t) * beta(_norm(xi) / sc)
        out = out * beta0((np.asarray(tau) + xi @ g0) / (sc * delta**N * width))
        for j, g in enumerate(gj, start=1):
            out = out * beta0((xi @ g) / (sc * delta ** (N - j) * width))
        return out

    def mask(xi):
        r = _norm(xi)
        ok = (r > sc / 2) & (r < 2 * sc)
        for j, g in enumerate(gj, start=1):
            ok &= np.abs(xi @ g) < sc * delta ** (N - j) * width
        return ok

    def window(xi):
        c = -(np.asarray(xi) @ g0)
        h = sc * delta**N * width
        return c - h, c + h

    meta = {"k": k, "delta": delta, "s0": s0, "N": N, "width": width}
    return Symbol(STTAUXI, fn, (s0 - delta, s0 + delta), (1.0, 2.0), mask, window, 1.0, f"class_model(k={k})", meta)


def _fd_scalar(f, x, order, h):
    if order == 1:
        return (f(x + h) - f(x - h)) / (2 * h)
    return (f(x + h) - 2 * f(x) + f(x - h)) / h**2


# ----------------------------------------------------------------------------
# angular neighborhoods of a direction set
# ----------------------------------------------------------------------------


def gamma_neighborhood_member(directions, h: float, xi, tol: float = 1e-9) -> np.ndarray:
    """Whether ``xi/|xi|`` lies within ``h`` of some stored unit direction.

    Parameters
    ----------
    directions : array (n, d) or Symbol
        Unit vectors sampling ``supp_xi a``. A symbol with a
        ``"directions"`` entry in ``meta`` is accepted too.
    h : float
        Euclidean distance threshold on the unit sphere.
    """
    if isinstance(directions, Symbol):
        directions = directions.meta["directions"]
    D = np.atleast_2d(np.asarray(directions, dtype=float))
    D = D / np.linalg.norm(D, axis=-1, keepdims=True)
    X = np.atleast_2d(np.asarray(xi, dtype=float))
    X = X / np.linalg.norm(X, axis=-1, keepdims=True)
    dist = np.linalg.norm(X[:, None, :] - D[None, :, :], axis=-1).min(axis=1)
    out = dist <= h + tol
    return out if np.ndim(xi) > 1 else bool(out[0])


def sample_support_directions(symb: Symbol, xi_candidates, probe_s, probe_t) -> np.ndarray:
    """Unit directions of candidate frequencies where the symbol is nonzero somewhere."""
    xi = np.atleast_2d(xi_candidates)
    S, T = np.meshgrid(probe_s, probe_t, indexing="ij")
    keep = []
    for x in xi:
        v = symb(S, T, np.broadcast_to(x, S.shape + (len(x),)))
        if np.any(np.abs(v) > 0):
            keep.append(x / np.linalg.norm(x))
    if not keep:
        warnings.warn("no support directions found", RuntimeWarning)
        return np.zeros((0, xi.shape[1]))
    return np.array(keep)
