"""Anisotropic frames, scale schedules and the frequency decomposition.

The localized symbols here live at scales where ``|xi| ~ 2^k`` is huge and
``tau + gamma(s).xi`` is tiny in comparison. To keep full precision, the
frequency variable is carried in *centered* form ``(y0, xi)`` with
``y0 = tau + gamma(delta0 mu).xi``; every quantity that needs
``tau + gamma(s).xi`` is formed as ``y0 + (gamma(s) - gamma(delta0 mu)).xi``
using the curve's cancellation-free increment.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import ceil, factorial, floor, log2

import numpy as np
from scipy import special

from .bumps import beta, beta0, beta0_of_log, zeta
from .curves import Curve, LiftedCurve, vol_parallelepiped
from .errors import (
    FrameDegenerate,
    InadmissibleFrequency,
    InvalidArgument,
    SupportViolation,
)
from .fields import GridSpec, SampledField, apply_multiplier, lp_norm

LN2 = np.log(2.0)


# ----------------------------------------------------------------------------
# linear frames
# ----------------------------------------------------------------------------


def lifted_moment_derivative(s, j: int, N: int) -> np.ndarray:
    """``j``-th derivative of ``(s, s^2/2!, ..., s^{N+1}/(N+1)!)``, shape ``s.shape + (N+1,)``."""
    s = np.asarray(s, dtype=float)
    out = np.zeros(s.shape + (N + 1,))
    for m in range(max(j, 1), N + 2):
        out[..., m - 1] = s ** (m - j) / factorial(m - j)
    return out


def _complement_basis(V: np.ndarray) -> np.ndarray:
    """Orthonormal basis of ``span(V)^perp`` (columns), Gram-Schmidt on e_1, e_2, ..."""
    d = V.shape[0]
    Q = np.linalg.qr(V)[0] if V.shape[1] else np.zeros((d, 0))
    basis = []
    for i in range(d):
        if len(basis) == d - V.shape[1]:
            break
        v = np.zeros(d)
        v[i] = 1.0
        for _ in range(2):
            v = v - Q @ (Q.T @ v)
            for b in basis:
                v = v - b * (b @ v)
        nv = np.linalg.norm(v)
        if nv > 1e-8:
            basis.append(v / nv)
    return np.array(basis).T.reshape(d, len(basis))


@dataclass(frozen=True)
class LinearFrame:
    """The anisotropic maps attached to a point ``s`` of the curve at scale ``delta``.

    Attributes
    ----------
    Ltilde : ndarray (d, d)
        Shrinks ``gamma^{(j)}(s)`` by ``delta^{N-j}`` (transpose action) for
        ``j < N`` and fixes their orthogonal complement.
    Lfull : ndarray (d+1, d+1)
        ``(tau, xi) -> (delta^N tau - gamma(s).Ltilde xi, Ltilde xi)``.
    M : ndarray (d, d)
        ``delta^{-N} Ltilde``.
    D : ndarray (N+1, N+1)
        Columns ``delta^j`` times the ``j``-th derivative of the lifted
        moment curve in ``R^{N+1}`` at ``s``.
    """

    Ltilde: np.ndarray
    Lfull: np.ndarray
    M: np.ndarray
    D: np.ndarray
    meta: dict = field(default_factory=dict)


def make_frame(curve: Curve, s: float, delta: float, N: int) -> LinearFrame:
    """Build the frame at ``s``.

    Raises
    ------
    FrameDegenerate
        If ``gamma'(s), ..., gamma^{(N-1)}(s)`` are (numerically) dependent.
    """
    d = curve.dim
    if not (2 <= N <= d + 1):
        raise InvalidArgument("need 2 <= N <= d + 1")
    if not delta > 0:
        raise InvalidArgument("delta must be positive")
    s = float(s)
    V = curve.derivative_matrix(s, range(1, N)) if N > 1 else np.zeros((d, 0))
    if V.shape[1] > d:
        raise InvalidArgument("N - 1 must not exceed d")
    if V.shape[1]:
        vol = vol_parallelepiped(V.T)
        if not vol > 1e-12 * max(1.0, np.linalg.norm(V) ** V.shape[1]):
            raise FrameDegenerate(f"derivatives 1..{N - 1} are dependent at s={s}")
    W = _complement_basis(V)
    basis = np.concatenate([V, W], axis=1)
    scales = np.concatenate([[delta ** (N - j) for j in range(1, N)], np.ones(W.shape[1])])
    # Ltilde^T basis = basis diag(scales)
    LtT = np.linalg.solve(basis.T, (basis * scales).T).T
    Lt = LtT.T
    g = curve(s)
    Lfull = np.zeros((d + 1, d + 1))
    Lfull[0, 0] = delta**N
    Lfull[0, 1:] = -(LtT @ g)
    Lfull[1:, 1:] = Lt
    M = delta ** (-N) * Lt
    D = np.stack([delta**j * lifted_moment_derivative(s, j, N) for j in range(1, N + 2)], axis=1)
    return LinearFrame(Lt, Lfull, M, D, {"s": s, "delta": delta, "N": N})


def rescaled_curve(curve: Curve, s0: float, delta: float, N: int) -> Curve:
    """The curve ``s -> M^T (gamma(delta s + s0) - gamma(s0))``.

    Derivatives follow from the chain rule:
    ``j``-th derivative ``= delta^j M^T gamma^{(j)}(delta s + s0)``.
    """
    if not (-1.0 <= s0 - delta and s0 + delta <= 1.0):
        raise InvalidArgument("[s0 - delta, s0 + delta] must lie in [-1, 1]")
    MT = make_frame(curve, s0, delta, N).M.T

    def fn(s, j):
        u = delta * s + s0
        if j == 0:
            return curve.increment(u, s0) @ MT.T
        return delta**j * (curve.eval_deriv(u, j) @ MT.T)

    def inc(s, s_ref):
        return curve.increment(delta * s + s0, delta * s_ref + s0) @ MT.T

    return Curve(curve.dim, fn, f"rescaled({curve.label},s0={s0:g},delta={delta:g})", curve.exact, inc)


# ----------------------------------------------------------------------------
# scale schedules
# ----------------------------------------------------------------------------


def _dyadic_exponent(x: float):
    """``e`` with ``x = 2^e`` as a Fraction when ``x`` is an exact power of two."""
    m, e = np.frexp(x)
    if m == 0.5:
        return Fraction(int(e) - 1)
    return None


@dataclass(frozen=True)
class DeltaSchedule:
    """Decreasing scales ``delta_0 > ... > delta_J = 2^{-k/N}``.

    ``log2_deltas`` holds exact rational exponents when the inputs were
    powers of two (``None`` otherwise).
    """

    deltas: tuple
    k: int
    N: int
    B: float
    d: int
    log2_deltas: tuple | None = None

    @property
    def J(self) -> int:
        return len(self.deltas) - 1

    def check(self) -> bool:
        """Whether ``2^{3d} B delta_j^{(N+1)/N} <= delta_{j+1} < delta_j`` for all j."""
        r = Fraction(self.N + 1, self.N)
        if self.log2_deltas is not None:
            b = _dyadic_exponent(self.B)
            e = self.log2_deltas
            return all(3 * self.d + b + r * e[j] <= e[j + 1] < e[j] for j in range(self.J))
        c = 2.0 ** (3 * self.d) * self.B
        dl = self.deltas
        return all(c * dl[j] ** float(r) <= dl[j + 1] * (1 + 1e-12) and dl[j + 1] < dl[j] for j in range(self.J))


def delta_schedule(delta0: float, B: float, N: int, k: int, d: int) -> DeltaSchedule:
    """Generate ``delta_j = (2^{3d} B)^{N r^j - N} delta0^{r^j}``, ``r = (N+1)/N``.

    The sequence stops at the first index whose scale would not exceed
    ``2^{-k/N}`` and that scale is replaced by ``2^{-k/N}`` itself. With
    ``delta0`` and ``B`` powers of two the exponents are exact rationals.

    Raises
    ------
    InvalidArgument
        If ``delta0`` is outside ``[2^{-k/N}, 2^{-3dN} B^{-N}]`` or the
        sequence fails to decrease strictly.
    """
    if N < 1 or d < 1 or k < 1 or B < 1:
        raise InvalidArgument("need N, d, k >= 1 and B >= 1")
    a = _dyadic_exponent(delta0)
    b = _dyadic_exponent(B)
    r = Fraction(N + 1, N)
    end = Fraction(-k, N)
    if a is not None and b is not None:
        top = -3 * d * N - N * b
        if not (end <= a <= top):
            raise InvalidArgument(f"delta0 = 2^{a} outside [2^{end}, 2^{top}]")
        exps = [a]
        j = 0
        while exps[-1] > end:
            j += 1
            nxt = (3 * d + b) * (N * r**j - N) + a * r**j
            if nxt >= exps[-1]:
                raise InvalidArgument("schedule does not decrease strictly (boundary delta0)")
            exps.append(nxt)
        exps[-1] = end
        if len(exps) == 1:
            exps.append(end)
            if not end < a:
                raise InvalidArgument("delta0 equals 2^{-k/N}; nothing to schedule")
        sched = DeltaSchedule(tuple(float(2.0 ** float(e)) for e in exps), k, N, float(B), d, tuple(exps))
    else:
        lo, hi = 2.0 ** (-k / N), 2.0 ** (-3 * d * N) * B ** (-N)
        if not (lo <= delta0 <= hi):
            raise InvalidArgument("delta0 outside the admissible range")
        c = 2.0 ** (3 * d) * B
        out = [float(delta0)]
        while out[-1] > lo:
            nxt = c * out[-1] ** float(r)
            if nxt >= out[-1]:
                raise InvalidArgument("schedule does not decrease strictly (boundary delta0)")
            out.append(nxt)
        out[-1] = lo
        sched = DeltaSchedule(tuple(out), k, N, float(B), d, None)
    if not sched.check():
        raise InvalidArgument("generated schedule violates the consecutive-scale condition")
    return sched


# ----------------------------------------------------------------------------
# y / omega / g recursion
# ----------------------------------------------------------------------------


def y_coords(lifted: LiftedCurve, mu: float, delta0: float, tau, xi, N: int) -> np.ndarray:
    """Pairings ``<G^{(j)}(delta0 mu), (tau, xi)>`` for ``j = 0..N``, stacked last."""
    s0 = delta0 * mu
    tau = np.asarray(tau, dtype=float)
    xi = np.asarray(xi, dtype=float)
    cols = []
    for j in range(N + 1):
        G = lifted.eval_deriv(s0, j)
        cols.append(G[0] * tau + xi @ G[1:])
    return np.stack(cols, axis=-1)


def g_recursion(y, N: int):
    """Re-expand ``y`` about the approximate root; returns ``(g, omega)``.

    ``omega = y^{N-1}/y^N`` and, from the top down,
    ``g^j = y^j - sum_{l>j} g^l omega^{l-j}/(l-j)!``. Works on arrays whose
    last axis has length ``N+1``.

    Raises
    ------
    InadmissibleFrequency
        If ``y^N`` vanishes.
    """
    y = np.asarray(y, dtype=float)
    if y.shape[-1] != N + 1:
        raise InvalidArgument("last axis must have length N + 1")
    yN = y[..., N]
    if np.any(yN == 0):
        raise InadmissibleFrequency("y^N = 0: frequency outside the admissible region")
    omega = y[..., N - 1] / yN
    g = np.empty_like(y)
    g[..., N] = yN
    for j in range(N - 1, -1, -1):
        acc = y[..., j].copy()
        for ell in range(j + 1, N + 1):
            acc = acc - g[..., ell] * omega ** (ell - j) / factorial(ell - j)
        g[..., j] = acc
    g[..., N - 1] = y[..., N - 1] - yN * omega
    return g, omega


def y_reconstruct(g, omega, N: int) -> np.ndarray:
    """Inverse of :func:`g_recursion`: ``y^m = sum_{l>=m} g^l omega^{l-m}/(l-m)!``."""
    g = np.asarray(g, dtype=float)
    omega = np.asarray(omega, dtype=float)
    y = np.zeros_like(g)
    for m in range(N + 1):
        acc = np.zeros(g.shape[:-1])
        for ell in range(m, N + 1):
            acc = acc + g[..., ell] * omega ** (ell - m) / factorial(ell - m)
        y[..., m] = acc
    return y


def sample_admissible_y(rng: np.random.Generator, n: int, N: int, B: float = 1.0) -> np.ndarray:
    """Random pairing vectors in the normalized admissible region.

    With ``|xi| = 1``: ``|y^j| <= 1`` for ``j < N`` and ``1/(2B) <= |y^N| <= 1``,
    so ``|omega| <= 2B``.
    """
    y = rng.uniform(-1.0, 1.0, (n, N + 1))
    y[:, N] = rng.choice([-1.0, 1.0], n) * rng.uniform(1.0 / (2.0 * B), 1.0, n)
    return y


# ----------------------------------------------------------------------------
# the localized model symbol and its scale functionals
# ----------------------------------------------------------------------------


def _log_abs(x):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(x))


def _logsumexp(parts):
    P = np.stack(parts, axis=0)
    m = np.max(P, axis=0)
    safe = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(invalid="ignore"):
        s = np.sum(np.exp(P - safe), axis=0)
    return np.where(np.isfinite(m), safe + np.log(s), -np.inf)


@dataclass(frozen=True)
class MuSymbol:
    """The model symbol localized to ``|s - delta0 mu| < delta0``.

    ``a^mu = zeta(s/delta0 - mu) psi(s) chi(t) beta(2^{-k}|xi|) E(s, xi)
    prod_{j<N} beta0(100 d B delta0^{-N} gamma^{(j)}(s).xi/|xi|)
    beta0((2^{-k} delta0^{-N} (tau + gamma(s).xi))^2)``

    where ``E = 1 - beta0(B |gamma^{(N)}(s).xi|/|xi|)`` keeps
    ``|gamma^{(N)}(s).xi| >= |xi|/(2B)`` on the support. All evaluation
    methods take the centered variable ``y0 = tau + gamma(delta0 mu).xi``.
    """

    curve: Curve
    N: int
    k: int
    B: float
    delta0: float
    mu: int
    psi: object = None
    chi: object = None

    @property
    def d(self) -> int:
        return self.curve.dim

    @property
    def s0(self) -> float:
        return self.delta0 * self.mu

    def to_centered(self, tau, xi):
        return np.asarray(tau, float) + np.asarray(xi, float) @ self.curve(self.s0)

    def q(self, s, y0, xi):
        """``tau + gamma(s).xi`` from the centered variable."""
        inc = self.curve.increment(np.asarray(s, float), self.s0)
        return np.asarray(y0, float) + np.sum(inc * xi, axis=-1)

    def ybar(self, y0, xi) -> np.ndarray:
        """``(y^0, ..., y^N)`` at ``delta0 mu``."""
        xi = np.asarray(xi, float)
        cols = [np.asarray(y0, float) * np.ones(xi.shape[:-1])]
        for j in range(1, self.N + 1):
            cols.append(xi @ self.curve.eval_deriv(self.s0, j))
        return np.stack(cols, axis=-1)

    def pairing(self, j: int, s, xi):
        return np.sum(self.curve.eval_deriv(s, j) * xi, axis=-1)

    def __call__(self, s, t, y0, xi):
        s = np.asarray(s, float)
        xi = np.asarray(xi, float)
        r = np.linalg.norm(xi, axis=-1)
        safe = np.where(r > 0, r, 1.0)
        out = zeta(s / self.delta0 - self.mu) * beta(2.0 ** (-self.k) * r)
        if self.psi is not None:
            out = out * self.psi(s)
        if self.chi is not None:
            out = out * self.chi(np.asarray(t, float))
        out = out * (1.0 - beta0(self.B * np.abs(self.pairing(self.N, s, xi)) / safe))
        scale = 100.0 * self.d * self.B * self.delta0 ** (-self.N)
        for j in range(1, self.N):
            out = out * beta0(scale * self.pairing(j, s, xi) / safe)
        u = self.q(s, y0, xi) * 2.0 ** (-self.k) * self.delta0 ** (-self.N)
        return out * beta0(u * u)

    # --- scale functionals ---------------------------------------------------

    def sigma(self, xi, tol: float = 1e-13, max_iter: int = 60) -> np.ndarray:
        """Root of ``s -> gamma^{(N-1)}(s).xi`` near ``delta0 mu`` (vectorized Newton)."""
        xi = np.atleast_2d(np.asarray(xi, float))
        y = self.ybar(np.zeros(len(xi)), xi)
        s = self.s0 - y[:, self.N - 1] / y[:, self.N]
        for _ in range(max_iter):
            h = self.pairing(self.N - 1, s, xi)
            dh = self.pairing(self.N, s, xi)
            step = h / dh
            s = s - step
            if np.all(np.abs(step) <= tol * np.maximum(1.0, np.abs(s))):
                break
        return s

    def log_gN(self, s, y0, xi):
        """Natural logs of the scale functionals ``(G_N, G_N^0)`` with ``g`` and ``omega``.

        ``G_N = sum_{j<=N-2} (2^{-k}|g^j|)^{2N!/(N-j)} + (s - sigma(xi))^{2N!}``;
        ``G_N^0`` drops the ``j = 0`` term.
        """
        N = self.N
        nf2 = 2 * factorial(N)
        xi = np.atleast_2d(np.asarray(xi, float))
        g, omega = g_recursion(self.ybar(y0, xi), N)
        lk = self.k * LN2
        terms = [nf2 / (N - j) * (_log_abs(g[:, j]) - lk) for j in range(N - 1)]
        sig = self.sigma(xi)
        tail = nf2 * _log_abs(np.asarray(s, float) - sig)
        logG = _logsumexp(terms + [tail])
        logG0 = _logsumexp(terms[1:] + [tail])
        return logG, logG0, g, omega

    def gN_functional(self, s, y0, xi):
        """``(G_N, G_N^0)`` as plain floats (may overflow to inf for large inputs)."""
        lg, lg0, _, _ = self.log_gN(s, y0, xi)
        with np.errstate(over="ignore"):
            return np.exp(lg), np.exp(lg0)

    # --- support sampling ----------------------------------------------------

    def sample_support(self, rng: np.random.Generator, n: int, max_rounds: int = 50):
        """Draw ``n`` points ``(s, t, y0, xi)`` where the symbol is nonzero."""
        d, N = self.d, self.N
        got = []
        total = 0
        for _ in range(max_rounds):
            m = 2 * (n - total) + 16
            s = self.s0 + self.delta0 * rng.uniform(-1, 1, m)
            t = rng.uniform(1.0, 2.0, m)
            r = 2.0**self.k * rng.uniform(0.5, 2.0, m)
            xi = np.empty((m, d))
            thr = self.delta0**N / (100.0 * d * self.B)
            for i in range(m):
                V = self.curve.derivative_matrix(s[i], range(1, N))
                W = _complement_basis(V)
                u = W @ rng.standard_normal(W.shape[1])
                u /= np.linalg.norm(u)
                # add a component in span(V) so that the pairings are small but nonzero
                target = thr * rng.uniform(-1, 1, N - 1)
                c = np.linalg.solve(V.T @ V, target) if N > 1 else np.zeros(0)
                xi[i] = r[i] * (u + V @ c) / np.linalg.norm(u + V @ c)
            q = 2.0**self.k * self.delta0**N * rng.uniform(-1, 1, m)
            y0 = q - np.sum(self.curve.increment(s, self.s0) * xi, axis=-1)
            val = self(s, t, y0, xi)
            keep = val != 0
            got.append((s[keep], t[keep], y0[keep], xi[keep]))
            total += int(keep.sum())
            if total >= n:
                break
        s, t, y0, xi = (np.concatenate(z)[:n] for z in zip(*got))
        if len(s) < n:
            raise InvalidArgument("support sampler could not find enough points")
        return s, t, y0, xi


# ----------------------------------------------------------------------------
# the (n, nu) splitting
# ----------------------------------------------------------------------------


def J_index_set(mu: int, delta0: float, delta1: float, n: int, widened: bool = True) -> np.ndarray:
    """Integers ``nu`` with ``|2^n delta1 nu - delta0 mu| <= delta0``.

    With ``widened=True`` the radius becomes ``delta0 + 2^n delta1`` (strict),
    which is exactly the set of ``nu`` whose bump meets ``|s - delta0 mu| < delta0``.
    """
    w = 2.0**n * delta1
    c = delta0 * mu / w
    if widened:
        rad = (delta0 + w) / w
        lo, hi = floor(c - rad) + 1, ceil(c + rad) - 1
    else:
        rad = delta0 / w
        lo, hi = ceil(c - rad), floor(c + rad)
    return np.arange(lo, hi + 1)


@dataclass(frozen=True)
class AnuPiece:
    """One piece ``a^mu_{n,nu}`` of the splitting; evaluated in centered form."""

    parent: MuSymbol
    delta1: float
    n: int
    nu: int

    @property
    def width(self) -> float:
        return 2.0**self.n * self.delta1

    @property
    def center(self) -> float:
        return self.width * self.nu

    def factor(self, s, logG):
        nf2 = 2 * factorial(self.parent.N)
        arg = logG - nf2 * np.log(self.width)
        if self.n == 0:
            sc = beta0_of_log(arg)
        else:
            sc = beta0_of_log(arg) - beta0_of_log(arg + nf2 * LN2)
        return sc * zeta(np.asarray(s, float) / self.width - self.nu)

    def __call__(self, s, t, y0, xi, logG=None):
        if logG is None:
            logG = self.parent.log_gN(s, y0, xi)[0]
        return self.parent(s, t, y0, xi) * self.factor(s, logG)


def split_anu(a_mu: MuSymbol, delta1: float, n: int, widened: bool = True) -> list:
    """Pieces ``a^mu_{n,nu}`` for ``nu`` in the index set at level ``n``.

    Raises
    ------
    InvalidArgument
        If ``2^{3d} B delta0^{(N+1)/N} <= delta1 <= delta0`` fails or ``n < 0``.
    """
    d, N, B, d0 = a_mu.d, a_mu.N, a_mu.B, a_mu.delta0
    lower = 2.0 ** (3 * d) * B * d0 ** ((N + 1) / N)
    if not (lower * (1 - 1e-12) <= delta1 <= d0) or n < 0:
        raise InvalidArgument("scales must satisfy 2^{3d} B delta0^{(N+1)/N} <= delta1 <= delta0")
    return [AnuPiece(a_mu, delta1, n, int(nu)) for nu in J_index_set(a_mu.mu, d0, delta1, n, widened)]


def top_level(a_mu: MuSymbol, delta1: float, logG) -> int:
    """Smallest ``n`` with ``beta0((2^n delta1)^{-2N!} G_N) = 1`` at every sample."""
    nf2 = 2 * factorial(a_mu.N)
    need = (np.max(logG) + np.log(2.0)) / nf2 - np.log(delta1)
    return max(0, int(ceil(need / LN2)))


@dataclass
class PartitionReport:
    n_samples: int
    max_residual: float
    n_levels: int
    max_pieces_per_point: int


def partition_check(a_mu: MuSymbol, delta1: float, samples, widened: bool = True) -> PartitionReport:
    """Sum every piece at the samples and compare against ``a^mu``."""
    s, t, y0, xi = samples
    logG = a_mu.log_gN(s, y0, xi)[0]
    base = a_mu(s, t, y0, xi)
    n_top = top_level(a_mu, delta1, logG)
    total = np.zeros_like(base)
    count = np.zeros(len(s), dtype=int)
    for n in range(n_top + 1):
        for piece in split_anu(a_mu, delta1, n, widened):
            v = base * piece.factor(s, logG)
            total += v
            count += v != 0
    scale = np.maximum(np.abs(base), 1e-300)
    res = float(np.max(np.abs(total - base) / scale))
    return PartitionReport(len(s), res, n_top + 1, int(count.max()))


def split_mu12(piece: AnuPiece, C0: float):
    """Split a piece by the relative size of ``g^0`` against ``G_N^0``.

    Returns two callables ``(a1, a2)`` with ``a1 + a2 = piece`` where
    ``a1 = piece * beta0((2^{-k} g^0)^{2(N-1)!} / (C0^{2N!} G_N^0))``.
    """
    a = piece.parent
    if C0 < 2.0 ** (3 * a.d) * 100.0 * a.B:
        raise InvalidArgument("C0 must be at least 2^{3d} 100 B")
    N = a.N
    e1, e2 = 2 * factorial(N - 1), 2 * factorial(N)

    def weight(s, y0, xi):
        _, lg0, g, _ = a.log_gN(s, y0, xi)
        num = e1 * (_log_abs(g[:, 0]) - a.k * LN2)
        with np.errstate(invalid="ignore"):
            arg = num - e2 * np.log(C0) - lg0
        arg = np.where(np.isneginf(num), -np.inf, arg)
        return beta0_of_log(arg)

    def a1(s, t, y0, xi):
        return piece(s, t, y0, xi) * weight(s, y0, xi)

    def a2(s, t, y0, xi):
        return piece(s, t, y0, xi) * (1.0 - weight(s, y0, xi))

    return a1, a2


# ----------------------------------------------------------------------------
# Y-coordinates and block claims
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class YMap:
    """Linear map ``(tau, xi) -> (z, y_{N+1}, ..., y_d)``.

    ``z = 2^{-k} delta0^{-(N+1)} D^T ybar`` with ``D`` the lifted-moment
    frame at ``-delta0 mu``; the remaining coordinates pair ``xi`` with an
    orthonormal basis of the complement of ``span{gamma^{(j)}(delta0 mu)}``.
    """

    matrix: np.ndarray
    zmat: np.ndarray
    complement: np.ndarray
    N: int

    def __call__(self, tau, xi):
        v = np.concatenate([np.atleast_1d(tau)[..., None], np.atleast_2d(xi)], axis=-1)
        return v @ self.matrix.T

    def from_ybar(self, ybar):
        """The first ``N+1`` coordinates computed from precomputed pairings."""
        return np.asarray(ybar) @ self.zmat.T

    def inverse(self) -> np.ndarray:
        return np.linalg.inv(self.matrix)


def Y_coordinates(lifted: LiftedCurve, mu: float, delta0: float, k: int, N: int) -> YMap:
    """Build the Y-map at ``delta0 mu``.

    Raises
    ------
    FrameDegenerate
        If the pairing vectors ``G^{(j)}(delta0 mu)``, ``j <= N``, are dependent.
    """
    s0 = delta0 * mu
    A = np.stack([lifted.eval_deriv(s0, j) for j in range(N + 1)], axis=0)
    if np.linalg.matrix_rank(A) < N + 1:
        raise FrameDegenerate("G(s), ..., G^{(N)}(s) are dependent")
    D = np.stack([delta0**j * lifted_moment_derivative(-s0, j, N) for j in range(1, N + 2)], axis=1)
    zmat = 2.0 ** (-k) * delta0 ** (-(N + 1)) * D.T
    V = A[1:, 1:].T
    W = _complement_basis(V)
    d = lifted.dim - 1
    Mx = np.zeros((d + 1, d + 1))
    Mx[: N + 1] = zmat @ A
    Mx[N + 1 :, 1:] = W.T
    return YMap(Mx, zmat, W, N)


@dataclass(frozen=True)
class CoverBlock:
    """The block of points whose pairings with the lifted moment curve at ``center`` are controlled.

    A point ``z`` in ``R^{N+1}`` belongs when ``top[0] <= |<c^{(N+1)}, z>| <= top[1]``
    and ``|<c^{(j)}(center), z>| <= delta^{N+1-j}`` for ``j = 1..N``.
    """

    center: float
    delta: float
    N: int
    top: tuple = (0.5, 1.0)

    def pairings(self, z) -> np.ndarray:
        z = np.atleast_2d(z)
        return np.stack([z @ lifted_moment_derivative(self.center, j, self.N) for j in range(1, self.N + 2)], axis=-1)

    def contains(self, z, slack: float = 1e-12) -> np.ndarray:
        P = np.abs(self.pairings(z))
        ok = (P[:, -1] >= self.top[0] * (1 - slack)) & (P[:, -1] <= self.top[1] * (1 + slack))
        for j in range(1, self.N + 1):
            ok &= P[:, j - 1] <= self.delta ** (self.N + 1 - j) * (1 + slack)
        return ok


def reverse_cover(delta: float, N: int) -> list:
    """Blocks centered on the grid ``-1 + j delta/2`` covering ``[-1, 1]``."""
    if not (0 < delta <= 1):
        raise InvalidArgument("delta must lie in (0, 1]")
    count = int(ceil(4.0 / delta)) + 1
    return [CoverBlock(-1.0 + j * delta / 2.0, delta, N) for j in range(count)]


def sample_admissible(rng: np.random.Generator, n: int, delta: float, N: int, shrink: float = 0.75):
    """Points of ``block(s, shrink * delta)`` for uniformly random ``s`` in ``[-1, 1]``.

    Pairings are drawn uniformly in their boxes and the point is recovered
    by solving the (unit lower-triangular) pairing system.
    """
    s = rng.uniform(-1, 1, n)
    out = np.empty((n, N + 1))
    for i in range(n):
        G = np.stack([lifted_moment_derivative(s[i], j, N) for j in range(1, N + 2)], axis=1)
        p = np.empty(N + 1)
        for j in range(1, N + 1):
            p[j - 1] = (shrink * delta) ** (N + 1 - j) * rng.uniform(-1, 1)
        p[N] = rng.choice([-1.0, 1.0]) * rng.uniform(0.5, 1.0)
        out[i] = np.linalg.solve(G.T, p)
    return s, out


@dataclass
class CoverReport:
    n_points: int
    covered_fraction: float
    max_overlap: int
    n_blocks: int


def cover_check(blocks: list, points) -> CoverReport:
    hits = np.zeros(len(points), dtype=int)
    for b in blocks:
        hits += b.contains(points)
    return CoverReport(len(points), float(np.mean(hits > 0)), int(hits.max()), len(blocks))


def claim_constant(a_mu: MuSymbol, delta1: float, n: int) -> float:
    """A priori block dilation ``C`` for pieces at level ``n``.

    Bounds ``|<ybar, c^{(j)}(v)>|`` through the re-expansion in ``g`` with
    ``|v + omega| <= kappa 2^n delta1``, ``kappa = 2 + 3 B M (delta0 + 2^n delta1)^2/(2^n delta1)``
    and ``M`` the sup of ``|gamma^{(N+1)}|`` near ``delta0 mu``.
    """
    N = a_mu.N
    w = 2.0**n * delta1
    ss = a_mu.s0 + np.linspace(-a_mu.delta0 - w, a_mu.delta0 + w, 65)
    M1 = float(np.linalg.norm(a_mu.curve.eval_deriv(ss, N + 1), axis=-1).max())
    MN = float(np.linalg.norm(a_mu.curve.eval_deriv(ss, N), axis=-1).max())
    kappa = 2.0 + 3.0 * a_mu.B * M1 * (a_mu.delta0 + w) ** 2 / w
    C = 0.0
    for j in range(1, N + 1):
        S = 0.0
        for ell in range(j - 1, N + 1):
            if ell == N - 1:
                continue
            c = 2.0 * MN if ell == N else 1.0
            S += c * kappa ** (ell + 1 - j) / factorial(ell + 1 - j)
        C = max(C, S ** (1.0 / (N + 1 - j)))
    return C


def top_range(a_mu: MuSymbol) -> tuple:
    """Range of ``2^{-k}|y^N|`` over the support of ``a^mu``."""
    N = a_mu.N
    ss = a_mu.s0 + np.linspace(-a_mu.delta0, a_mu.delta0, 65)
    M1 = float(np.linalg.norm(a_mu.curve.eval_deriv(ss, N + 1), axis=-1).max())
    MN = float(np.linalg.norm(a_mu.curve.eval_deriv(ss, N), axis=-1).max())
    lo = 0.5 * (1.0 / (2.0 * a_mu.B) - a_mu.delta0 * M1)
    return lo, 2.0 * MN


@dataclass
class ClaimReport:
    n_points: int
    n_pairs: int
    in_block_fraction: float
    C_apriori: float
    C_measured: float
    top_measured: tuple
    top_bounds: tuple
    seed: int | None = None

    def as_dict(self) -> dict:
        return {
            "check_name": "block_assignment",
            "n_samples": self.n_points,
            "pass_fraction": self.in_block_fraction,
            "measured_constants": {
                "C_apriori": self.C_apriori,
                "C_measured": self.C_measured,
                "top_min": self.top_measured[0],
                "top_max": self.top_measured[1],
            },
            "seed": self.seed,
        }


def block_claims(a_mu: MuSymbol, delta1: float, samples, seed: int | None = None) -> ClaimReport:
    """Check that each sample lands in the dilated block of every piece containing it.

    For a point in the support of ``a^mu_{n,nu}``, its Y-coordinate must lie in
    ``block(u, C w, N)`` with ``u = 2^n delta1 nu/delta0``, ``w = 2^n delta1/delta0``
    and the top pairing in :func:`top_range`. Uses the centered pairings.
    """
    N = a_mu.N
    s, t, y0, xi = samples
    logG = a_mu.log_gN(s, y0, xi)[0]
    base = a_mu(s, t, y0, xi)
    ybar = a_mu.ybar(y0, xi)
    Y = Y_coordinates(LiftedCurve(a_mu.curve), a_mu.mu, a_mu.delta0, a_mu.k, N)
    z = Y.from_ybar(ybar)
    lo, hi = top_range(a_mu)
    n_top = top_level(a_mu, delta1, logG)
    pairs = 0
    bad = 0
    C_meas = 0.0
    C_ap = 0.0
    tops = []
    for n in range(n_top + 1):
        C_n = claim_constant(a_mu, delta1, n)
        C_ap = max(C_ap, C_n)
        w = 2.0**n * delta1 / a_mu.delta0
        for piece in split_anu(a_mu, delta1, n):
            on = (base * piece.factor(s, logG)) != 0
            if not np.any(on):
                continue
            u = piece.center / a_mu.delta0
            blk = CoverBlock(u, C_n * w, N, (lo, hi))
            P = np.abs(blk.pairings(z[on]))
            for j in range(1, N + 1):
                C_meas = max(C_meas, float(np.max(P[:, j - 1] ** (1.0 / (N + 1 - j)) / w)))
            tops.append(P[:, -1])
            pairs += int(on.sum())
            bad += int((~blk.contains(z[on], slack=1e-9)).sum())
    tops = np.concatenate(tops) if tops else np.zeros(1)
    frac = 1.0 - bad / pairs if pairs else 0.0
    return ClaimReport(len(s), pairs, frac, C_ap, C_meas, (float(tops.min()), float(tops.max())), (lo, hi), seed)


# ----------------------------------------------------------------------------
# projections
# ----------------------------------------------------------------------------


def projection_P(f: SampledField, curve: Curve, s_tilde: float, delta: float, C0: float, k: int, N: int) -> SampledField:
    """Anisotropic low-pass ``beta0(|Ltilde^{-1} xi| / (C0 2^k))`` applied to every slice."""
    fr = make_frame(curve, s_tilde, delta, N)
    xi = f.grid.xi_points
    r = np.linalg.norm(xi @ np.linalg.inv(fr.Ltilde).T, axis=-1).reshape((f.grid.n_x,) * f.grid.d)
    return apply_multiplier(f, beta0(r / (C0 * 2.0**k)))


# ----------------------------------------------------------------------------
# decoupling
# ----------------------------------------------------------------------------


@dataclass
class DecouplingResult:
    ratio_l2: float
    ratio_lp: float
    n_pieces: int


def _block_mask(block: CoverBlock, grid: GridSpec) -> np.ndarray:
    xi = grid.xi_points.reshape(-1, grid.d)
    return block.contains(xi, slack=0.0).reshape((grid.n_x,) * grid.d)


def decoupling_ratio(pieces, p: float, blocks=None, leak_tol: float = 1e-8) -> DecouplingResult:
    """Ratios ``||sum F||_p / (sum ||F_b||_p^2)^{1/2}`` and ``... / (sum ||F_b||_p^p)^{1/p}``.

    Parameters
    ----------
    pieces : list of SampledField
        Fields on a common grid whose spatial variable is the frequency
        space of the blocks.
    blocks : list of CoverBlock, optional
        Declared spectral supports; validated when given.

    Raises
    ------
    SupportViolation
        If a piece carries more than ``leak_tol`` of its spectral mass
        outside its block.
    """
    if not pieces:
        raise InvalidArgument("need at least one piece")
    if blocks is not None:
        if len(blocks) != len(pieces):
            raise InvalidArgument("one block per piece")
        for F, b in zip(pieces, blocks):
            spec = np.abs(F.as_fourier().values) ** 2
            mask = _block_mask(b, F.grid)[..., None]
            tot = spec.sum()
            if tot > 0 and spec[~np.broadcast_to(mask, spec.shape)].sum() > leak_tol * tot:
                raise SupportViolation("piece spectrum leaks outside its declared block")
    total = pieces[0].as_physical()
    for F in pieces[1:]:
        total = total + F.as_physical()
    num = lp_norm(total, p)
    norms = np.array([lp_norm(F.as_physical(), p) for F in pieces])
    return DecouplingResult(
        float(num / np.sqrt(np.sum(norms**2))),
        float(num / np.sum(norms**p) ** (1.0 / p)),
        len(pieces),
    )


PACKET_POWER = 4


def packet_profile_ft(w):
    """Fourier transform of ``(1 - x^2)_+^4``: ``sqrt(pi) 4! (2/|w|)^{9/2} J_{9/2}(|w|)``."""
    m = PACKET_POWER
    w = np.abs(np.asarray(w, float))
    c = np.sqrt(np.pi) * factorial(m)
    small = w < 1e-3
    ws = np.where(small, 1.0, w)
    val = c * (2.0 / ws) ** (m + 0.5) * special.jv(m + 0.5, ws)
    # series: b(0) (1 - w^2/(2(2m+3)))
    b0 = c / special.gamma(m + 1.5)
    return np.where(small, b0 * (1.0 - w * w / (2.0 * (2 * m + 3))), val)


def packet_spectrum(z, block: CoverBlock) -> np.ndarray:
    """Tensor bump in pairing coordinates filling ``block`` (positive top sheet)."""
    u = block.pairings(z)
    N = block.N
    out = np.ones(len(u))
    for j in range(1, N + 2):
        c, r = _packet_box(block, j)
        x = (u[:, j - 1] - c) / r
        out = out * np.clip(1.0 - x * x, 0.0, None) ** PACKET_POWER
    return out


def _packet_box(block: CoverBlock, j: int):
    N = block.N
    if j == N + 1:
        lo, hi = block.top
        return 0.5 * (lo + hi), 0.5 * (hi - lo)
    return 0.0, block.delta ** (N + 1 - j)


def packet_field(block: CoverBlock, X) -> np.ndarray:
    """``int packet_spectrum(z) e^{i X.z} dz`` in closed form."""
    N = block.N
    G = np.stack([lifted_moment_derivative(block.center, j, N) for j in range(1, N + 2)], axis=1)
    v = np.linalg.solve(G, np.atleast_2d(X).T).T
    out = np.ones(len(v), dtype=complex)
    for j in range(1, N + 2):
        c, r = _packet_box(block, j)
        out = out * r * np.exp(1j * c * v[:, j - 1]) * packet_profile_ft(r * v[:, j - 1])
    return out


class _ProfileSampler:
    """Inverse-CDF sampler for the density proportional to ``|b^(w)|^p``."""

    def __init__(self, p: float, W: float = 200.0, n: int = 400001):
        w = np.linspace(-W, W, n)
        dens = np.abs(packet_profile_ft(w)) ** p
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (dens[1:] + dens[:-1]) * np.diff(w))])
        self.mass = float(cdf[-1])
        self.w = w
        self.cdf = cdf / cdf[-1]

    def draw(self, rng, shape):
        return np.interp(rng.uniform(0, 1, shape), self.cdf, self.w)


def packet_decoupling(
    delta: float,
    N: int,
    p: float,
    n_draws: int = 32,
    samples_per_block: int = 128,
    rng: np.random.Generator | None = None,
    chunk: int = 4096,
) -> np.ndarray:
    """Monte-Carlo ``l^p`` decoupling ratios for random-sign sums of packets.

    One packet per block of :func:`reverse_cover`. ``||sum eps_b F_b||_p^p``
    is estimated by importance sampling from the equal mixture of the
    densities ``|F_b|^p / ||F_b||_p^p``, whose normalizing constants are
    known in closed form. Returns one ratio per sign draw.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    blocks = reverse_cover(delta, N)
    M = len(blocks)
    sampler = _ProfileSampler(p)
    radii = np.array([_packet_box(blocks[0], j)[1] for j in range(1, N + 2)])
    # ||F_b||_p^p = prod_j r_j^{p-1} ||b^||_p^p (the pairing map has unit determinant)
    piece_pp = float(np.prod(radii ** (p - 1)) * sampler.mass ** (N + 1))
    Xs = []
    for b in blocks:
        G = np.stack([lifted_moment_derivative(b.center, j, N) for j in range(1, N + 2)], axis=1)
        v = sampler.draw(rng, (samples_per_block, N + 1)) / radii
        Xs.append(v @ G.T)
    X = np.concatenate(Xs)
    eps = rng.choice([-1.0, 1.0], size=(n_draws, M))
    acc = np.zeros(n_draws)
    for lo in range(0, len(X), chunk):
        Xc = X[lo : lo + chunk]
        F = np.stack([packet_field(b, Xc) for b in blocks], axis=0)
        q = np.mean(np.abs(F) ** p, axis=0) / piece_pp
        acc += np.sum(np.abs(eps @ F) ** p / q, axis=1)
    est = acc / len(X)
    return (est / (M * piece_pp)) ** (1.0 / p)


def packet_grid_pieces(grid: GridSpec, blocks: list, signs=None) -> list:
    """Sampled versions of the packets on a periodic grid (for cross-checks)."""
    xi = grid.xi_points.reshape(-1, grid.d)
    out = []
    from .fields import from_spectrum

    for i, b in enumerate(blocks):
        spec = packet_spectrum(xi, b).reshape((grid.n_x,) * grid.d)
        coef = np.repeat(spec[..., None], grid.n_aux, axis=-1).astype(complex)
        if signs is not None:
            coef = coef * signs[i]
        out.append(from_spectrum(grid, coef))
    return out
