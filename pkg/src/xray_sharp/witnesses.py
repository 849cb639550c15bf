"""Test functions that saturate the Sobolev exponents, and the exponent formulas.

Three families are provided:

* a focusing packet concentrated at scale ``1/lambda`` in ``(x, t)``;
* a random-sign sum of plane waves whose phases are stationary to order
  ``d`` along the curve;
* a separable packet adapted to the anisotropic scales of a finite-type curve.

Where a full grid would be prohibitive, norms are computed exactly from
the separable or Fourier structure instead of by brute-force sampling.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
from scipy.spatial import cKDTree

from .bumps import beta0
from .curves import Curve, LiftedCurve, finite_type_curve
from .errors import FrameDegenerate, GridTooCoarse, InvalidArgument
from .fields import TIME, AuxAxis, GridSpec, SampledField, from_spectrum, series_coefficients
from .xray import CutoffPair

FOCUSING = "focusing"
RANDOM_PHASE = "random_phase"
FINITE_TYPE = "finite_type"


# ----------------------------------------------------------------------------
# exponent table
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ExponentTable:
    d: int
    p: float
    L: int
    p_d: float
    alpha: float
    alpha_tilde: float
    necessary: float


def alpha_of_p(p: float, d: int) -> float:
    """Sharp regularity exponent of the restricted X-ray transform on ``L^p``."""
    pd = 2 * d / (2 * d - 1)
    if p < pd:
        return 1.0 - 1.0 / p
    if p <= 2:
        return 1.0 / (2 * d)
    return 1.0 / (p * d)


def alpha_tilde_of_p(p: float, d: int) -> float:
    """Sharp exponent of the averaging operator for ``p >= 2`` (nan below 2)."""
    if p < 2:
        return float("nan")
    if p <= 2 * (d - 1):
        return (0.5 + 1.0 / p) / d
    return 1.0 / p


def exponent_table(d: int, p: float, L: int | None = None) -> ExponentTable:
    """Evaluate every exponent formula at ``(d, p, L)``; ``L`` defaults to ``d``."""
    L = d if L is None else L
    if d < 2 or p < 1 or L < d:
        raise InvalidArgument("need d >= 2, p >= 1 and L >= d")
    nec = min(1.0 - 1.0 / p, 1.0 / (2 * d), 1.0 / (L * p))
    return ExponentTable(d, float(p), L, 2 * d / (2 * d - 1), alpha_of_p(p, d), alpha_tilde_of_p(p, d), nec)


# ----------------------------------------------------------------------------
# band-limited profiles
# ----------------------------------------------------------------------------


class BandLimitedProfile:
    """Even function ``A int beta0(w/eps) cos(w u) dw`` normalized to be >= 1 on ``[-R, R]``.

    Its Fourier transform ``2 pi A beta0(w/eps)`` is supported in ``[-eps, eps]``.
    """

    def __init__(self, eps: float, R: float, n_quad: int = 2001):
        if eps * R >= np.pi / 2:
            raise InvalidArgument("need eps * R < pi/2 so the profile stays positive on [-R, R]")
        self.eps = float(eps)
        self.R = float(R)
        self._w = np.linspace(-eps, eps, n_quad)
        self._bw = beta0(self._w / eps) * (self._w[1] - self._w[0])
        u = np.linspace(-R, R, 801)
        self.A = 1.0
        self.A = 1.0 / float(self(u).min())

    def __call__(self, u) -> np.ndarray:
        u = np.asarray(u, float)
        flat = u.ravel()
        out = np.empty_like(flat)
        for lo in range(0, len(flat), 4096):
            out[lo : lo + 4096] = np.cos(np.outer(flat[lo : lo + 4096], self._w)) @ self._bw
        return self.A * out.reshape(u.shape)

    def fourier(self, w) -> np.ndarray:
        """``int profile(u) e^{-i w u} du``."""
        return 2.0 * np.pi * self.A * beta0(np.asarray(w, float) / self.eps)


def modulated_profile() -> tuple:
    """``(eta, carrier)``: ``e^{i carrier u} eta(u)`` has spectrum in ``[11/8, 25/8]`` and modulus >= 1 on ``[-1, 1]``."""
    return BandLimitedProfile(7.0 / 8.0, 1.0), 9.0 / 4.0


# ----------------------------------------------------------------------------
# focusing family
# ----------------------------------------------------------------------------


@dataclass
class WitnessSpec:
    family: str
    lam: int
    d: int
    p: float | None = None
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        lam = int(self.lam)
        if lam < 8 or lam & (lam - 1):
            raise InvalidArgument("lambda must be a power of two >= 8")


def _r0(curve: Curve) -> float:
    s = np.linspace(-1, 1, 513)
    return 1.0 + float(np.linalg.norm(curve(s), axis=-1).max())


def witness_focusing(lam: int, grid: GridSpec, curve: Curve, cutoffs: CutoffPair, t0: float = 1.5, n_t: int = 33):
    """``f(x, t) = zeta(lam x) psi0(lam r0 |t - t0|)`` on a time axis local to ``t0``.

    ``zeta(x) = e^{i (9/4) sum x_j} prod eta(x_j)``. The field is built from
    its exact Fourier-series coefficients, so it is band-limited on the grid.

    Returns
    -------
    (SampledField, dict)
        The field and the predicted log2-slopes in ``lam``.
    """
    WitnessSpec(FOCUSING, lam, grid.d)
    if lam > grid.n_x / 4:
        raise GridTooCoarse("lambda exceeds n_x/4")
    if not cutoffs.chi(np.array([t0]))[0] > 0:
        raise InvalidArgument("chi must be positive at t0")
    d = grid.d
    eta, carrier = modulated_profile()
    r0 = _r0(curve)
    half = 1.0 / (lam * r0)
    t_axis = AuxAxis(TIME, t0 - half, t0 + half, n_t)
    g = grid.with_aux(t_axis)
    fr = g.freq_axis
    # Fourier-series coefficient of e^{i c lam x} eta(lam x) on the period
    c1 = eta.fourier(fr / lam - carrier) / (lam * g.period)
    coef = np.ones((g.n_x,) * d)
    for ax in range(d):
        shape = [1] * d
        shape[ax] = g.n_x
        coef = coef * c1.reshape(shape)
    tprof = beta0(lam * r0 * np.abs(t_axis.nodes - t0))
    f = from_spectrum(g, coef[..., None] * tprof)
    preds = {p: focusing_predicted_slopes(d, p) for p in (1.0, 2.0, 4.0)}
    return f, preds


def focusing_predicted_slopes(d: int, p: float) -> dict:
    return {"norm_f": -(d + 1) / p, "norm_Rf": -1.0 - d / p, "critical_alpha": 1.0 - 1.0 / p}


def measure_forward_norms(f: SampledField, curve: Curve, cutoffs: CutoffPair, s_axis: AuxAxis, ps, alphas=()) -> dict:
    """``L^p`` and x-Sobolev norms of the forward transform, one ``s`` slice at a time.

    Returns a dict with ``norm_f[p]``, ``norm_Rf[p]`` and
    ``norm_Rf_sobolev[(p, alpha)]``. Memory stays at one spatial slice.
    """
    g = f.grid
    d = g.d
    coef = series_coefficients(f).reshape(-1, g.n_aux)  # (n_xi, n_t)
    # only lattice frequencies carrying mass enter the contraction
    live = np.nonzero(np.any(coef != 0, axis=1))[0]
    coef = coef[live]
    xi = g.xi_points[live]
    t = g.aux.nodes
    wt = g.aux.weights * cutoffs.chi(t)
    shift = np.exp(1j * g.x_origin * xi.sum(axis=-1))
    bessel = {a: (1.0 + np.sum(xi**2, axis=-1)) ** (a / 2.0) for a in alphas}
    acc = {p: 0.0 for p in ps}
    acc_s = {(p, a): 0.0 for p in ps for a in alphas}
    ws = s_axis.weights
    psi = cutoffs.psi(s_axis.nodes)
    shape = (g.n_x,) * d
    for j, s in enumerate(s_axis.nodes):
        if psi[j] == 0:
            continue
        phase = np.exp(1j * np.outer(xi @ curve(s), t))
        c = psi[j] * (phase * coef) @ wt
        for key, mult in [(None, None)] + [(a, bessel[a]) for a in alphas]:
            cc = c if mult is None else c * mult
            full = np.zeros(g.n_x**d, dtype=complex)
            full[live] = cc * shift
            vals = np.fft.ifftn(full.reshape(shape)) * g.n_x**d
            a = np.abs(vals)
            for p in ps:
                v = float(np.sum(a**p)) * g.cell_volume * ws[j]
                if key is None:
                    acc[p] += v
                else:
                    acc_s[(p, key)] += v
    absf = np.abs(f.as_physical().values)
    wf = g.cell_volume * g.aux.weights
    out = {
        "norm_f": {p: float(np.sum(absf**p * wf) ** (1 / p)) for p in ps},
        "norm_Rf": {p: acc[p] ** (1 / p) for p in ps},
        "norm_Rf_sobolev": {k: v ** (1 / k[0]) for k, v in acc_s.items()},
    }
    return out


# ----------------------------------------------------------------------------
# random-phase family
# ----------------------------------------------------------------------------


def kernel_direction(lifted: LiftedCurve, s: float, d: int) -> np.ndarray:
    """Unit vector orthogonal to ``G(s), ..., G^{(d-1)}(s)``; first nonzero entry positive.

    Raises
    ------
    FrameDegenerate
        If the orthogonal complement is not one-dimensional.
    """
    A = np.stack([lifted.eval_deriv(s, j) for j in range(d)], axis=0)
    _, sv, Vt = np.linalg.svd(A)
    if sv[-1] < 1e-10 * sv[0]:
        raise FrameDegenerate(f"pairing vectors are dependent at s={s}")
    v = Vt[-1]
    nz = np.nonzero(np.abs(v) > 1e-14)[0]
    if v[nz[0]] < 0:
        v = -v
    return v / np.linalg.norm(v)


@dataclass
class RandomPhaseWitness:
    """``f = sum_l eps_l phi(X) e^{i lam Xi_l . X}`` with ``X = (t, x)``.

    ``phi`` is a tensor product of a band-limited profile, so every norm
    below is an exact finite sum over Fourier overlaps.
    """

    lam: int
    d: int
    s_nodes: np.ndarray
    Xi: np.ndarray
    profile: BandLimitedProfile
    rho: float
    seed: int

    def __call__(self, X, signs) -> np.ndarray:
        X = np.atleast_2d(X)
        phi = np.prod(self.profile(X), axis=-1)
        waves = np.exp(1j * self.lam * X @ self.Xi.T)
        return phi * (waves @ signs)

    def _h(self, p: int, w) -> np.ndarray:
        """``int profile(u)^p cos(w u) du`` by quadrature (supported in ``|w| <= p eps``)."""
        cache = self.__dict__.setdefault("_quad", {})
        if p not in cache:
            U = 60.0 / self.profile.eps
            u = np.linspace(-U, U, 24001)
            cache[p] = (u, self.profile(u) ** p * (u[1] - u[0]))
        u, wq = cache[p]
        eps = self.profile.eps
        w = np.asarray(w, float)
        out = np.zeros_like(w)
        live = np.abs(w) < p * eps
        if np.any(live):
            out[live] = np.cos(np.outer(w[live], u)) @ wq
        return out

    def _H(self, p: int, eta) -> np.ndarray:
        eta = np.atleast_2d(eta)
        flat = eta.ravel()
        h = self._h(p, flat).reshape(eta.shape)
        return np.prod(h, axis=-1)

    def norms_pp(self, p: int, signs: np.ndarray) -> np.ndarray:
        """Exact ``||f||_p^p`` for each row of ``signs`` (``p`` in {2, 4})."""
        signs = np.atleast_2d(signs)
        L = len(self.Xi)
        V = self.lam * self.Xi
        if p == 2:
            D = V[:, None, :] - V[None, :, :]
            H = self._H(2, D.reshape(-1, self.d + 1)).reshape(L, L)
            return np.einsum("rl,lm,rm->r", signs, H, signs)
        if p != 4:
            raise InvalidArgument("exact moments implemented for p in {2, 4}")
        # ||f||_4^4 = sum over pairs of difference vectors closer than 4 eps
        il, im = np.meshgrid(np.arange(L), np.arange(L), indexing="ij")
        il, im = il.ravel(), im.ravel()
        diffs = V[il] - V[im]
        tree = cKDTree(diffs)
        pairs = tree.query_pairs(4 * self.profile.eps, p=np.inf, output_type="ndarray")
        coeff = signs[:, il] * signs[:, im]  # (draws, L^2)
        H0 = self._H(4, np.zeros((1, self.d + 1)))[0]
        total = H0 * np.sum(coeff**2, axis=1)
        if len(pairs):
            Hp = self._H(4, diffs[pairs[:, 0]] - diffs[pairs[:, 1]])
            total = total + 2.0 * np.sum(coeff[:, pairs[:, 0]] * coeff[:, pairs[:, 1]] * Hp, axis=1)
        return total

    def draws(self, n: int) -> np.ndarray:
        """Independent sign vectors; draw ``r`` uses the stream ``(seed, r)``."""
        return np.stack(
            [np.random.default_rng([self.seed, r]).choice([-1.0, 1.0], size=len(self.Xi)) for r in range(n)]
        )

    def forward_at(self, curve: Curve, cutoffs: CutoffPair, ell: int, x, s, n_t: int = 257) -> np.ndarray:
        """``FR f_ell(x, s)`` for a single wave by quadrature in ``t``."""
        t = np.linspace(1.0, 2.0, n_t)
        w = np.full(n_t, t[1] - t[0])
        w[[0, -1]] *= 0.5
        x = np.atleast_2d(x)
        s = np.atleast_1d(s)
        G = LiftedCurve(curve).eval(s)  # (ns, d+1)
        out = np.empty((len(x), len(s)), dtype=complex)
        for j in range(len(s)):
            pts = x[:, None, :] + t[None, :, None] * curve(s[j])[None, None, :]
            X = np.concatenate([np.broadcast_to(t[None, :, None], pts.shape[:2] + (1,)), pts], axis=-1)
            phi = np.prod(self.profile(X), axis=-1)
            ph = np.exp(1j * self.lam * t * (G[j] @ self.Xi[ell]))
            val = (phi * ph * cutoffs.chi(t)) @ w
            out[:, j] = cutoffs.psi(s[j]) * np.exp(1j * self.lam * x @ self.Xi[ell][1:]) * val
        return out


def witness_random_phase(
    lam: int,
    rho: float,
    seed: int,
    curve: Curve,
    interval=(-0.8, 0.8),
) -> RandomPhaseWitness:
    """Random-sign plane waves with directions normal to the osculating flag of ``G``.

    Nodes ``s_l`` are ``rho lam^{-1/d}``-spaced in ``interval``.
    """
    WitnessSpec(RANDOM_PHASE, lam, curve.dim)
    d = curve.dim
    lifted = LiftedCurve(curve)
    h = rho * lam ** (-1.0 / d)
    n = int(np.floor((interval[1] - interval[0]) / h)) + 1
    mid = 0.5 * (interval[0] + interval[1])
    s_nodes = mid + (np.arange(n) - 0.5 * (n - 1)) * h
    Xi = np.stack([kernel_direction(lifted, s, d) for s in s_nodes])
    r0 = _r0(curve)
    profile = BandLimitedProfile(np.pi / (8.0 * r0), 3.0 * r0)
    return RandomPhaseWitness(lam, d, s_nodes, Xi, profile, rho, seed)


def random_phase_predicted_slope(d: int, p: float) -> float:
    return p / (2.0 * d)


def taylor_order(lifted: LiftedCurve, s_l: float, Xi: np.ndarray, radii=None) -> float:
    """Fitted power of ``|<Xi, G(s)>|`` against ``|s - s_l|`` for small offsets."""
    radii = np.geomspace(1e-3, 2e-2, 8) if radii is None else radii
    vals = np.abs(lifted.eval(s_l + radii) @ Xi)
    return float(np.polyfit(np.log(radii), np.log(vals), 1)[0])


# ----------------------------------------------------------------------------
# finite-type family
# ----------------------------------------------------------------------------


@dataclass
class FiniteTypeWitness:
    """Separable ``f = prod_{j<d} psi0(lam^{a_j/L} x_j) phi1(lam x_d) chi(t)``."""

    lam: int
    exponents: tuple
    curve: Curve
    cutoffs: CutoffPair
    c: float = 0.1

    @property
    def L(self) -> int:
        return self.exponents[-1]

    def scales(self) -> np.ndarray:
        return np.array([self.lam ** (a / self.L) for a in self.exponents], float)

    def __call__(self, x, t) -> np.ndarray:
        x = np.asarray(x, float)
        sc = self.scales()
        eta, carrier = modulated_profile()
        out = np.ones(x.shape[:-1], dtype=complex)
        for j in range(len(sc) - 1):
            out = out * beta0(sc[j] * x[..., j])
        u = sc[-1] * x[..., -1]
        out = out * np.exp(1j * carrier * u) * eta(u)
        return out * self.cutoffs.chi(np.asarray(t, float))

    def norm_p(self, p: float, n: int = 4001) -> float:
        """Exact product of one-dimensional quadratures."""
        sc = self.scales()
        u = np.linspace(-1, 1, n)
        du = u[1] - u[0]
        total = 1.0
        for j in range(len(sc) - 1):
            total *= np.sum(beta0(u) ** p) * du / sc[j]
        eta, _ = modulated_profile()
        U = np.linspace(-60, 60, 24001)
        total *= np.sum(np.abs(eta(U)) ** p) * (U[1] - U[0]) / sc[-1]
        tt = np.linspace(1, 2, n)
        total *= np.sum(self.cutoffs.chi(tt) ** p) * (tt[1] - tt[0])
        return float(total ** (1 / p))

    def forward_at(self, x, s, n_t: int = 129) -> np.ndarray:
        t = np.linspace(1.0, 2.0, n_t)
        w = np.full(n_t, t[1] - t[0])
        w[[0, -1]] *= 0.5
        x = np.atleast_2d(x)
        out = np.empty((len(x), len(np.atleast_1d(s))), dtype=complex)
        for j, sj in enumerate(np.atleast_1d(s)):
            pts = x[:, None, :] + t[None, :, None] * self.curve(sj)
            out[:, j] = self.cutoffs.psi(sj) * ((self(pts, t[None, :]) * self.cutoffs.chi(t)) @ w)
        return out

    def focusing_minimum(self, n_per_axis: int = 5) -> float:
        """``min |FR f|`` over a grid of the anisotropic box ``E_lambda``."""
        sc = self.scales()
        d = len(sc)
        axes = [np.linspace(-self.c / s, self.c / s, n_per_axis) for s in sc]
        pts = np.stack([a.ravel() for a in np.meshgrid(*axes, indexing="ij")], axis=-1)
        s = np.linspace(-self.c, self.c, n_per_axis) * self.lam ** (-1.0 / self.L)
        return float(np.abs(self.forward_at(pts, s)).min())


def witness_finite_type(lam: int, a_exponents, grid: GridSpec | None, cutoffs: CutoffPair, c: float = 0.1) -> FiniteTypeWitness:
    """Build the finite-type witness; ``grid`` (optional) is checked for resolution."""
    a = tuple(int(x) for x in a_exponents)
    WitnessSpec(FINITE_TYPE, lam, len(a))
    if grid is not None and lam > grid.n_x / 4:
        raise GridTooCoarse("finest scale lambda exceeds n_x/4")
    return FiniteTypeWitness(int(lam), a, finite_type_curve(a), cutoffs, c)


def finite_type_predicted_slopes(a_exponents, p: float) -> dict:
    a = list(a_exponents)
    L = a[-1]
    return {"norm_f": -sum(a) / (L * p), "norm_Rf_lower": -(sum(a) + 1) / (L * p), "critical_alpha": 1.0 / (L * p)}


def witness_csv_rows(rows) -> str:
    """CSV with columns family, lambda, p, alpha, norm_f, norm_Rf, norm_Rf_sobolev, seed."""
    lines = ["family,lambda,p,alpha,norm_f,norm_Rf,norm_Rf_sobolev,seed"]
    for r in rows:
        lines.append(
            ",".join(
                str(r.get(k, ""))
                for k in ("family", "lambda", "p", "alpha", "norm_f", "norm_Rf", "norm_Rf_sobolev", "seed")
            )
        )
    return "\n".join(lines) + "\n"
