"""Restricted X-ray transform, its dual, the symbol operators, and fiber norms.

Everything is computed on the spatial Fourier side, where the operators
act independently on each lattice frequency ``xi``. With ``phi_j = gamma(s_j).xi``:

* forward:  ``F_out[xi, s_j] = psi(s_j) sum_i w_i chi(t_i) exp(+i t_i phi_j) F[xi, t_i]``
* dual:     ``G_out[xi, t_i] = chi(t_i) sum_j w_j psi(s_j) exp(-i t_i phi_j) G[xi, s_j]``
* ``R[a]``:  ``G_out[xi, t_i] = sum_j w_j a(s_j, t_i, xi) exp(-i t_i phi_j) G[xi, s_j]``

Kernel normalization. On a torus of period ``P`` the convolution kernel of
``T[a]`` is ``K(s, t, x) = P^{-d} sum_xi C(s, t, xi) exp(i x.xi)`` where
``C = (2 pi)^{-1} int exp(i t tau) int exp(-i t'(tau + gamma(s).xi)) a dt' dtau``.
This is the lattice form of the continuum constant ``(2 pi)^{-d-1}``:
the lattice spacing ``2 pi / P`` turns ``(2 pi)^{-d} int dxi`` into
``P^{-d} sum_xi``.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import _kernels as kern
from .bumps import compact_bump
from .curves import Curve
from .errors import AliasingError, AnnulusOutOfRange, InvalidArgument
from .fields import (
    FOURIER,
    PARAM,
    TIME,
    AuxAxis,
    GridSpec,
    SampledField,
    annulus_mask,
    param_axis,
    time_axis,
)
from .symbols import STTAUXI, STXI, Symbol


class EmptySupportWarning(UserWarning):
    """The symbol vanishes on every lattice frequency of the grid."""


@dataclass(frozen=True)
class CutoffPair:
    """Smooth cutoffs ``psi`` on ``I`` and ``chi`` on ``[1, 2]``."""

    psi: Callable
    chi: Callable

    def r0(self, curve: Curve, n: int = 513) -> float:
        """``1 + sup |gamma|`` over the parameter interval."""
        s = np.linspace(-1, 1, n)
        return 1.0 + float(np.linalg.norm(curve(s), axis=-1).max())

    def r1(self, curve: Curve, n: int = 513) -> float:
        """``1 + sup |gamma'|`` over the parameter interval."""
        s = np.linspace(-1, 1, n)
        return 1.0 + float(np.linalg.norm(curve.eval_deriv(s, 1), axis=-1).max())


def default_cutoffs() -> CutoffPair:
    """``psi(s) = exp(1 - 1/(1 - s^2))`` and ``chi(t)`` the same bump of ``2t - 3``."""
    return CutoffPair(psi=compact_bump, chi=lambda t: compact_bump(2.0 * np.asarray(t, dtype=float) - 3.0))


def _phases(curve: Curve, xi: np.ndarray, s_nodes: np.ndarray) -> np.ndarray:
    if curve.dim != xi.shape[1]:
        raise InvalidArgument(f"curve dimension {curve.dim} does not match field dimension {xi.shape[1]}")
    return xi @ curve(s_nodes).T


def forward_xray(f: SampledField, curve: Curve, cutoffs: CutoffPair, s_axis: AuxAxis | None = None) -> SampledField:
    """``psi(s) int f(x + t gamma(s), t) chi(t) dt`` on the grid of ``s_axis``."""
    g = f.grid
    if g.aux_kind != TIME:
        raise InvalidArgument("forward transform needs a field on (x, t)")
    s_axis = param_axis() if s_axis is None else s_axis
    xi = g.xi_points
    t = g.aux.nodes
    s = s_axis.nodes
    phase = _phases(curve, xi, s)
    amp_t = (g.aux.weights * cutoffs.chi(t)).astype(np.complex128)
    out = kern.contract_t(phase, t, amp_t, f.fibers(), 1.0)
    out *= cutoffs.psi(s)[None, :]
    return SampledField.from_fibers(g.with_aux(s_axis), out).to_physical()


def dual_xray(f: SampledField, curve: Curve, cutoffs: CutoffPair, t_axis: AuxAxis | None = None) -> SampledField:
    """``chi(t) int f(x - t gamma(s), s) psi(s) ds`` on the grid of ``t_axis``."""
    g = f.grid
    if g.aux_kind != PARAM:
        raise InvalidArgument("dual transform needs a field on (x, s)")
    t_axis = time_axis() if t_axis is None else t_axis
    xi = g.xi_points
    s = g.aux.nodes
    t = t_axis.nodes
    phase = _phases(curve, xi, s)
    amp_s = (g.aux.weights * cutoffs.psi(s)).astype(np.complex128)
    out = kern.contract_s(phase, t, amp_s, f.fibers(), -1.0)
    out *= cutoffs.chi(t)[None, :]
    return SampledField.from_fibers(g.with_aux(t_axis), out).to_physical()


def _eval_stxi(a: Symbol, s, t, xi):
    """``a`` on the product grid: returns shape (M, I, J)."""
    vals = a(s[None, None, :], t[None, :, None], xi[:, None, None, :])
    return np.broadcast_to(vals, (xi.shape[0], t.size, s.size))


def _chunks(n: int, size: int):
    for lo in range(0, n, size):
        yield slice(lo, min(n, lo + size))


def symbol_op_R(a: Symbol, f: SampledField, curve: Curve, t_axis: AuxAxis | None = None, chunk: int = 256) -> SampledField:
    """Apply ``R[a]``: ``(x, s)`` fields to ``(x, t)`` fields, fiber by fiber.

    Emits :class:`EmptySupportWarning` and returns zero when ``a`` vanishes on
    every lattice frequency.
    """
    if a.arity != STXI:
        raise InvalidArgument("R[a] needs an (s, t, xi) symbol")
    g = f.grid
    if g.aux_kind != PARAM:
        raise InvalidArgument("R[a] acts on fields on (x, s)")
    t_axis = time_axis() if t_axis is None else t_axis
    xi_all = g.xi_points
    s = g.aux.nodes
    t = t_axis.nodes
    w_s = g.aux.weights
    G = f.fibers()
    out = np.zeros((xi_all.shape[0], t.size), dtype=np.complex128)
    idx = np.nonzero(a.mask(xi_all))[0]
    any_nonzero = False
    for sl in _chunks(idx.size, chunk):
        rows = idx[sl]
        xi = xi_all[rows]
        A = np.ascontiguousarray(_eval_stxi(a, s, t, xi) * w_s[None, None, :], dtype=np.complex128)
        if not np.any(A):
            continue
        any_nonzero = True
        phase = _phases(curve, xi, s)
        out[rows] = kern.contract_s_general(phase, t, A, np.ascontiguousarray(G[rows]), -1.0)
    res = SampledField.from_fibers(g.with_aux(t_axis), out).to_physical()
    if not any_nonzero:
        warnings.warn(f"symbol {a.label} vanishes on the lattice", EmptySupportWarning)
    return res


def tau_lattice_step(t_axis: AuxAxis, period_factor: float = 4.0) -> float:
    """Spacing of the tau lattice: ``2 pi / (period_factor * |t-interval|)``."""
    return 2.0 * np.pi / (period_factor * t_axis.length)


def _tau_grid(a: Symbol, xi: np.ndarray, dtau: float):
    if a.tau_window is None:
        raise InvalidArgument(f"symbol {a.label} declares no tau support")
    lo, hi = a.tau_window(xi)
    l0 = np.floor(np.asarray(lo) / dtau).astype(int)
    l1 = np.ceil(np.asarray(hi) / dtau).astype(int)
    L = int((l1 - l0).max()) + 1 if xi.shape[0] else 1
    ell = l0[:, None] + np.arange(L)[None, :]
    valid = ell <= l1[:, None]
    return ell * dtau, valid


def _check_nyquist(tau, valid, phase, t_axis: AuxAxis):
    nyq = np.pi / t_axis.spacing
    top = np.abs(tau[:, :, None] + phase[:, None, :])
    worst = float(np.max(np.where(valid[:, :, None], top, 0.0))) if tau.size else 0.0
    if worst > nyq:
        raise AliasingError(
            f"tau + gamma(s).xi reaches {worst:.4g}, beyond the t-grid Nyquist {nyq:.4g}; refine the t axis"
        )


def symbol_op_T(
    a: Symbol,
    f: SampledField,
    curve: Curve,
    t_axis: AuxAxis | None = None,
    period_factor: float = 4.0,
    chunk: int = 8,
) -> SampledField:
    """Apply ``T[a]`` for a symbol ``a(s, t', tau, xi)`` with bounded tau-support.

    The ``(xi, tau)`` spectrum is formed by trapezoid quadrature in ``t'`` and
    ``s`` on a tau lattice of spacing :func:`tau_lattice_step`, then inverted
    by the matching Riemann sum in ``tau``.

    Raises
    ------
    AliasingError
        If ``tau + gamma(s).xi`` exceeds the Nyquist frequency of the t grid.
    """
    if a.arity != STTAUXI:
        raise InvalidArgument("T[a] needs an (s, t, tau, xi) symbol")
    g = f.grid
    if g.aux_kind != PARAM:
        raise InvalidArgument("T[a] acts on fields on (x, s)")
    t_axis = time_axis() if t_axis is None else t_axis
    xi_all = g.xi_points
    s = g.aux.nodes
    w_s = g.aux.weights
    t = t_axis.nodes
    w_t = t_axis.weights
    dtau = tau_lattice_step(t_axis, period_factor)
    G = f.fibers()
    out = np.zeros((xi_all.shape[0], t.size), dtype=np.complex128)
    idx = np.nonzero(a.mask(xi_all))[0]
    for sl in _chunks(idx.size, chunk):
        rows = idx[sl]
        xi = xi_all[rows]
        phase = _phases(curve, xi, s)
        tau, valid = _tau_grid(a, xi, dtau)
        _check_nyquist(tau, valid, phase, t_axis)
        A = a(
            s[None, None, None, :],
            t[None, None, :, None],
            tau[:, :, None, None],
            xi[:, None, None, None, :],
        )
        A = np.broadcast_to(A, (xi.shape[0], tau.shape[1], t.size, s.size))
        A = A * (w_t[:, None] * w_s[None, :])[None, None] * valid[:, :, None, None]
        A = np.ascontiguousarray(A, dtype=np.complex128)
        spec = kern.tau_spectrum(phase, t, np.ascontiguousarray(tau), A, np.ascontiguousarray(G[rows]))
        # tau inversion: (dtau / 2 pi) sum_l exp(i t tau_l) spec[l]
        E = np.exp(1j * t[None, :, None] * tau[:, None, :])
        out[rows] = np.einsum("mil,ml->mi", E, spec) * (dtau / (2.0 * np.pi))
    return SampledField.from_fibers(g.with_aux(t_axis), out).to_physical()


def kernel_coefficients(
    a: Symbol,
    s: float,
    t: float,
    curve: Curve,
    xi: np.ndarray,
    t_axis: AuxAxis | None = None,
    period_factor: float = 4.0,
    chunk: int = 512,
) -> np.ndarray:
    """``C(s, t, xi)`` of the module docstring for each row of ``xi``."""
    t_axis = time_axis() if t_axis is None else t_axis
    tq = t_axis.nodes
    w_t = t_axis.weights
    dtau = tau_lattice_step(t_axis, period_factor)
    out = np.zeros(xi.shape[0], dtype=np.complex128)
    if a.arity == STXI:
        ph = xi @ curve(np.array([s]))[0]
        return a(np.full(xi.shape[0], s), np.full(xi.shape[0], t), xi) * np.exp(-1j * t * ph)
    idx = np.nonzero(a.mask(xi))[0]
    s_arr = np.array([float(s)])
    for sl in _chunks(idx.size, chunk):
        rows = idx[sl]
        x = xi[rows]
        phase = _phases(curve, x, s_arr)
        tau, valid = _tau_grid(a, x, dtau)
        _check_nyquist(tau, valid, phase, t_axis)
        A = a(s_arr[None, None, None, :], tq[None, None, :, None], tau[:, :, None, None], x[:, None, None, None, :])
        A = np.broadcast_to(A, (x.shape[0], tau.shape[1], tq.size, 1))
        A = np.ascontiguousarray(A * w_t[None, None, :, None] * valid[:, :, None, None], dtype=np.complex128)
        spec = kern.tau_spectrum(phase, tq, np.ascontiguousarray(tau), A, np.ones((x.shape[0], 1), np.complex128))
        out[rows] = (np.exp(1j * t * tau) * spec).sum(axis=1) * (dtau / (2.0 * np.pi))
    return out


def kernel_eval(
    a: Symbol,
    s: float,
    t: float,
    curve: Curve,
    grid: GridSpec,
    x_points: np.ndarray | None = None,
    t_axis: AuxAxis | None = None,
    method: str = "auto",
    period_factor: float = 4.0,
) -> np.ndarray:
    """Convolution kernel ``K[a](s, t, x)`` of ``T[a]`` (or ``R[a]``) on the torus.

    Parameters
    ----------
    x_points : array (P, d), optional
        Evaluation points; defaults to the spatial grid (returned with shape
        ``(n_x,) * d``).
    method : {"auto", "direct", "fft"}
        ``direct`` sums the plane waves explicitly; ``fft`` uses the inverse
        DFT (grid only). ``auto`` picks direct for small problems.
    """
    xi = grid.xi_points
    C = kernel_coefficients(a, s, t, curve, xi, t_axis, period_factor)
    scale = grid.period ** (-grid.d)
    nz = np.nonzero(C)[0]
    on_grid = x_points is None
    pts = grid.x_points if on_grid else np.atleast_2d(np.asarray(x_points, dtype=float))
    if method == "auto":
        method = "direct" if (not on_grid or nz.size * pts.shape[0] <= 2e7) else "fft"
    if method == "direct":
        K = kern.plane_wave_sum(np.ascontiguousarray(pts), np.ascontiguousarray(xi[nz]), np.ascontiguousarray(C[nz])) * scale
    elif method == "fft":
        if not on_grid:
            raise InvalidArgument("fft evaluation only works on the grid")
        coeff = C.reshape((grid.n_x,) * grid.d)
        shift = np.exp(1j * grid.x_origin * xi.sum(axis=-1)).reshape(coeff.shape)
        K = np.fft.ifftn(coeff * shift) * grid.n_x**grid.d * scale
        return K
    else:
        raise InvalidArgument(f"unknown method {method!r}")
    return K.reshape((grid.n_x,) * grid.d) if on_grid else K


def kernel_l1(K: np.ndarray, grid: GridSpec) -> float:
    """``sum |K| dx^d`` over the grid."""
    return float(np.abs(K).sum() * grid.cell_volume)


def T_sup_norm(
    a: Symbol,
    curve: Curve,
    grid: GridSpec,
    s_axis: AuxAxis,
    t_values,
    t_axis: AuxAxis | None = None,
) -> tuple[float, float]:
    """``||T[a]||_{L^inf -> L^inf}`` on the grid: ``max_t sum_j w_j ||K(s_j, t, .)||_1``.

    This is attained by ``f(y, s) = conj(sign K(s, t*, x* - y))``. Returns the
    norm and the maximizing ``t``.
    """
    best, best_t = 0.0, None
    for t in np.atleast_1d(t_values):
        acc = 0.0
        for s, w in zip(s_axis.nodes, s_axis.weights):
            if w == 0:
                continue
            acc += w * kernel_l1(kernel_eval(a, s, t, curve, grid, t_axis=t_axis, method="fft"), grid)
        if acc > best:
            best, best_t = acc, float(t)
    return best, best_t


# ----------------------------------------------------------------------------
# fiber matrices and the L^2 operator norm
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class FiberMatrix:
    """Quadrature-weighted matrix of ``R[a]`` on one frequency fiber, shape (n_t, n_s)."""

    xi: np.ndarray
    M: np.ndarray


def fiber_matrix(
    a: Symbol,
    xi,
    curve: Curve,
    s_axis: AuxAxis | None = None,
    t_axis: AuxAxis | None = None,
    weighting: str = "full",
) -> FiberMatrix:
    """Entries ``exp(-i t_i gamma(s_j).xi) a(s_j, t_i, xi)`` times weights.

    ``weighting="full"`` multiplies by ``w_i w_j``; ``"sqrt"`` by
    ``sqrt(w_i w_j)``, whose top singular value is the fiber's L^2 norm.
    """
    s_axis = param_axis() if s_axis is None else s_axis
    t_axis = time_axis() if t_axis is None else t_axis
    xi = np.atleast_2d(np.asarray(xi, dtype=float))
    s, t = s_axis.nodes, t_axis.nodes
    A = _eval_stxi(a, s, t, xi)[0]
    E = np.exp(-1j * t[:, None] * (curve(s) @ xi[0])[None, :])
    if weighting == "full":
        W = t_axis.weights[:, None] * s_axis.weights[None, :]
    elif weighting == "sqrt":
        W = np.sqrt(t_axis.weights[:, None] * s_axis.weights[None, :])
    else:
        raise InvalidArgument("weighting must be 'full' or 'sqrt'")
    return FiberMatrix(xi[0], A * E * W)


def fiber_norms(
    a: Symbol,
    curve: Curve,
    xi: np.ndarray,
    s_axis: AuxAxis,
    t_axis: AuxAxis,
    chunk: int = 1024,
) -> np.ndarray:
    """Top singular value of the ``sqrt``-weighted fiber matrix for each ``xi``."""
    s, t = s_axis.nodes, t_axis.nodes
    W = np.sqrt(t_axis.weights[:, None] * s_axis.weights[None, :])
    out = np.zeros(xi.shape[0])
    for sl in _chunks(xi.shape[0], chunk):
        x = xi[sl]
        A = np.ascontiguousarray(_eval_stxi(a, s, t, x) * W[None], dtype=np.complex128)
        out[sl] = kern.fiber_top_sv(_phases(curve, x, s), t, A)
    return out


def l2_fiber_opnorm(
    a: Symbol,
    k: int,
    curve: Curve,
    n_x: int,
    s_axis: AuxAxis | None = None,
    t_axis: AuxAxis | None = None,
    period: float = 1.0,
    return_argmax: bool = False,
):
    """Discrete ``L^2(x, s) -> L^2(x, t)`` norm of ``R[a]`` for ``a`` supported in ``A_k``.

    The operator is block diagonal over lattice frequencies, so the norm is
    the largest fiber singular value over ``xi`` in the annulus.

    Raises
    ------
    AnnulusOutOfRange
        If the annulus exceeds the lattice or contains no lattice point.
    """
    s_axis = param_axis() if s_axis is None else s_axis
    t_axis = time_axis() if t_axis is None else t_axis
    grid = GridSpec(curve.dim, n_x, s_axis, period)
    if k > grid.k_max:
        raise AnnulusOutOfRange(f"k={k} exceeds k_max={grid.k_max} for n_x={n_x}")
    xi_all = grid.xi_points
    sel = annulus_mask(np.linalg.norm(xi_all, axis=-1), k) & a.mask(xi_all)
    if not np.any(sel):
        raise AnnulusOutOfRange(f"no lattice frequency in the annulus k={k}")
    xi = xi_all[sel]
    norms = fiber_norms(a, curve, xi, s_axis, t_axis)
    i = int(np.argmax(norms))
    if return_argmax:
        return float(norms[i]), xi[i]
    return float(norms[i])


# ----------------------------------------------------------------------------
# physical-space oracles (cross-validation only)
# ----------------------------------------------------------------------------


def _dirichlet_1d(z: np.ndarray, n: int, period: float) -> np.ndarray:
    """``(1/n) sum_{m=-n/2}^{n/2-1} exp(2 pi i m z / P)``."""
    m = np.arange(-n // 2, n // 2)
    return np.exp(2j * np.pi * z[..., None] * m / period).mean(axis=-1)


def trig_interpolate(values: np.ndarray, grid: GridSpec, points: np.ndarray) -> np.ndarray:
    """Trigonometric interpolant of spatial samples ``values`` at ``points`` (P, d).

    ``values`` has shape ``(n_x,) * d``. Uses the separable Dirichlet kernel,
    not the FFT.
    """
    out = values.astype(np.complex128)
    x = grid.x_axis
    # contract axis by axis: D(p_c - x_b)
    res = None
    P = points.shape[0]
    D = [_dirichlet_1d(points[:, c][:, None] - x[None, :], grid.n_x, grid.period) for c in range(grid.d)]
    if grid.d == 1:
        return D[0] @ out
    if grid.d == 2:
        return np.einsum("pa,pb,ab->p", D[0], D[1], out)
    if grid.d == 3:
        return np.einsum("pa,pb,pc,abc->p", D[0], D[1], D[2], out)
    raise InvalidArgument("oracle supports d <= 3")


def forward_xray_oracle(f: SampledField, curve: Curve, cutoffs: CutoffPair, s_axis: AuxAxis) -> np.ndarray:
    """Physical-space quadrature of the forward transform via trigonometric interpolation."""
    g = f.grid
    vals = f.as_physical().values
    xs = g.x_points
    t, w_t = g.aux.nodes, g.aux.weights
    out = np.zeros((xs.shape[0], s_axis.n), dtype=np.complex128)
    for j, s in enumerate(s_axis.nodes):
        gam = curve(np.array([s]))[0]
        acc = np.zeros(xs.shape[0], dtype=np.complex128)
        for i, ti in enumerate(t):
            c = w_t[i] * cutoffs.chi(ti)
            if c == 0:
                continue
            acc += c * trig_interpolate(vals[..., i], g, xs + ti * gam)
        out[:, j] = cutoffs.psi(s) * acc
    return out.reshape((g.n_x,) * g.d + (s_axis.n,))


def dual_xray_oracle(f: SampledField, curve: Curve, cutoffs: CutoffPair, t_axis: AuxAxis) -> np.ndarray:
    """Physical-space quadrature of the dual transform via trigonometric interpolation."""
    g = f.grid
    vals = f.as_physical().values
    xs = g.x_points
    s, w_s = g.aux.nodes, g.aux.weights
    out = np.zeros((xs.shape[0], t_axis.n), dtype=np.complex128)
    for i, t in enumerate(t_axis.nodes):
        acc = np.zeros(xs.shape[0], dtype=np.complex128)
        for j, sj in enumerate(s):
            c = w_s[j] * cutoffs.psi(sj)
            if c == 0:
                continue
            gam = curve(np.array([sj]))[0]
            acc += c * trig_interpolate(vals[..., j], g, xs - t * gam)
        out[:, i] = cutoffs.chi(t) * acc
    return out.reshape((g.n_x,) * g.d + (t_axis.n,))


def dense_operator_matrix(a: Symbol, curve: Curve, grid: GridSpec, t_axis: AuxAxis) -> np.ndarray:
    """Dense physical-space matrix of ``R[a]`` from samples on ``grid`` (x, s) to (x, t).

    Entry ``[(x_a, t_i), (x_b, s_j)] = w_j K_ij(x_a - x_b)`` with
    ``K_ij(z) = n^{-d} sum_m a(s_j, t_i, xi_m) exp(i xi_m (z - t_i gamma(s_j)))``,
    built by explicit summation over lattice modes.
    """
    xs = grid.x_points
    xi = grid.xi_points
    s, w_s = grid.aux.nodes, grid.aux.weights
    t = t_axis.nodes
    nX = xs.shape[0]
    diff = xs[:, None, :] - xs[None, :, :]
    mat = np.zeros((nX, t.size, nX, s.size), dtype=np.complex128)
    for j, sj in enumerate(s):
        gam = curve(np.array([sj]))[0]
        for i, ti in enumerate(t):
            amp = np.broadcast_to(a(np.full(xi.shape[0], sj), np.full(xi.shape[0], ti), xi), (xi.shape[0],))
            if not np.any(amp):
                continue
            phase_shift = np.exp(-1j * ti * (xi @ gam)) * amp / nX
            Kz = np.exp(1j * np.einsum("abd,md->abm", diff, xi)) @ phase_shift
            mat[:, i, :, j] = w_s[j] * Kz
    return mat.reshape(nX * t.size, nX * s.size)


def dense_opnorm(a: Symbol, curve: Curve, grid: GridSpec, t_axis: AuxAxis) -> float:
    """Largest singular value of the dense operator between weighted L^2 spaces."""
    mat = dense_operator_matrix(a, curve, grid, t_axis)
    nX = grid.n_x**grid.d
    wt = np.tile(t_axis.weights, nX)
    ws = np.tile(grid.aux.weights, nX)
    scaled = np.sqrt(wt)[:, None] * mat / np.sqrt(ws)[None, :]
    return float(np.linalg.svd(scaled, compute_uv=False)[0])


# ----------------------------------------------------------------------------
# kernel uniformity across dyadic scales
# ----------------------------------------------------------------------------


@dataclass
class KernelSweep:
    """Per-scale kernel sizes for a family of class symbols.

    ``l1[k]`` holds the sampled ``||K(s, t, .)||_1`` values and ``sup_ratio[k]``
    the ratio ``||T[a]||_{inf -> inf} / delta``.
    """

    ks: list
    l1: dict
    sup_ratio: dict

    @property
    def l1_spread(self) -> float:
        vals = np.concatenate([np.asarray(v) for v in self.l1.values()])
        return float(vals.max() / vals.min())

    @property
    def sup_spread(self) -> float:
        vals = np.array(list(self.sup_ratio.values()))
        return float(vals.max() / vals.min())


def kernel_class_sweep(
    curve: Curve,
    ks,
    delta: float = 0.5,
    s0: float = 0.0,
    N: int = 2,
    n_x: int = 128,
    n_t: int = 129,
    n_s: int = 17,
    s_samples=(-0.5, 0.0, 0.5),
    t_samples=(1.25, 1.5, 1.75),
    t_sup=(1.5,),
) -> KernelSweep:
    """Measure kernel ``L^1`` norms of :func:`model_class_symbol` for each ``k``.

    The torus period is ``n_x 2^{-k}``, so every scale sees the same rescaled
    frequency lattice (Nyquist ``pi 2^k``); a fixed period would undersample
    the angular window at small ``k``.
    ``s_samples`` are given in units of ``delta`` around ``s0``.
    """
    from .symbols import model_class_symbol

    t_axis = time_axis(n_t)
    s_axis = param_axis(n_s, s0 - delta, s0 + delta)
    l1, sup = {}, {}
    for k in ks:
        a = model_class_symbol(curve, int(k), delta, s0, N)
        grid = GridSpec(curve.dim, n_x, param_axis(n_s), n_x * 2.0 ** (-int(k)))
        vals = []
        for u in s_samples:
            for t in t_samples:
                K = kernel_eval(a, s0 + u * delta, t, curve, grid, t_axis=t_axis, method="fft")
                vals.append(kernel_l1(K, grid))
        l1[int(k)] = vals
        norm, _ = T_sup_norm(a, curve, grid, s_axis, t_sup, t_axis)
        sup[int(k)] = norm / delta
    return KernelSweep([int(k) for k in ks], l1, sup)
