"""Sampled fields on a periodic spatial grid times a non-periodic auxiliary axis.

Spatial samples sit at ``x_j = -P/2 + j P / n_x`` on each axis (period
``P``, default 1). The frequency lattice is ``xi = 2 pi m / P`` with
``m in {-n_x/2, ..., n_x/2 - 1}``; Fourier coefficients use the unitary
DFT so that Parseval reads ``sum |f|^2 = sum |F|^2`` per auxiliary slice.

The auxiliary axis (time ``t`` or parameter ``s``) is integrated with
composite trapezoid weights. Values are stored with shape
``(n_x,) * d + (n_aux,)``.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .bumps import beta, beta0
from .errors import InvalidArgument, StateError

TIME = "time"
PARAM = "param"
PHYSICAL = "physical"
FOURIER = "fourier"


def _is_pow2(n: int) -> bool:
    return n >= 1 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class AuxAxis:
    """Non-periodic quadrature axis with trapezoid weights."""

    kind: str
    lo: float
    hi: float
    n: int

    def __post_init__(self):
        if self.kind not in (TIME, PARAM):
            raise InvalidArgument(f"aux kind must be {TIME!r} or {PARAM!r}")
        if self.n < 2:
            raise InvalidArgument("auxiliary axis needs at least 2 nodes")
        if not self.hi > self.lo:
            raise InvalidArgument("auxiliary interval must have positive length")

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.n)

    @property
    def spacing(self) -> float:
        return (self.hi - self.lo) / (self.n - 1)

    @property
    def weights(self) -> np.ndarray:
        w = np.full(self.n, self.spacing)
        w[0] *= 0.5
        w[-1] *= 0.5
        return w

    @property
    def length(self) -> float:
        return self.hi - self.lo


def time_axis(n: int = 65, lo: float = 1.0, hi: float = 2.0) -> AuxAxis:
    return AuxAxis(TIME, lo, hi, n)


def param_axis(n: int = 129, lo: float = -1.0, hi: float = 1.0) -> AuxAxis:
    return AuxAxis(PARAM, lo, hi, n)


@dataclass(frozen=True)
class GridSpec:
    """Discretization of the spatial torus and the auxiliary axis.

    Parameters
    ----------
    d : int
        Spatial dimension.
    n_x : int
        Samples per spatial axis, a power of two.
    aux : AuxAxis
        The auxiliary quadrature axis.
    period : float
        Side length ``P`` of the spatial box ``[-P/2, P/2)^d``.
    """

    d: int
    n_x: int
    aux: AuxAxis
    period: float = 1.0

    def __post_init__(self):
        if self.d < 1:
            raise InvalidArgument("d must be positive")
        if not _is_pow2(self.n_x):
            raise InvalidArgument("n_x must be a power of two")
        if self.period <= 0:
            raise InvalidArgument("period must be positive")

    @property
    def aux_kind(self) -> str:
        return self.aux.kind

    @property
    def n_aux(self) -> int:
        return self.aux.n

    @property
    def shape(self) -> tuple:
        return (self.n_x,) * self.d + (self.aux.n,)

    @property
    def dx(self) -> float:
        return self.period / self.n_x

    @property
    def cell_volume(self) -> float:
        return self.dx**self.d

    @property
    def x_axis(self) -> np.ndarray:
        return -0.5 * self.period + self.dx * np.arange(self.n_x)

    @property
    def x_origin(self) -> float:
        return -0.5 * self.period

    @property
    def freq_axis(self) -> np.ndarray:
        """Frequencies ``2 pi m / P`` in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_x, d=1.0 / self.n_x) / self.period

    @cached_property
    def xi_points(self) -> np.ndarray:
        """All lattice frequencies, shape ``(n_x**d, d)``, C order matching values."""
        axes = np.meshgrid(*([self.freq_axis] * self.d), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    @cached_property
    def x_points(self) -> np.ndarray:
        axes = np.meshgrid(*([self.x_axis] * self.d), indexing="ij")
        return np.stack([a.ravel() for a in axes], axis=-1)

    @property
    def xi_norm(self) -> np.ndarray:
        """``|xi|`` on the spatial lattice, shape ``(n_x,) * d``."""
        return np.linalg.norm(self.xi_points, axis=-1).reshape((self.n_x,) * self.d)

    @property
    def k_max(self) -> int:
        """Largest ``k`` with ``2^{k+1}`` inside the lattice Nyquist radius."""
        nyq = np.pi * self.n_x / self.period
        return int(np.floor(np.log2(nyq))) - 1

    def with_aux(self, aux: AuxAxis) -> "GridSpec":
        return GridSpec(self.d, self.n_x, aux, self.period)


def annulus_mask(xi_norm, k: int) -> np.ndarray:
    """Membership in ``{2^{k-1} <= |xi| <= 2^{k+1}}``."""
    return (xi_norm >= 2.0 ** (k - 1)) & (xi_norm <= 2.0 ** (k + 1))


@dataclass(frozen=True)
class FrequencyAnnulus:
    k: int

    def contains(self, xi) -> np.ndarray:
        r = np.linalg.norm(np.atleast_2d(xi), axis=-1)
        return annulus_mask(r, self.k)


@dataclass(frozen=True, eq=False)
class SampledField:
    """Complex samples on a :class:`GridSpec` in one of two representations."""

    grid: GridSpec
    values: np.ndarray
    rep: str = PHYSICAL

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.grid.shape:
            raise InvalidArgument(f"values shape {vals.shape} does not match grid {self.grid.shape}")
        if self.rep not in (PHYSICAL, FOURIER):
            raise InvalidArgument(f"unknown representation {self.rep!r}")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    @property
    def spatial_axes(self) -> tuple:
        return tuple(range(self.grid.d))

    def to_fourier(self) -> "SampledField":
        if self.rep != PHYSICAL:
            raise StateError("field is already in Fourier representation")
        F = np.fft.fftn(self.values, axes=self.spatial_axes, norm="ortho")
        return SampledField(self.grid, F, FOURIER)

    def to_physical(self) -> "SampledField":
        if self.rep != FOURIER:
            raise StateError("field is already in physical representation")
        f = np.fft.ifftn(self.values, axes=self.spatial_axes, norm="ortho")
        return SampledField(self.grid, f, PHYSICAL)

    def as_fourier(self) -> "SampledField":
        return self if self.rep == FOURIER else self.to_fourier()

    def as_physical(self) -> "SampledField":
        return self if self.rep == PHYSICAL else self.to_physical()

    def fibers(self) -> np.ndarray:
        """Fourier coefficients as ``(n_x**d, n_aux)``."""
        return self.as_fourier().values.reshape(-1, self.grid.n_aux)

    @classmethod
    def from_fibers(cls, grid: GridSpec, fibers: np.ndarray) -> "SampledField":
        return cls(grid, np.asarray(fibers).reshape(grid.shape), FOURIER)

    def __add__(self, other: "SampledField") -> "SampledField":
        _check_compatible(self, other)
        return SampledField(self.grid, self.values + other.as_rep(self.rep).values, self.rep)

    def __sub__(self, other: "SampledField") -> "SampledField":
        _check_compatible(self, other)
        return SampledField(self.grid, self.values - other.as_rep(self.rep).values, self.rep)

    def __mul__(self, c) -> "SampledField":
        return SampledField(self.grid, self.values * c, self.rep)

    __rmul__ = __mul__

    def as_rep(self, rep: str) -> "SampledField":
        return self.as_physical() if rep == PHYSICAL else self.as_fourier()


def _check_compatible(a: SampledField, b: SampledField):
    if a.grid != b.grid:
        raise InvalidArgument("fields live on different grids")


# ----------------------------------------------------------------------------
# constructors
# ----------------------------------------------------------------------------


def from_function(grid: GridSpec, fn: Callable) -> SampledField:
    """Sample ``fn(x, aux)`` with ``x`` of shape ``(..., d)`` on the grid."""
    axes = np.meshgrid(*([grid.x_axis] * grid.d), grid.aux.nodes, indexing="ij")
    x = np.stack(axes[:-1], axis=-1)
    return SampledField(grid, fn(x, axes[-1]), PHYSICAL)


def from_spectrum(grid: GridSpec, coeff: np.ndarray) -> SampledField:
    """Field ``sum_xi coeff(xi, aux) exp(i xi . x)`` from Fourier-series coefficients.

    ``coeff`` has shape ``grid.shape`` in FFT order. The phase of the box
    origin is applied so that sampling at ``x_j`` is exact.
    """
    coeff = np.asarray(coeff, dtype=np.complex128)
    shift = np.exp(1j * grid.x_origin * grid.xi_points.sum(axis=-1)).reshape((grid.n_x,) * grid.d)
    vals = np.fft.ifftn(coeff * shift[..., None], axes=tuple(range(grid.d))) * grid.n_x**grid.d
    return SampledField(grid, vals, PHYSICAL)


def series_coefficients(field: SampledField) -> np.ndarray:
    """Inverse of :func:`from_spectrum`: Fourier-series coefficients of the samples."""
    g = field.grid
    F = np.fft.fftn(field.as_physical().values, axes=tuple(range(g.d))) / g.n_x**g.d
    shift = np.exp(-1j * g.x_origin * g.xi_points.sum(axis=-1)).reshape((g.n_x,) * g.d)
    return F * shift[..., None]


def random_field(grid: GridSpec, rng: np.random.Generator) -> SampledField:
    vals = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return SampledField(grid, vals, PHYSICAL)


# ----------------------------------------------------------------------------
# norms and multipliers
# ----------------------------------------------------------------------------


def _aux_weights(grid: GridSpec) -> np.ndarray:
    return grid.aux.weights.reshape((1,) * grid.d + (-1,))


def lp_norm(field: SampledField, p: float) -> float:
    """Discrete ``L^p`` norm with cell volume ``dx^d`` times trapezoid weights."""
    if field.rep != PHYSICAL:
        raise StateError("lp_norm needs the physical representation")
    p = float(p)
    if not p >= 1.0:
        raise InvalidArgument("p must lie in [1, inf]")
    a = np.abs(field.values)
    if np.isinf(p):
        return float(a.max())
    w = field.grid.cell_volume * _aux_weights(field.grid)
    return float(np.sum(a**p * w) ** (1.0 / p))


def apply_multiplier(field: SampledField, mult: np.ndarray) -> SampledField:
    """Multiply spatial Fourier coefficients by ``mult`` (shape ``(n_x,)*d`` or full)."""
    F = field.as_fourier().values
    mult = np.asarray(mult)
    if mult.ndim == field.grid.d:
        mult = mult[..., None]
    out = SampledField(field.grid, F * mult, FOURIER)
    return out.as_rep(field.rep)


def sobolev_norm(field: SampledField, p: float, alpha: float, mode: str = "full") -> float:
    """``L^p`` norm after the Bessel multiplier ``(1 + |freq|^2)^{alpha/2}``.

    ``mode="x-only"`` uses spatial frequencies only; ``mode="full"`` also
    includes the DFT frequencies of the auxiliary axis.
    """
    if field.rep != PHYSICAL:
        raise StateError("sobolev_norm needs the physical representation")
    if not float(p) >= 1.0:
        raise InvalidArgument("p must lie in [1, inf]")
    g = field.grid
    if alpha == 0:
        return lp_norm(field, p)
    r2 = g.xi_norm**2
    if mode == "x-only":
        mult = (1.0 + r2) ** (alpha / 2.0)
        return lp_norm(apply_multiplier(field, mult), p)
    if mode != "full":
        raise InvalidArgument("mode must be 'x-only' or 'full'")
    axes = tuple(range(g.d + 1))
    F = np.fft.fftn(field.values, axes=axes)
    tau = 2.0 * np.pi * np.fft.fftfreq(g.n_aux, d=g.aux.spacing)
    mult = (1.0 + r2[..., None] + tau**2) ** (alpha / 2.0)
    vals = np.fft.ifftn(F * mult, axes=axes)
    return lp_norm(SampledField(g, vals, PHYSICAL), p)


def littlewood_paley(field: SampledField, k: int) -> SampledField:
    """Frequency localization by ``beta(2^{-k} |xi|)``; keeps the input representation."""
    return apply_multiplier(field, beta(field.grid.xi_norm / 2.0**k))


def low_pass(field: SampledField) -> SampledField:
    """The remainder ``beta0(|xi|)`` completing the dyadic partition at ``k = 0``."""
    return apply_multiplier(field, beta0(field.grid.xi_norm))


def fourier_support_fraction(field: SampledField, mask: np.ndarray, tol: float = 0.0) -> float:
    """Fraction of nonzero Fourier coefficients (above ``tol``) inside ``mask``."""
    F = np.abs(field.as_fourier().values)
    nz = F > tol
    if mask.ndim == field.grid.d:
        mask = np.broadcast_to(mask[..., None], F.shape)
    total = nz.sum()
    return 1.0 if total == 0 else float((nz & mask).sum() / total)


def inner(f: SampledField, g: SampledField) -> complex:
    """Weighted inner product ``sum f conj(g) dx^d w_aux``."""
    _check_compatible(f, g)
    a = f.as_physical().values
    b = g.as_physical().values
    w = f.grid.cell_volume * _aux_weights(f.grid)
    return complex(np.sum(a * np.conj(b) * w))


# ----------------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------------


def save_field(field: SampledField, path) -> None:
    """Write a JSON header line then little-endian complex64 samples."""
    g = field.grid
    header = {
        "d": g.d,
        "n_x": g.n_x,
        "aux_kind": g.aux_kind,
        "n_aux": g.n_aux,
        "rep": field.rep,
        "aux_lo": g.aux.lo,
        "aux_hi": g.aux.hi,
        "period": g.period,
    }
    with open(path, "wb") as fh:
        fh.write((json.dumps(header, sort_keys=True) + "\n").encode())
        fh.write(field.values.astype("<c8").tobytes())


def load_field(path) -> SampledField:
    with open(path, "rb") as fh:
        header = json.loads(fh.readline().decode())
        raw = fh.read()
    aux = AuxAxis(header["aux_kind"], header.get("aux_lo", 1.0), header.get("aux_hi", 2.0), header["n_aux"])
    grid = GridSpec(header["d"], header["n_x"], aux, header.get("period", 1.0))
    vals = np.frombuffer(raw, dtype="<c8").reshape(grid.shape)
    return SampledField(grid, vals.astype(np.complex128), header["rep"])


def slice_to_csv(field: SampledField, axis: int, index: tuple, path=None) -> str:
    """CSV of one 1-D slice along ``axis`` (spatial index or ``d`` for aux).

    ``index`` fixes the remaining ``d`` indices in axis order.
    """
    g = field.grid
    vals = field.values
    idx = list(index)
    idx.insert(axis, slice(None))
    line = vals[tuple(idx)]
    if axis == g.d:
        coord = g.aux.nodes
        name = g.aux_kind
    else:
        coord = g.x_axis if field.rep == PHYSICAL else np.fft.fftshift(g.freq_axis)
        if field.rep == FOURIER:
            line = np.fft.fftshift(line)
        name = f"x{axis + 1}" if field.rep == PHYSICAL else f"xi{axis + 1}"
    buf = io.StringIO()
    buf.write(f"{name},real,imag,abs\n")
    for c, v in zip(coord, line):
        buf.write(f"{c:.12g},{v.real:.12g},{v.imag:.12g},{abs(v):.12g}\n")
    text = buf.getvalue()
    if path is not None:
        with open(path, "w") as fh:
            fh.write(text)
    return text
