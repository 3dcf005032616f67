"""Periodic phase-space grids, sampled symbols and spectral calculus on them.

The position box ``[x_c - L/2, x_c + L/2)`` carries ``N`` nodes with spacing
``dx = L/N``.  The momentum axis is the dual lattice of the position grid
under the semiclassical Fourier transform, so ``dxi = 2*pi*h/L`` and
``dx * dxi * N == 2*pi*h``.  Every symbol is stored as an ``(N, N)`` array
indexed ``[x-index, xi-index]``.

Symbols may carry an explicit polynomial part (coefficients of
``x**i * xi**j``).  The sampled values always contain the full function;
the polynomial part is differentiated exactly and only the bounded
remainder goes through the FFT.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping

import numpy as np
from scipy import fft as sfft

__all__ = [
    "PhaseSpaceGrid",
    "Symbol",
    "make_grid",
    "sample",
    "spectral_derivative",
    "poisson_bracket",
    "sobolev_norm",
    "l2_norm",
    "l2_inner",
    "trig_interpolate",
    "evaluate",
]

AXES = {"x": 0, "xi": 1}


@dataclass(frozen=True)
class PhaseSpaceGrid:
    """Uniform periodic grid on a phase-space box (one degree of freedom).

    The momentum window is aligned with the dual lattice: ``xi_center`` is an
    integer multiple of ``dxi`` so that every grid Fourier mode of the position
    grid corresponds to exactly one momentum node.
    """

    n_points: int
    x_center: float
    x_halfwidth: float
    xi_center: float
    h: float
    n: int = 1

    @property
    def N(self) -> int:
        return self.n_points

    @property
    def L(self) -> float:
        return 2.0 * self.x_halfwidth

    @property
    def dx(self) -> float:
        return self.L / self.n_points

    @property
    def dxi(self) -> float:
        return 2.0 * np.pi * self.h / self.L

    @property
    def xi_width(self) -> float:
        return self.n_points * self.dxi

    @property
    def cell(self) -> float:
        """Quadrature weight ``dx * dxi`` of one phase-space node."""
        return self.dx * self.dxi

    @cached_property
    def x(self) -> np.ndarray:
        return self.x_center - 0.5 * self.L + self.dx * np.arange(self.n_points)

    @cached_property
    def xi(self) -> np.ndarray:
        half = self.n_points // 2
        return self.xi_center + self.dxi * (np.arange(self.n_points) - half)

    @cached_property
    def mesh(self) -> tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.x, self.xi, indexing="ij")

    @cached_property
    def x_wavenumbers(self) -> np.ndarray:
        """Angular frequencies conjugate to ``x`` in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    @cached_property
    def xi_wavenumbers(self) -> np.ndarray:
        """Angular frequencies conjugate to ``xi`` in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, d=self.dxi)

    @cached_property
    def momentum_multiplier(self) -> np.ndarray:
        """Eigenvalue of ``hD_x`` on the FFT mode ``q`` (values lie in the xi window)."""
        N = self.n_points
        s0 = int(round(self.xi[0] / self.dxi))
        q = np.arange(N)
        s = s0 + np.mod(q - s0, N)
        return s * self.dxi

    def same_as(self, other: "PhaseSpaceGrid") -> bool:
        return self is other or self == other

    def describe(self) -> dict:
        return {
            "n_points": self.n_points,
            "x_center": self.x_center,
            "x_halfwidth": self.x_halfwidth,
            "xi_center": self.xi_center,
            "h": self.h,
            "dx": self.dx,
            "dxi": self.dxi,
        }


def make_grid(n_points: int, x_center: float = 0.0, x_halfwidth: float = 4.0,
              xi_center: float = 0.0, h: float = 1.0) -> PhaseSpaceGrid:
    """Build a grid satisfying ``dx * dxi * N = 2*pi*h``.

    ``xi_center`` is snapped to the nearest multiple of ``dxi``.
    """
    if int(n_points) != n_points or n_points <= 0 or n_points % 2:
        raise ValueError(f"even point count required, got {n_points}")
    if not x_halfwidth > 0:
        raise ValueError(f"x_halfwidth must be positive, got {x_halfwidth}")
    if not 0 < h <= 1:
        raise ValueError(f"h must lie in (0, 1], got {h}")
    dxi = 2.0 * np.pi * h / (2.0 * x_halfwidth)
    xi_center = float(np.round(xi_center / dxi) * dxi)
    return PhaseSpaceGrid(int(n_points), float(x_center), float(x_halfwidth), xi_center, float(h))


# -- polynomial parts ---------------------------------------------------------

Poly = Mapping[tuple[int, int], complex]


def _clean(poly: Poly) -> dict:
    return {k: v for k, v in poly.items() if v != 0}


def poly_eval(poly: Poly, x, xi):
    out = np.zeros(np.broadcast(x, xi).shape, dtype=complex)
    for (i, j), c in poly.items():
        out = out + c * x**i * xi**j
    return out


def poly_add(p: Poly, q: Poly, scale: complex = 1.0) -> dict:
    out = dict(p)
    for k, v in q.items():
        out[k] = out.get(k, 0) + scale * v
    return _clean(out)


def poly_mul(p: Poly, q: Poly) -> dict:
    out: dict = {}
    for (i1, j1), c1 in p.items():
        for (i2, j2), c2 in q.items():
            k = (i1 + i2, j1 + j2)
            out[k] = out.get(k, 0) + c1 * c2
    return _clean(out)


def poly_derivative(poly: Poly, axis: int, order: int = 1) -> dict:
    out = dict(poly)
    for _ in range(order):
        nxt = {}
        for (i, j), c in out.items():
            e = (i, j)[axis]
            if e == 0:
                continue
            key = (i - 1, j) if axis == 0 else (i, j - 1)
            nxt[key] = nxt.get(key, 0) + c * e
        out = nxt
    return _clean(out)


def poly_conj(poly: Poly) -> dict:
    return {k: np.conj(v) for k, v in poly.items()}


# -- symbols ------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Symbol:
    """A function on phase space sampled on ``grid``.

    ``values`` holds the full samples.  ``poly`` optionally records the
    polynomial part contained in ``values``; the rest is assumed to be
    effectively periodic on the box.
    """

    grid: PhaseSpaceGrid
    values: np.ndarray
    poly: Mapping[tuple[int, int], complex] = field(default_factory=dict)

    def __post_init__(self):
        N = self.grid.n_points
        vals = np.asarray(self.values)
        if vals.shape != (N, N):
            raise ValueError(f"symbol shape {vals.shape} does not match grid ({N}, {N})")
        if not np.all(np.isfinite(vals)):
            raise ValueError("symbol values must be finite")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "poly", _clean(self.poly))

    @classmethod
    def from_parts(cls, grid: PhaseSpaceGrid, poly: Poly | None = None,
                   remainder: Callable | None = None) -> "Symbol":
        X, XI = grid.mesh
        poly = _clean(poly or {})
        vals = poly_eval(poly, X, XI)
        if remainder is not None:
            vals = vals + sample(remainder, grid).values
        if np.iscomplexobj(vals) and not np.any(vals.imag):
            vals = vals.real
        return cls(grid, vals, poly)

    @property
    def remainder(self) -> np.ndarray:
        if not self.poly:
            return self.values
        X, XI = self.grid.mesh
        return self.values - poly_eval(self.poly, X, XI)

    @property
    def is_real(self) -> bool:
        return bool(np.all(np.abs(np.imag(self.values)) <= 1e-12 * max(1.0, np.abs(self.values).max())))

    def conj(self) -> "Symbol":
        return Symbol(self.grid, np.conj(self.values), poly_conj(self.poly))

    def _check(self, other: "Symbol"):
        if not self.grid.same_as(other.grid):
            raise ValueError("grid mismatch between symbols")

    def __add__(self, other):
        if isinstance(other, Symbol):
            self._check(other)
            return Symbol(self.grid, self.values + other.values, poly_add(self.poly, other.poly))
        return Symbol(self.grid, self.values + other, poly_add(self.poly, {(0, 0): other}))

    __radd__ = __add__

    def __neg__(self):
        return Symbol(self.grid, -self.values, {k: -v for k, v in self.poly.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Symbol):
            self._check(other)
            return Symbol(self.grid, self.values * other.values, poly_mul(self.poly, other.poly))
        return Symbol(self.grid, self.values * other, {k: v * other for k, v in self.poly.items()})

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / scalar)

    def with_values(self, values) -> "Symbol":
        """Same grid, new samples, no polynomial part."""
        return Symbol(self.grid, values)


def sample(f: Callable, grid: PhaseSpaceGrid) -> Symbol:
    """Evaluate ``f(x, xi)`` on every node of ``grid``."""
    X, XI = grid.mesh
    vals = np.broadcast_to(np.asarray(f(X, XI)), X.shape).copy()
    bad = ~np.isfinite(vals)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise ValueError(f"non-finite value {vals[i, j]} at node (x={X[i, j]:.6g}, xi={XI[i, j]:.6g})")
    return Symbol(grid, vals)


# -- spectral calculus --------------------------------------------------------

def _multiplier(grid: PhaseSpaceGrid, axis: int, order: int) -> np.ndarray:
    k = grid.x_wavenumbers if axis == 0 else grid.xi_wavenumbers
    m = (1j * k) ** order
    if order % 2:
        m = m.copy()
        m[grid.n_points // 2] = 0.0
    return m


def spectral_array_derivative(values: np.ndarray, grid: PhaseSpaceGrid, axis: int,
                              order: int = 1) -> np.ndarray:
    """Fourier-multiplier derivative of a periodic sample array."""
    if order == 0:
        return values
    m = _multiplier(grid, axis, order)
    shape = (-1, 1) if axis == 0 else (1, -1)
    out = sfft.ifft(sfft.fft(values, axis=axis) * m.reshape(shape), axis=axis)
    if np.isrealobj(values):
        out = out.real
    return out


def spectral_derivative(a: Symbol, axis: str | int, order: int = 1) -> Symbol:
    """Derivative along ``"x"`` or ``"xi"``; polynomial parts are differentiated exactly."""
    ax = AXES[axis] if isinstance(axis, str) else int(axis)
    if order < 0 or int(order) != order:
        raise ValueError("order must be a nonnegative integer")
    if order == 0:
        return a
    rem = spectral_array_derivative(a.remainder, a.grid, ax, order)
    if not a.poly:
        return Symbol(a.grid, rem)
    dpoly = poly_derivative(a.poly, ax, order)
    X, XI = a.grid.mesh
    vals = rem + poly_eval(dpoly, X, XI)
    if np.isrealobj(rem) and all(np.imag(c) == 0 for c in dpoly.values()):
        vals = vals.real
    return Symbol(a.grid, vals, dpoly)


def poisson_bracket(f: Symbol, g: Symbol) -> Symbol:
    """``{f, g} = H_f g = d_xi f d_x g - d_x f d_xi g``."""
    f._check(g)
    return (spectral_derivative(f, "xi") * spectral_derivative(g, "x")
            - spectral_derivative(f, "x") * spectral_derivative(g, "xi"))


def l2_inner(a: Symbol, b: Symbol) -> complex:
    a._check(b)
    return complex(np.vdot(b.values, a.values) * a.grid.cell)


def l2_norm(a: Symbol | np.ndarray, grid: PhaseSpaceGrid | None = None) -> float:
    """Quadrature norm ``sqrt(sum |a|^2 dx dxi)``."""
    if isinstance(a, Symbol):
        grid, vals = a.grid, a.values
    else:
        vals = a
    return float(np.sqrt(np.sum(np.abs(vals) ** 2) * grid.cell))


def sobolev_norm(a: Symbol | np.ndarray, s: float, epsilon: float,
                 grid: PhaseSpaceGrid | None = None) -> float:
    """Semiclassical Sobolev norm with weight ``(1 + |eps*zeta|^2)^(s/2)``.

    Normalised so that ``s = 0`` gives :func:`l2_norm`.
    """
    if s < 0:
        raise ValueError("s must be nonnegative")
    if not epsilon > 0:
        raise ValueError("epsilon must be positive")
    if isinstance(a, Symbol):
        grid, vals = a.grid, a.values
    else:
        vals = a
    if s == 0:
        return l2_norm(vals, grid)
    N = grid.n_points
    c = sfft.fft2(vals) / N**2
    z2 = grid.x_wavenumbers[:, None] ** 2 + grid.xi_wavenumbers[None, :] ** 2
    w = (1.0 + epsilon**2 * z2) ** s
    return float(np.sqrt(np.sum(w * np.abs(c) ** 2) * N**2 * grid.cell))


def _axis_basis(grid: PhaseSpaceGrid, axis: int, points) -> np.ndarray:
    """Rows evaluate the trigonometric interpolant along ``axis`` at ``points``."""
    N = grid.n_points
    k = grid.x_wavenumbers if axis == 0 else grid.xi_wavenumbers
    origin = grid.x[0] if axis == 0 else grid.xi[0]
    s = np.asarray(points, dtype=float).reshape(-1, 1) - origin
    B = np.exp(1j * s * k[None, :])
    B[:, N // 2] = np.cos(s[:, 0] * k[N // 2])
    return B


def trig_interpolate(values: np.ndarray, grid: PhaseSpaceGrid, x, xi) -> np.ndarray:
    """Evaluate the periodic trigonometric interpolant of ``values`` at points ``(x, xi)``.

    ``x`` and ``xi`` are broadcast against each other; the Nyquist modes use
    the symmetric cosine form so that real samples give a real interpolant.
    """
    x, xi = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
    c = sfft.fft2(values) / grid.n_points**2
    Bx = _axis_basis(grid, 0, x.ravel())
    Bxi = _axis_basis(grid, 1, xi.ravel())
    out = np.einsum("pm,mk,pk->p", Bx, c, Bxi).reshape(x.shape)
    return out.real if np.isrealobj(values) else out


def evaluate(a: Symbol, nx: int, nxi: int, x, xi) -> np.ndarray:
    """Value of ``d_x^nx d_xi^nxi a`` at arbitrary points.

    The polynomial part is evaluated exactly, the remainder by trigonometric
    interpolation of its spectral derivative.
    """
    rem = spectral_array_derivative(spectral_array_derivative(a.remainder, a.grid, 0, nx),
                                    a.grid, 1, nxi)
    out = trig_interpolate(rem, a.grid, x, xi)
    if a.poly:
        dpoly = poly_derivative(poly_derivative(a.poly, 0, nx), 1, nxi)
        pv = poly_eval(dpoly, np.asarray(x, dtype=float), np.asarray(xi, dtype=float))
        out = out + (pv.real if np.isrealobj(out) and not np.any(pv.imag) else pv)
    return out
