"""Discrete Weyl quantization on a periodic phase-space grid.

A sampled symbol is read as its trigonometric interpolant
``sum c[m, k] exp(i alpha_m (x - x0) + i beta_k (xi - xi0))``.  Each plane wave
is quantized exactly: ``Op(exp(i(alpha x + beta xi)))`` multiplies by
``exp(i alpha x)`` and shifts by ``h*beta`` (an integer number of grid steps on
the dual lattice), with the Weyl half-phase ``exp(i alpha h beta / 2)``.  The
resulting plane-wave operators are mutually orthogonal for the Frobenius
inner product, so the map is unitary up to ``(2 pi h)^(-1/2)`` and exactly
invertible; :func:`weyl_symbol` is its inverse.

Matrices absorb the quadrature weight ``dx``: operator composition is plain
matrix multiplication and a density matrix has unit plain trace.

Polynomial symbol parts are quantized directly from the position matrix
``X = diag(x)`` and the momentum multiplier ``hD`` using Weyl (McCoy)
ordering, which keeps unbounded symbols free of wrap-around artifacts.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from math import comb, factorial

import numpy as np
from scipy import fft as sfft

from .phase_space import PhaseSpaceGrid, Symbol, spectral_derivative

__all__ = [
    "OperatorMatrix",
    "CoherentState",
    "quantize",
    "weyl_symbol",
    "hs_norm",
    "hs_inner",
    "moyal_star",
    "coherent_state",
    "identity",
    "xi_left",
    "xi_right",
]

MAX_STAR_ORDER = 6


def xi_left(mult: np.ndarray, A: np.ndarray) -> np.ndarray:
    """``M A`` for the Fourier multiplier ``M`` with eigenvalues ``mult``."""
    return sfft.ifft(mult[:, None] * sfft.fft(A, axis=0), axis=0)


def xi_right(A: np.ndarray, mult: np.ndarray) -> np.ndarray:
    """``A M`` for the Fourier multiplier ``M`` with eigenvalues ``mult``."""
    return sfft.fft(mult[None, :] * sfft.ifft(A, axis=1), axis=1)


class OperatorMatrix:
    """An operator on the position grid, stored as an ``N x N`` matrix.

    Operators produced by :func:`quantize` may also carry a split form
    ``diag(x_diag) + M(xi_mult) + rest`` that represents the same matrix; it is
    only used to apply the operator to other matrices with FFTs instead of
    dense products.
    """

    __slots__ = ("grid", "data", "x_diag", "xi_mult", "rest", "__dict__")

    def __init__(self, grid: PhaseSpaceGrid, data=None, *, x_diag=None, xi_mult=None, rest=None):
        N = grid.n_points
        self.grid = grid
        self.x_diag = x_diag
        self.xi_mult = xi_mult
        self.rest = rest
        if data is None:
            data = np.zeros((N, N), dtype=complex)
            if x_diag is not None:
                data[np.diag_indices(N)] += x_diag
            if xi_mult is not None:
                data += xi_left(xi_mult, np.eye(N))
            if rest is not None:
                data += rest
        data = np.asarray(data, dtype=complex)
        if data.shape != (N, N):
            raise ValueError(f"operator shape {data.shape} does not match grid size {N}")
        if not np.all(np.isfinite(data)):
            raise ValueError("operator entries must be finite")
        self.data = data

    @property
    def structured(self) -> bool:
        return self.x_diag is not None or self.xi_mult is not None

    @property
    def h(self) -> float:
        return self.grid.h

    def _check(self, other: "OperatorMatrix"):
        if not self.grid.same_as(other.grid):
            raise ValueError("grid mismatch between operators")

    @cached_property
    def H(self) -> "OperatorMatrix":
        """Adjoint."""
        if self.structured:
            return OperatorMatrix(
                self.grid, self.data.conj().T,
                x_diag=None if self.x_diag is None else self.x_diag.conj(),
                xi_mult=None if self.xi_mult is None else self.xi_mult.conj(),
                rest=None if self.rest is None else self.rest.conj().T)
        return OperatorMatrix(self.grid, self.data.conj().T)

    def left(self, A: np.ndarray) -> np.ndarray:
        """``self @ A`` for a raw matrix ``A``."""
        if not self.structured:
            return self.data @ A
        out = np.zeros(A.shape, dtype=complex)
        if self.x_diag is not None:
            out += self.x_diag[:, None] * A
        if self.xi_mult is not None:
            out += xi_left(self.xi_mult, A)
        if self.rest is not None:
            out += self.rest @ A
        return out

    def right(self, A: np.ndarray) -> np.ndarray:
        """``A @ self`` for a raw matrix ``A``."""
        if not self.structured:
            return A @ self.data
        out = np.zeros(A.shape, dtype=complex)
        if self.x_diag is not None:
            out += A * self.x_diag[None, :]
        if self.xi_mult is not None:
            out += xi_right(A, self.xi_mult)
        if self.rest is not None:
            out += A @ self.rest
        return out

    def trace(self) -> complex:
        return complex(np.trace(self.data))

    def hermiticity_defect(self) -> float:
        nrm = np.linalg.norm(self.data)
        if nrm == 0:
            return 0.0
        return float(np.linalg.norm(self.data - self.data.conj().T) / nrm)

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.grid, self.left(other.data))
        return self.left(np.asarray(other)) if np.ndim(other) == 2 else self.data @ other

    def __add__(self, other):
        self._check(other)
        return OperatorMatrix(self.grid, self.data + other.data)

    def __sub__(self, other):
        self._check(other)
        return OperatorMatrix(self.grid, self.data - other.data)

    def __neg__(self):
        return OperatorMatrix(self.grid, -self.data)

    def __mul__(self, scalar):
        return OperatorMatrix(self.grid, self.data * scalar)

    __rmul__ = __mul__

    def __repr__(self):
        return f"OperatorMatrix(N={self.grid.n_points}, h={self.grid.h:g})"


def identity(grid: PhaseSpaceGrid) -> OperatorMatrix:
    return OperatorMatrix(grid, np.eye(grid.n_points, dtype=complex))


# -- the plane-wave map -------------------------------------------------------

def _phase(grid: PhaseSpaceGrid) -> np.ndarray:
    N = grid.n_points
    m = np.fft.fftfreq(N, d=1.0 / N)
    beta = grid.xi_wavenumbers
    return np.exp(1j * np.pi * np.outer(m, m) / N) * np.exp(-1j * beta * grid.xi[0])[None, :]


def _band_index(N: int) -> tuple[np.ndarray, np.ndarray]:
    j = np.arange(N)[:, None]
    k = np.arange(N)[None, :]
    return np.broadcast_to(j, (N, N)), (j + k) % N


def quantize_array(values: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """Weyl quantization of the trigonometric interpolant of ``values``."""
    N = grid.n_points
    c = sfft.fft2(values) / N**2
    band = sfft.ifft(c * _phase(grid), axis=0) * N
    K = np.empty((N, N), dtype=complex)
    K[_band_index(N)] = band
    return K


def symbol_array(K: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    """Inverse of :func:`quantize_array`."""
    N = grid.n_points
    band = K[_band_index(N)]
    c = sfft.fft(band, axis=0) / N / _phase(grid)
    return sfft.ifft2(c) * N**2


def _momentum_power(grid: PhaseSpaceGrid, b: int) -> np.ndarray:
    return grid.momentum_multiplier.astype(complex) ** b


def _xi_only_to_mult(row: np.ndarray, grid: PhaseSpaceGrid) -> np.ndarray:
    N = grid.n_points
    s0 = int(round(grid.xi[0] / grid.dxi))
    return row[np.mod(np.arange(N) - s0, N)]


def quantize(a: Symbol) -> OperatorMatrix:
    """Weyl quantization ``a -> a^w(x, hD)``."""
    grid = a.grid
    N = grid.n_points
    x = grid.x
    x_diag = np.zeros(N, dtype=complex)
    xi_mult = np.zeros(N, dtype=complex)
    rest = None
    for (i, j), coef in a.poly.items():
        if j == 0:
            x_diag += coef * x**i
        elif i == 0:
            xi_mult += coef * _momentum_power(grid, j)
        else:
            # McCoy: Op(x^i xi^j) = 2^-i sum_r C(i, r) X^r D^j X^(i-r)
            Dj = xi_left(_momentum_power(grid, j), np.eye(N))
            term = sum(comb(i, r) * (x**r)[:, None] * Dj * (x ** (i - r))[None, :]
                       for r in range(i + 1)) / 2**i
            rest = coef * term if rest is None else rest + coef * term

    rem = a.remainder
    if np.any(rem):
        scale = max(1.0, float(np.abs(rem).max()))
        if np.ptp(rem.real, axis=1).max() + np.ptp(rem.imag, axis=1).max() <= 1e-14 * scale:
            x_diag += rem[:, 0]
        elif np.ptp(rem.real, axis=0).max() + np.ptp(rem.imag, axis=0).max() <= 1e-14 * scale:
            xi_mult += _xi_only_to_mult(rem[0, :], grid)
        else:
            K = quantize_array(rem, grid)
            rest = K if rest is None else rest + K
    if not (np.any(x_diag) or np.any(xi_mult)):
        return OperatorMatrix(grid, rest if rest is not None else np.zeros((N, N), dtype=complex))
    return OperatorMatrix(grid, x_diag=x_diag if np.any(x_diag) else None,
                          xi_mult=xi_mult if np.any(xi_mult) else None, rest=rest)


def weyl_symbol(A: OperatorMatrix) -> Symbol:
    """Weyl symbol of a matrix (exact inverse of :func:`quantize` on the grid)."""
    return Symbol(A.grid, symbol_array(A.data, A.grid))


def hs_inner(A: OperatorMatrix, B: OperatorMatrix) -> complex:
    """``tr(A B*)``."""
    A._check(B)
    return complex(np.vdot(B.data, A.data))


def hs_norm(A: OperatorMatrix) -> float:
    return float(np.linalg.norm(A.data))


def moyal_star(a: Symbol, b: Symbol, order: int) -> Symbol:
    """Moyal product truncated after the ``h**order`` term.

    The first-order term is ``(h/2i){a, b}``, so that ``x # xi = x xi + ih/2``.
    """
    if order < 0 or int(order) != order:
        raise ValueError("order must be a nonnegative integer")
    if order > MAX_STAR_ORDER:
        raise ValueError(f"order {order} exceeds the derivative-depth cap {MAX_STAR_ORDER}")
    a._check(b)
    h = a.grid.h
    cache: dict = {}

    def d(s: Symbol, tag: str, nx: int, nxi: int) -> Symbol:
        key = (tag, nx, nxi)
        if key not in cache:
            cache[key] = spectral_derivative(spectral_derivative(s, "x", nx), "xi", nxi)
        return cache[key]

    out = a * b
    for j in range(1, order + 1):
        term = None
        for r in range(j + 1):
            # (d_xi a d_x b - d_x a d_xi b)^j expanded binomially
            t = d(a, "a", j - r, r) * d(b, "b", r, j - r) * (comb(j, r) * (-1) ** (j - r))
            term = t if term is None else term + t
        out = out + term * ((h / 2j) ** j / factorial(j))
    return out


# -- coherent states ------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class CoherentState:
    center: tuple[float, float]
    vector: np.ndarray
    grid: PhaseSpaceGrid

    @cached_property
    def projector(self) -> OperatorMatrix:
        psi = self.vector
        return OperatorMatrix(self.grid, self.grid.dx * np.outer(psi, psi.conj()))

    @cached_property
    def projector_symbol(self) -> Symbol:
        return weyl_symbol(self.projector)


def coherent_state(z0, grid: PhaseSpaceGrid, floor: float = 1e-8) -> CoherentState:
    """Gaussian coherent state centred at ``z0 = (x0, xi0)``, normalised on the grid.

    Raises if the phase-space Gaussian ``2 exp(-|z - z0|^2 / h)`` exceeds
    ``floor`` on the boundary of the box.
    """
    x0, xi0 = map(float, z0)
    h = grid.h
    gap_x = min(x0 - grid.x[0], grid.x[-1] + grid.dx - x0)
    gap_xi = min(xi0 - grid.xi[0], grid.xi[-1] + grid.dxi - xi0)
    gap = min(gap_x, gap_xi)
    if gap <= 0 or 2.0 * np.exp(-gap**2 / h) > floor:
        raise ValueError(f"coherent state at {z0} is too close to the box boundary "
                         f"(edge amplitude {2.0 * np.exp(-max(gap, 0)**2 / h):.3g} > {floor:g})")
    x = grid.x
    psi = (2 * np.pi * h) ** -0.25 * np.exp(-(x - x0) ** 2 / (2 * h) + 1j * (x - x0) * xi0 / h)
    psi = psi / np.sqrt(np.sum(np.abs(psi) ** 2) * grid.dx)
    return CoherentState((x0, xi0), psi, grid)
