"""Curated hamiltonians, jump sets and initial states with certified constants.

Every symbol is written as an explicit polynomial in ``(x, xi)`` plus an
optional bounded remainder given as a sympy expression.  The certified
constants ``M0`` (friction bound), ``Gamma`` (second-derivative bound) and
``c`` (ellipticity) are derived from the expressions symbolically or, for
``Gamma`` with a remainder, by dense sampling followed by local maximisation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
import sympy as sp
from scipy import fft as sfft
from scipy import optimize

from .fokker_planck import build_fp
from .phase_space import PhaseSpaceGrid, Symbol, make_grid

__all__ = [
    "SymbolExpr",
    "Preset",
    "CertificationError",
    "catalog",
    "get_preset",
    "instantiate",
    "anharmonic",
    "preset_names",
    "BOX_FLOOR",
    "EXACT_BOX_FLOOR",
    "CUTOFF_SCALE",
]

x, xi = sp.symbols("x xi", real=True)

BOX_FLOOR = 1e-8
# Kernel entries at the periodic seam scale like the square root of the symbol's edge
# amplitude, and the HS distance inherits them through the x^2 sawtooth.  Runs that
# must reach the discretization floor therefore hold the symbol edge near 1e-24.
EXACT_BOX_FLOOR = 1e-24
CUTOFF_SCALE = 1.9
CUTOFF_POWER = 12


def _fast_even(n: int) -> int:
    n = sfft.next_fast_len(n)
    while n % 2:
        n = sfft.next_fast_len(n + 1)
    return n


class CertificationError(RuntimeError):
    """Recomputed constants disagree with a preset's certificate."""


@dataclass(frozen=True)
class SymbolExpr:
    """``sum c_ij x^i xi^j + remainder(x, xi)``."""

    poly: tuple = ()
    remainder: sp.Expr = sp.Integer(0)

    @classmethod
    def from_poly(cls, poly: dict, remainder=0) -> "SymbolExpr":
        return cls(tuple(sorted(poly.items())), sp.sympify(remainder))

    @cached_property
    def expr(self) -> sp.Expr:
        return sum((sp.nsimplify(c) * x**i * xi**j for (i, j), c in self.poly),
                   sp.Integer(0)) + self.remainder

    @cached_property
    def _remainder_fn(self):
        if self.remainder == 0:
            return None
        f = sp.lambdify((x, xi), self.remainder, "numpy")
        return lambda X, XI: np.broadcast_to(f(X, XI), np.broadcast(X, XI).shape)

    def to_symbol(self, grid: PhaseSpaceGrid) -> Symbol:
        return Symbol.from_parts(grid, dict(self.poly), self._remainder_fn)

    @cached_property
    def _derivative_fns(self):
        e = self.expr
        grad = [sp.diff(e, v) for v in (x, xi)]
        hess = [[sp.diff(g, v) for v in (x, xi)] for g in grad]
        return sp.lambdify((x, xi), grad, "numpy"), sp.lambdify((x, xi), hess, "numpy")

    def derivatives(self, X: float, XI: float):
        """Gradient and Hessian at a point (used by the flow integrator)."""
        g, H = self._derivative_fns
        return np.array(g(X, XI), dtype=float), np.array(H(X, XI), dtype=float)

    def second_derivative_sup(self, x_range=(-4.0, 4.0), xi_range=(-4.0, 4.0),
                              samples: int = 801) -> float:
        """``sup_{|a|=2} |d^a f|`` on a rectangle: dense sampling, then local maximisation."""
        best = 0.0
        for nx, nxi in ((2, 0), (1, 1), (0, 2)):
            d = self.expr
            if nx:
                d = sp.diff(d, x, nx)
            if nxi:
                d = sp.diff(d, xi, nxi)
            if d.is_constant():
                best = max(best, abs(float(d)))
                continue
            f = sp.lambdify((x, xi), d, "numpy")
            X, XI = np.meshgrid(np.linspace(*x_range, samples), np.linspace(*xi_range, samples),
                                indexing="ij")
            vals = np.abs(np.broadcast_to(f(X, XI), X.shape))
            k = np.unravel_index(np.argmax(vals), vals.shape)
            res = optimize.minimize(lambda z: -abs(float(f(z[0], z[1]))),
                                    [X[k], XI[k]], method="Nelder-Mead",
                                    options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
            best = max(best, float(vals[k]), -float(res.fun))
        return best

    @property
    def Gamma(self) -> float:
        return self.second_derivative_sup()


def _poisson(f: sp.Expr, g: sp.Expr) -> sp.Expr:
    return sp.diff(f, xi) * sp.diff(g, x) - sp.diff(f, x) * sp.diff(g, xi)


@dataclass(frozen=True)
class Preset:
    name: str
    hamiltonian: SymbolExpr
    jumps: tuple
    description: str
    z0: tuple = (1.0, 0.0)
    exact: bool = False
    min_halfwidth: float = 0.0
    expansion_rate: float = 0.0
    width_growth: float = 1.0
    params: dict = field(default_factory=dict)

    @cached_property
    def certificate(self) -> dict:
        return _certify(self)

    @property
    def M0(self) -> float:
        return self.certificate["M0"]

    @property
    def Gamma(self) -> float:
        return self.certificate["Gamma"]

    @property
    def c(self) -> float:
        return self.certificate["c"]

    @property
    def friction_free(self) -> bool:
        return self.certificate["friction_free"]

    def box_halfwidths(self, h: float, gamma: float = 1.0, T: float = 1.0, z0=None,
                       floor: float = BOX_FLOOR) -> tuple[float, float]:
        """Half-widths in ``x`` and ``xi`` keeping evolved states below ``floor`` at the edge.

        The orbit radius is ``|z0|`` (expanded by ``exp(expansion_rate T)``) and
        the symbol variance grows from ``h/2`` at rate ``width_growth * gamma h``.
        """
        z0 = self.z0 if z0 is None else z0
        R = float(np.hypot(*z0)) * 1.05
        sigma = np.sqrt(h / 2 + self.width_growth * gamma * h * T)
        k = np.sqrt(2 * np.log(2 / floor))
        grow = np.exp(self.expansion_rate * T)
        half = (R + k * sigma) * grow
        return max(half, self.min_halfwidth), half

    def recommended_grid(self, h: float, gamma: float = 1.0, T: float = 1.0, z0=None,
                         floor: float = BOX_FLOOR) -> PhaseSpaceGrid:
        """Smallest FFT-friendly even grid whose dual momentum window covers the box."""
        hx, hxi = self.box_halfwidths(h, gamma, T, z0, floor)
        N = max(int(2 * np.ceil((2 * hx) * (2 * hxi) / (2 * np.pi * h) / 2)), 16)
        return make_grid(_fast_even(N), 0.0, hx, 0.0, h)

    def describe(self) -> dict:
        return {
            "name": self.name,
            "hamiltonian": str(self.hamiltonian.expr),
            "jumps": [str(j.expr) for j in self.jumps],
            "exact": self.exact,
            "z0": list(self.z0),
            **{k: v for k, v in self.certificate.items()},
            "params": dict(self.params),
        }


def _certify(preset: Preset) -> dict:
    ells = [j.expr for j in preset.jumps]
    mu = sp.simplify(sum((_poisson(l, sp.conjugate(l)) for l in ells), sp.Integer(0)) / (2 * sp.I))
    if not mu.is_constant():
        raise CertificationError(f"{preset.name}: friction is not constant ({mu})")
    M0 = float(sp.re(mu))
    Hcols = []
    for l in ells:
        v = sp.Matrix([sp.diff(l, xi), -sp.diff(l, x)])
        Hcols += [v, v.conjugate()]
    if Hcols:
        HH = sp.zeros(2, 2)
        for v in Hcols:
            HH += v * v.H
        HH = sp.simplify(HH)
        if not all(e.is_constant() for e in HH):
            raise CertificationError(f"{preset.name}: H H* is not constant")
        c = float(min(np.linalg.eigvalsh(np.array(HH.evalf(), dtype=complex))))
    else:
        c = 0.0
    span = max(preset.min_halfwidth, 4.0)
    Gamma = preset.hamiltonian.second_derivative_sup((-span, span), (-span, span))
    return {"M0": M0, "Gamma": Gamma, "c": c, "friction_free": M0 == 0 and mu == 0,
            "exact": preset.exact}


def _cutoff(s: float = CUTOFF_SCALE, m: int = CUTOFF_POWER) -> sp.Expr:
    """Smooth bump ``1 - tanh((x/s)^m)``: flat to order ``m`` at 0, decaying like ``exp(-2(x/s)^m)``."""
    return 1 - sp.tanh((x / s) ** m)


def _edge(s: float, m: int = CUTOFF_POWER, tol: float = 1e-13) -> float:
    """Smallest ``|x|`` beyond which ``|x|^3 (1 - tanh((x/s)^m))`` stays below ``tol``."""
    f = lambda r: r**3 * 2 * np.exp(-2 * (r / s) ** m) - tol
    return float(optimize.brentq(f, 1.01 * s, 10 * s))


HARMONIC = {(2, 0): 0.5, (0, 2): 0.5}


def anharmonic(lam: float = 0.1, s: float = CUTOFF_SCALE, m: int = CUTOFF_POWER) -> Preset:
    """``(x^2 + xi^2)/2 + lam b(x) x^3`` with ``b = 1 - tanh((x/s)^m)`` and jumps ``x, xi``."""
    rem = sp.nsimplify(lam) * _cutoff(s, m) * x**3 if lam else 0
    return Preset(
        "anharmonic",
        SymbolExpr.from_poly(HARMONIC, rem),
        (SymbolExpr.from_poly({(1, 0): 1.0}), SymbolExpr.from_poly({(0, 1): 1.0})),
        "harmonic oscillator with a cut-off cubic term; position and momentum jumps",
        min_halfwidth=_edge(s, m) if lam else 0.0,
        params={"lambda": lam, "cutoff_scale": s, "cutoff_power": m},
    )


@lru_cache(maxsize=None)
def _catalog() -> tuple:
    r = 1 / np.sqrt(2)
    return (
        Preset("harmonic_exact", SymbolExpr.from_poly(HARMONIC),
               (SymbolExpr.from_poly({(1, 0): r, (0, 1): 1j * r}),),
               "harmonic oscillator with one damping jump (x + i xi)/sqrt(2); exact correspondence",
               exact=True, width_growth=0.0),
        Preset("position_momentum", SymbolExpr.from_poly(HARMONIC),
               (SymbolExpr.from_poly({(1, 0): 1.0}), SymbolExpr.from_poly({(0, 1): 1.0})),
               "harmonic oscillator with jumps x and xi; friction-free, Q = H_p + (gamma h/2) Laplacian",
               exact=True),
        Preset("damped_oscillator", SymbolExpr.from_poly(HARMONIC),
               (SymbolExpr.from_poly({(1, 0): 1.0, (0, 1): 1j}),),
               "harmonic oscillator with one damping jump x + i xi",
               exact=True),
        anharmonic(),
        Preset("free_hyperbolic", SymbolExpr.from_poly({(1, 1): 1.0}),
               (SymbolExpr.from_poly({(1, 0): 1.0}), SymbolExpr.from_poly({(0, 1): 1.0})),
               "hyperbolic hamiltonian x xi; the flow stretches x and contracts xi",
               z0=(0.0, 0.0), exact=True, expansion_rate=1.0),
    )


def catalog() -> list[Preset]:
    return list(_catalog())


def preset_names() -> list[str]:
    return [p.name for p in _catalog()]


def get_preset(name: str) -> Preset:
    for p in _catalog():
        if p.name == name:
            return p
    raise KeyError(f"unknown preset {name!r}; available: {', '.join(preset_names())}")


def instantiate(preset: Preset | str, grid: PhaseSpaceGrid, check: bool = True,
                tol: float = 1e-8, gamma_tol: float = 1e-4):
    """Sample a preset on ``grid`` and re-derive its constants.

    Returns ``(p, ells, constants)``.  Raises :class:`CertificationError` if
    the constants recomputed on the grid disagree with the certificate.
    ``Gamma`` is a supremum of an interpolant, so it is held to the looser
    relative tolerance ``gamma_tol``.
    """
    if isinstance(preset, str):
        preset = get_preset(preset)
    if grid.x_halfwidth < preset.min_halfwidth - 1e-12:
        raise ValueError(f"box too small for {preset.name}: needs x half-width >= "
                         f"{preset.min_halfwidth:.4g}, got {grid.x_halfwidth:.4g}")
    p = preset.hamiltonian.to_symbol(grid)
    ells = [j.to_symbol(grid) for j in preset.jumps]
    cert = preset.certificate
    if not check:
        return p, ells, dict(cert)
    gen = build_fp(p, ells, 1.0)
    found = {"M0": gen.M0, "Gamma": gen.Gamma, "c": gen.c if ells else 0.0}
    for key, val in found.items():
        bound = gamma_tol if key == "Gamma" else tol
        if abs(val - cert[key]) > bound * max(1.0, abs(cert[key])):
            raise CertificationError(f"{preset.name}: {key} recomputed as {val!r}, "
                                     f"certified {cert[key]!r}")
    return p, ells, {**dict(cert), "Gamma_grid": gen.Gamma,
                     "technical_condition": gen.hypothesis_audit()["technical_condition"]}
