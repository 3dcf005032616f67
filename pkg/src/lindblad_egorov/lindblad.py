"""Lindblad generator on grid operators: assembly, action, and RK4 evolution."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sfft

from .phase_space import Symbol, poisson_bracket
from .weyl import OperatorMatrix, quantize

__all__ = [
    "LindbladGenerator",
    "QuantumTrajectory",
    "StabilityError",
    "build_lindbladian",
    "apply",
    "dissipation_residual",
    "evolve",
    "stable_dt",
    "contraction_report",
]


class StabilityError(RuntimeError):
    """Raised when a trajectory norm leaves its a-priori envelope."""


def to_momentum(A: np.ndarray) -> np.ndarray:
    """``F A F^-1``: the matrix in the basis diagonalising ``hD``."""
    return sfft.ifft(sfft.fft(A, axis=0), axis=1)


def from_momentum(B: np.ndarray) -> np.ndarray:
    """Inverse of :func:`to_momentum`."""
    return sfft.fft(sfft.ifft(B, axis=0), axis=1)


def _pure_vector(op: OperatorMatrix):
    """Return ``("x", d)`` or ``("xi", m)`` if ``op`` is diagonal in one basis."""
    if not op.structured or op.rest is not None:
        return None
    if op.xi_mult is None:
        return "x", op.x_diag
    if op.x_diag is None:
        return "xi", op.xi_mult
    return None


def _sandwich_weight(l: np.ndarray, adjoint: bool) -> np.ndarray:
    """Entrywise weight of ``L A L* - (L*L A + A L*L)/2`` for diagonal ``L``."""
    a2 = np.abs(l) ** 2
    if adjoint:
        cross = np.conj(l)[:, None] * l[None, :]
    else:
        cross = l[:, None] * np.conj(l)[None, :]
    return cross - 0.5 * (a2[:, None] + a2[None, :])


@dataclass(eq=False)
class LindbladGenerator:
    P: OperatorMatrix
    L: list[OperatorMatrix]
    gamma: float
    h: float
    M0: float = 0.0
    C0: float = 1.0
    friction_free: bool = False
    regime_ok: bool = True

    @property
    def grid(self):
        return self.P.grid

    @property
    def J(self) -> int:
        return len(self.L)

    @property
    def contraction_M(self) -> float:
        """Growth rate ``M`` of the semigroup bound ``||exp(tL)|| <= exp(M t)``."""
        if self.friction_free:
            return self.C0 * self.h**2 * self.gamma
        return self.gamma * self.M0 + self.C0 * self.h * self.gamma

    @cached_property
    def adjoints(self) -> list[OperatorMatrix]:
        return [Lj.H for Lj in self.L]

    @cached_property
    def products(self) -> list[np.ndarray]:
        """Dense ``L_j* L_j``."""
        return [Ld.data @ Lj.data for Lj, Ld in zip(self.L, self.adjoints)]

    @cached_property
    def _split(self):
        """Partition the generator into entrywise weights and a dense remainder.

        Returns ``(wx, wxi, P_rest, general_jumps)`` for the forward and the
        adjoint action.  ``wx`` acts entrywise in the position basis and ``wxi``
        entrywise in the momentum basis.
        """
        N = self.grid.n_points
        h, g = self.h, self.gamma
        out = {}
        for adjoint in (False, True):
            wx = np.zeros((N, N), dtype=complex)
            wxi = np.zeros((N, N), dtype=complex)
            s = -1j / h if adjoint else 1j / h
            P = self.P
            if P.structured:
                if P.x_diag is not None:
                    wx += s * (P.x_diag[:, None] - P.x_diag[None, :])
                if P.xi_mult is not None:
                    wxi += s * (P.xi_mult[:, None] - P.xi_mult[None, :])
                P_rest = P.rest
            else:
                P_rest = P.data
            general = []
            if g:
                for Lj in self.L:
                    pure = _pure_vector(Lj)
                    if pure is None:
                        general.append(Lj)
                    elif pure[0] == "x":
                        wx += (g / h) * _sandwich_weight(pure[1], adjoint)
                    else:
                        wxi += (g / h) * _sandwich_weight(pure[1], adjoint)
            out[adjoint] = (wx if np.any(wx) else None, wxi if np.any(wxi) else None,
                            P_rest, general)
        return out


def build_lindbladian(p: Symbol, ells: list[Symbol], gamma: float, h: float | None = None,
                      C0: float = 1.0) -> LindbladGenerator:
    """Quantize ``p`` and the jump symbols and record the friction bound ``M0``."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    grid = p.grid
    if h is not None and not np.isclose(h, grid.h, rtol=1e-14, atol=0):
        raise ValueError(f"h={h} disagrees with grid h={grid.h}")
    for ell in ells:
        if not ell.grid.same_as(grid):
            raise ValueError("grid mismatch between hamiltonian and jump symbols")
    P = quantize(p)
    defect = P.hermiticity_defect()
    if defect > 1e-10:
        raise ValueError(f"hamiltonian symbol is not real (hermiticity defect {defect:.3g})")
    P = _hermitian_part(P)
    L = [quantize(ell) for ell in ells]
    M0, friction_free = friction_bound(ells)
    regime_ok = gamma < 1.0 / grid.h
    if not regime_ok:
        warnings.warn(f"gamma={gamma} is outside the regime gamma < 1/h = {1 / grid.h:g}")
    return LindbladGenerator(P, L, float(gamma), grid.h, M0, C0, friction_free, regime_ok)


def friction_bound(ells: list[Symbol]) -> tuple[float, bool]:
    """Grid maximum of ``mu = (1/2i) sum {l, conj l}`` and whether ``mu`` vanishes."""
    if not ells:
        return 0.0, True
    mu = sum(poisson_bracket(ell, ell.conj()).values for ell in ells) / 2j
    return float(np.max(mu.real)), bool(np.all(np.abs(mu) < 1e-12))


def _hermitian_part(P: OperatorMatrix) -> OperatorMatrix:
    if P.structured:
        return OperatorMatrix(
            P.grid, 0.5 * (P.data + P.data.conj().T),
            x_diag=None if P.x_diag is None else P.x_diag.real.astype(complex),
            xi_mult=None if P.xi_mult is None else P.xi_mult.real.astype(complex),
            rest=None if P.rest is None else 0.5 * (P.rest + P.rest.conj().T))
    return OperatorMatrix(P.grid, 0.5 * (P.data + P.data.conj().T))


def _apply_array(gen: LindbladGenerator, A: np.ndarray, adjoint: bool = False) -> np.ndarray:
    wx, wxi, P_rest, general = gen._split[adjoint]
    h, g = gen.h, gen.gamma
    out = wx * A if wx is not None else np.zeros(A.shape, dtype=complex)
    if wxi is not None:
        out += from_momentum(wxi * to_momentum(A))
    if P_rest is not None:
        s = -1j / h if adjoint else 1j / h
        out += s * (P_rest @ A - A @ P_rest)
    for Lj in general:
        Ljd = Lj.H
        if adjoint:
            LdA = Ljd.left(A)
            term = Lj.right(LdA) - 0.5 * Ljd.left(Lj.left(A)) - 0.5 * Lj.right(Ljd.right(A))
        else:
            LA = Lj.left(A)
            term = Ljd.right(LA) - 0.5 * Ljd.left(LA) - 0.5 * Lj.right(Ljd.right(A))
        out += (g / h) * term
    return out


def apply(gen: LindbladGenerator, A: OperatorMatrix, adjoint: bool = False) -> OperatorMatrix:
    """``L A`` (or the adjoint action ``L* A``)."""
    gen.P._check(A)
    return OperatorMatrix(A.grid, _apply_array(gen, A.data, adjoint))


def apply_reference(gen: LindbladGenerator, A: OperatorMatrix, adjoint: bool = False) -> OperatorMatrix:
    """Dense-matrix evaluation of the generator (slow; used as a cross-check)."""
    gen.P._check(A)
    a, P, h, g = A.data, gen.P.data, gen.h, gen.gamma
    out = (1j / h) * (P @ a - a @ P)
    if adjoint:
        out = -out
    for Lj, LL in zip(gen.L, gen.products):
        l, ld = Lj.data, Lj.data.conj().T
        sandwich = ld @ a @ l if adjoint else l @ a @ ld
        out = out + (g / h) * (sandwich - 0.5 * (LL @ a + a @ LL))
    return OperatorMatrix(A.grid, out)


def dissipation_residual(gen: LindbladGenerator, A: OperatorMatrix, adjoint: bool = False) -> float:
    """Relative defect of the real-part identity for ``<L A, A>`` (or for the adjoint).

    Forward:  ``2 Re<LA, A> = -(g/h) sum ||[L_j, A]||^2 + (g/h) <sum [L_j, L_j*] A*, A*>``.
    Adjoint:  ``2 Re<L*A, A> = -(g/h) sum ||[L_j*, A]||^2 + (g/h) <sum [L_j, L_j*] A, A>``.
    """
    gen.P._check(A)
    a = A.data
    lhs = 2 * np.real(np.vdot(a, _apply_array(gen, a, adjoint)))
    comm_sq = 0.0
    S = np.zeros_like(a)
    for Lj, LL in zip(gen.L, gen.products):
        l = Lj.data
        c = l.conj().T if adjoint else l
        comm_sq += np.linalg.norm(c @ a - a @ c) ** 2
        S += l @ l.conj().T - LL
    B = a if adjoint else a.conj().T
    rhs = (gen.gamma / gen.h) * (-comm_sq + np.real(np.vdot(B, S @ B)))
    scale = np.linalg.norm(a) ** 2
    return float(abs(lhs - rhs) / scale) if scale else 0.0


def spectral_radius(gen: LindbladGenerator) -> float:
    """Upper estimate of the spectral radius of the generator."""
    wx, wxi, P_rest, general = gen._split[False]
    rho = 0.0
    if wx is not None:
        rho += float(np.abs(wx).max())
    if wxi is not None:
        rho += float(np.abs(wxi).max())
    if P_rest is not None:
        rho += 2 * np.linalg.norm(P_rest, 2) / gen.h
    for Lj in general:
        rho += 2 * gen.gamma / gen.h * np.linalg.norm(Lj.data, 2) ** 2
    return float(rho)


def stable_dt(gen: LindbladGenerator, safety: float = 0.9) -> float:
    """Largest RK4 step allowed by the spectral-radius estimate of the generator."""
    return safety * 2.5 / spectral_radius(gen)


@dataclass(eq=False)
class QuantumTrajectory:
    times: np.ndarray
    states: list[OperatorMatrix]
    step_times: np.ndarray
    trace: np.ndarray
    herm_defect: np.ndarray
    hs: np.ndarray
    dt: float
    meta: dict = field(default_factory=dict)


def _rk4_step(f, y, dt):
    k1 = f(y)
    k2 = f(y + 0.5 * dt * k1)
    k3 = f(y + 0.5 * dt * k2)
    k4 = f(y + dt * k3)
    return y + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)


def step_schedule(T: float, dt: float) -> np.ndarray:
    """Step sizes reaching ``T`` with a shortened last step."""
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if T < 0:
        raise ValueError(f"T must be nonnegative, got {T}")
    n = int(np.floor(T / dt + 1e-9))
    steps = [dt] * n
    rem = T - n * dt
    if rem > 1e-12 * max(1.0, T):
        steps.append(rem)
    return np.array(steps, dtype=float)


def evolve(gen: LindbladGenerator, A0: OperatorMatrix, T: float, dt: float,
           save_every: int = 1) -> QuantumTrajectory:
    """RK4 integration of ``dA/dt = L A`` on ``[0, T]``.

    Diagnostics are recorded after every step; states every ``save_every``
    steps and at ``T``.
    """
    gen.P._check(A0)
    steps = step_schedule(T, dt)
    if dt > stable_dt(gen, safety=1.0):
        warnings.warn(f"dt={dt:g} exceeds the RK4 stability estimate {stable_dt(gen, 1.0):g}")
    f = lambda a: _apply_array(gen, a)
    a = A0.data.copy()
    n0 = np.linalg.norm(a)
    M = gen.contraction_M
    t = 0.0
    times, states = [0.0], [A0]
    step_t, tr, herm, hs = [0.0], [np.trace(a)], [_herm(a)], [n0]
    for i, s in enumerate(steps, 1):
        a = _rk4_step(f, a, s)
        t = T if i == len(steps) else i * dt
        nrm = np.linalg.norm(a)
        if not np.isfinite(nrm) or nrm > 10 * np.exp(M * t) * n0:
            raise StabilityError(f"HS norm {nrm:.3g} left the envelope at t={t:.4g} (dt={dt:g})")
        step_t.append(t)
        tr.append(np.trace(a))
        herm.append(_herm(a))
        hs.append(nrm)
        if i % save_every == 0 or i == len(steps):
            times.append(t)
            states.append(OperatorMatrix(A0.grid, a.copy()))
    return QuantumTrajectory(np.array(times), states, np.array(step_t), np.array(tr),
                             np.array(herm), np.array(hs), dt)


def _herm(a: np.ndarray) -> float:
    n = np.linalg.norm(a)
    return float(np.linalg.norm(a - a.conj().T) / n) if n else 0.0


def contraction_report(traj: QuantumTrajectory, gen: LindbladGenerator, tol: float = 1e-8) -> dict:
    """Compare ``||A(t)||_HS`` against ``exp(M t) ||A(0)||_HS`` step by step."""
    M = gen.contraction_M
    t = traj.step_times
    ratio = traj.hs / (np.exp(M * t) * traj.hs[0])
    bad = np.nonzero(ratio > 1 + tol)[0]
    increments = np.diff(traj.hs) / traj.hs[0]
    return {
        "M": M,
        "C0": gen.C0,
        "max_ratio": float(ratio.max()),
        "first_violation": None if bad.size == 0 else float(t[bad[0]]),
        "max_relative_increase": float(max(increments.max(), 0.0)) if increments.size else 0.0,
        "hs_spread": float((traj.hs.max() - traj.hs.min()) / traj.hs[0]),
        "ok": bad.size == 0,
    }
