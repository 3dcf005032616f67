"""Classical Fokker-Planck generator acting on phase-space symbols.

With ``H_f = d_xi f d_x - d_x f d_xi`` and ``v_l = (d_xi l, -d_x l)`` (so that
``H_l = v_l . grad``) the generator reads

    Q a = H_p a + gamma * (2 mu a + w . grad a)
          + (h gamma / 4) sum_j (H_{conj l_j} H_{l_j} + H_{l_j} H_{conj l_j}) a,

where ``mu = (1/2i) sum {l_j, conj l_j}`` is the friction and
``w = sum Im(conj l_j v_{l_j})``.  Because ``div w = 2 mu`` the first-order
drift splits into the antisymmetric field ``w . grad + mu`` and the
self-adjoint multiplication by ``mu``.

For affine jump functions the diffusion has constant coefficients and is
applied as a Fourier multiplier; otherwise the vector fields are composed
term by term.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import fft as sfft
from scipy import optimize
from scipy.integrate import simpson, trapezoid

from .lindblad import StabilityError, _rk4_step, step_schedule
from .phase_space import (
    PhaseSpaceGrid,
    Symbol,
    evaluate,
    poisson_bracket,
    spectral_derivative,
    trig_interpolate,
)

__all__ = [
    "FokkerPlanckGenerator",
    "ClassicalTrajectory",
    "FlowJacobian",
    "build_fp",
    "nondegeneracy_constant",
    "apply_q",
    "evolve_fp",
    "energy_ledger",
    "flow_jacobian",
    "lyapunov_gamma",
    "technical_condition",
    "hamilton_field",
]


def hamilton_field(f: Symbol) -> tuple[np.ndarray, np.ndarray]:
    """Coefficients ``(d_xi f, -d_x f)`` of ``H_f`` on the grid."""
    return spectral_derivative(f, "xi").values, -spectral_derivative(f, "x").values


def _is_constant(arr: np.ndarray) -> bool:
    scale = max(1.0, float(np.abs(arr).max()))
    return float(np.ptp(arr.real) + np.ptp(np.imag(arr))) <= 1e-13 * scale


class _Spectral:
    """Cached FFT derivative multipliers for one grid."""

    def __init__(self, grid: PhaseSpaceGrid):
        N = grid.n_points
        kx = grid.x_wavenumbers.copy()
        kxi = grid.xi_wavenumbers.copy()
        self.kx2 = (kx**2)[:, None]
        self.kxi2 = (kxi**2)[None, :]
        kx[N // 2] = 0.0
        kxi[N // 2] = 0.0
        self.ikx = (1j * kx)[:, None]
        self.ikxi = (1j * kxi)[None, :]
        # mixed second derivative: product of two first derivatives
        self.kxkxi = kx[:, None] * kxi[None, :]

    def gradient(self, a: np.ndarray):
        c = sfft.fft2(a)
        return sfft.ifft2(self.ikx * c), sfft.ifft2(self.ikxi * c)


@dataclass(eq=False)
class FokkerPlanckGenerator:
    grid: PhaseSpaceGrid
    p: Symbol
    ells: list[Symbol]
    gamma: float
    h: float
    transport: tuple[np.ndarray, np.ndarray]
    mu: Symbol
    M0: float
    drift: tuple[np.ndarray, np.ndarray]
    jump_fields: list[tuple[np.ndarray, np.ndarray]]
    c: float
    Gamma: float
    friction_free: bool

    @property
    def epsilon(self) -> float:
        return float(np.sqrt(self.gamma * self.h))

    @cached_property
    def spectral(self) -> _Spectral:
        return _Spectral(self.grid)

    @cached_property
    def diffusion_tensor(self) -> np.ndarray:
        """``D(z) = (h gamma / 2) sum Re(v v^*)`` as an ``(N, N, 2, 2)`` field."""
        N = self.grid.n_points
        D = np.zeros((N, N, 2, 2))
        for vx, vxi in self.jump_fields:
            v = np.stack(np.broadcast_arrays(vx, vxi), axis=-1)
            D += np.real(v[..., :, None] * np.conj(v[..., None, :]))
        return 0.5 * self.h * self.gamma * D

    @cached_property
    def constant_diffusion(self) -> np.ndarray | None:
        """Fourier multiplier of the diffusion when all jump fields are constant."""
        if not all(_is_constant(vx) and _is_constant(vxi) for vx, vxi in self.jump_fields):
            return None
        sp = self.spectral
        D = self.diffusion_tensor[0, 0]
        return -(D[0, 0] * sp.kx2 + 2 * D[0, 1] * sp.kxkxi + D[1, 1] * sp.kxi2)

    def hypothesis_audit(self) -> dict:
        return {
            "ellipticity_c": self.c,
            "elliptic": self.c > 0,
            "regime_gamma_lt_1_over_h": self.gamma < 1.0 / self.h,
            "friction_free": self.friction_free,
            "M0": self.M0,
            "Gamma": self.Gamma,
            "technical_condition": technical_condition(self.ells),
        }


def _jump_field(ell: Symbol) -> tuple[np.ndarray, np.ndarray]:
    vx, vxi = hamilton_field(ell)
    return (vx.flat[0] if _is_constant(vx) else vx), (vxi.flat[0] if _is_constant(vxi) else vxi)


def build_fp(p: Symbol, ells: list[Symbol], gamma: float, h: float | None = None,
             polish_gamma: bool = True) -> FokkerPlanckGenerator:
    """Assemble ``Q`` from the hamiltonian and the jump functions."""
    if gamma < 0:
        raise ValueError(f"gamma must be >= 0, got {gamma}")
    grid = p.grid
    if h is not None and not np.isclose(h, grid.h, rtol=1e-14, atol=0):
        raise ValueError(f"h={h} disagrees with grid h={grid.h}")
    for ell in ells:
        if not ell.grid.same_as(grid):
            raise ValueError("grid mismatch between hamiltonian and jump symbols")
    transport = tuple(np.real(v) for v in hamilton_field(p))
    N = grid.n_points
    mu = np.zeros((N, N))
    wx = np.zeros((N, N))
    wxi = np.zeros((N, N))
    fields = []
    for ell in ells:
        fx, fxi = _jump_field(ell)
        fields.append((fx, fxi))
        br = poisson_bracket(ell, ell.conj()).values / 2j
        if np.abs(br.imag).max() > 1e-10 * max(1.0, np.abs(br).max()):
            raise ValueError("friction symbol is not real")
        mu = mu + br.real
        lbar = np.conj(ell.values)
        wx = wx + np.imag(lbar * fx)
        wxi = wxi + np.imag(lbar * fxi)
    mu_sym = Symbol(grid, mu)
    c = nondegeneracy_constant(ells) if ells else 0.0
    M0 = float(mu.max()) if ells else 0.0
    friction_free = bool(np.all(np.abs(mu) < 1e-12))
    Gamma = lyapunov_gamma(p, polish=polish_gamma)
    return FokkerPlanckGenerator(grid, p, list(ells), float(gamma), grid.h, transport, mu_sym, M0,
                                 (wx, wxi), fields, c, Gamma, friction_free)


def nondegeneracy_constant(ells: list[Symbol]) -> float:
    """Minimum over the grid of the smallest eigenvalue of ``H H^*``.

    ``H`` has the columns ``H_{l_1}, ..., H_{l_J}, H_{conj l_1}, ..., H_{conj l_J}``.
    """
    if not ells:
        raise ValueError("at least one jump function is required")
    grid = ells[0].grid
    N = grid.n_points
    G = np.zeros((N, N, 2, 2), dtype=complex)
    for ell in ells:
        vx, vxi = hamilton_field(ell)
        v = np.stack(np.broadcast_arrays(vx, vxi), axis=-1).astype(complex)
        for col in (v, np.conj(v)):
            G += col[..., :, None] * np.conj(col[..., None, :])
    ev = np.linalg.eigvalsh(G)
    return float(ev[..., 0].min())


def _apply_array(gen: FokkerPlanckGenerator, a: np.ndarray) -> np.ndarray:
    sp = gen.spectral
    c = sfft.fft2(a)
    ax = sfft.ifft2(sp.ikx * c)
    axi = sfft.ifft2(sp.ikxi * c)
    vx, vxi = gen.transport
    out = vx * ax + vxi * axi
    g = gen.gamma
    if g == 0 or not gen.ells:
        return out
    wx, wxi = gen.drift
    out += g * (2 * gen.mu.values * a + wx * ax + wxi * axi)
    mult = gen.constant_diffusion
    if mult is not None:
        out += sfft.ifft2(mult * c)
    else:
        s = 0.25 * gen.h * g
        for fx, fxi in gen.jump_fields:
            H1 = fx * ax + fxi * axi
            H2 = np.conj(fx) * ax + np.conj(fxi) * axi
            g1x, g1xi = sp.gradient(H1)
            g2x, g2xi = sp.gradient(H2)
            out += s * (np.conj(fx) * g1x + np.conj(fxi) * g1xi + fx * g2x + fxi * g2xi)
    return out


def apply_q(gen: FokkerPlanckGenerator, a: Symbol) -> Symbol:
    """``Q a``."""
    if not a.grid.same_as(gen.grid):
        raise ValueError("grid mismatch between symbol and generator")
    return Symbol(a.grid, _apply_array(gen, a.values))


def transport_part(gen: FokkerPlanckGenerator, a: np.ndarray) -> np.ndarray:
    ax, axi = gen.spectral.gradient(a)
    return gen.transport[0] * ax + gen.transport[1] * axi


def drift_part(gen: FokkerPlanckGenerator, a: np.ndarray) -> np.ndarray:
    """Antisymmetric first-order part ``gamma (w . grad + mu)``."""
    ax, axi = gen.spectral.gradient(a)
    return gen.gamma * (gen.drift[0] * ax + gen.drift[1] * axi + gen.mu.values * a)


def diffusion_part(gen: FokkerPlanckGenerator, a: np.ndarray) -> np.ndarray:
    return _apply_array(gen, a) - transport_part(gen, a) - drift_part(gen, a) \
        - gen.gamma * gen.mu.values * a


def spectral_radius(gen: FokkerPlanckGenerator) -> float:
    grid = gen.grid
    kx = np.pi / grid.dx
    kxi = np.pi / grid.dxi
    vx, vxi = gen.transport
    rho = np.abs(vx).max() * kx + np.abs(vxi).max() * kxi
    if gen.gamma and gen.ells:
        wx, wxi = gen.drift
        rho += gen.gamma * (2 * np.abs(gen.mu.values).max() + np.abs(wx).max() * kx
                            + np.abs(wxi).max() * kxi)
        D = gen.diffusion_tensor
        rho += np.abs(D[..., 0, 0]).max() * kx**2 + np.abs(D[..., 1, 1]).max() * kxi**2 \
            + 2 * np.abs(D[..., 0, 1]).max() * kx * kxi
    return float(rho)


def stable_dt(gen: FokkerPlanckGenerator, safety: float = 0.9) -> float:
    """RK4 step from the combined advective and diffusive spectral radius."""
    return safety * 2.5 / spectral_radius(gen)


@dataclass(eq=False)
class ClassicalTrajectory:
    times: np.ndarray
    symbols: list[Symbol]
    step_times: np.ndarray
    l2: np.ndarray
    mass: np.ndarray
    grad_eps: np.ndarray
    sobolev: dict[float, np.ndarray]
    dt: float
    meta: dict = field(default_factory=dict)


def _diagnostics(a: np.ndarray, grid: PhaseSpaceGrid, sp: _Spectral, eps: float, s_list):
    c = sfft.fft2(a)
    power = np.abs(c) ** 2 * grid.cell / grid.n_points**2
    l2 = np.sqrt(power.sum())
    grad = np.sqrt(((sp.kx2 + sp.kxi2) * power).sum()) * eps
    sob = {}
    for s in s_list:
        if s == 0 or eps == 0:
            sob[s] = l2
        else:
            sob[s] = np.sqrt(((1 + eps**2 * (sp.kx2 + sp.kxi2)) ** s * power).sum())
    return l2, a.sum().real * grid.cell, grad, sob


def evolve_fp(gen: FokkerPlanckGenerator, a0: Symbol, T: float, dt: float,
              save_every: int = 1, sobolev_s=(0, 1, 2),
              source=None) -> ClassicalTrajectory:
    """RK4 method of lines for ``da/dt = Q a`` on ``[0, T]``.

    ``source``, if given, maps the state array to an extra right-hand side and
    is used for augmented systems.  Norm diagnostics are recorded every step.
    """
    if not a0.grid.same_as(gen.grid):
        raise ValueError("grid mismatch between symbol and generator")
    steps = step_schedule(T, dt)
    rhs = (lambda a: _apply_array(gen, a)) if source is None else source
    a = np.asarray(a0.values, dtype=complex).copy()
    sp, grid = gen.spectral, gen.grid
    eps = gen.epsilon if gen.epsilon > 0 else 1.0
    d = _diagnostics(a, grid, sp, eps, sobolev_s)
    l2s, masses, grads, sobs = [d[0]], [d[1]], [d[2]], {s: [d[3][s]] for s in sobolev_s}
    n0 = d[0]
    growth = gen.gamma * max(gen.M0, 0.0)
    t = 0.0
    times, symbols, step_t = [0.0], [a0], [0.0]
    for i, s_ in enumerate(steps, 1):
        a = _rk4_step(rhs, a, s_)
        t = T if i == len(steps) else i * dt
        d = _diagnostics(a, grid, sp, eps, sobolev_s)
        if not np.isfinite(d[0]) or (n0 > 0 and d[0] > 10 * np.exp(growth * t) * n0):
            raise StabilityError(f"L2 norm {d[0]:.3g} left the envelope at t={t:.4g} (dt={dt:g})")
        step_t.append(t)
        l2s.append(d[0])
        masses.append(d[1])
        grads.append(d[2])
        for s in sobolev_s:
            sobs[s].append(d[3][s])
        if i % save_every == 0 or i == len(steps):
            times.append(t)
            symbols.append(Symbol(grid, a.copy()))
    return ClassicalTrajectory(np.array(times), symbols, np.array(step_t), np.array(l2s),
                               np.array(masses), np.array(grads),
                               {s: np.array(v) for s, v in sobs.items()}, dt,
                               {"epsilon": eps})


def energy_ledger(traj: ClassicalTrajectory, gen: FokkerPlanckGenerator, tol: float = 1e-8) -> dict:
    """Audit the semigroup and energy bounds along a classical trajectory.

    ``budget_stated`` uses ``||u(T)||^2 + c int ||eps grad u||^2`` and
    ``budget_sharp`` the same with ``c/2``, where ``u = exp(-M0 gamma t) a``.
    The ratios are relative to ``||u_0||^2``; a ratio at most 1 means the
    budget holds.
    """
    t = traj.step_times
    damp = np.exp(-gen.M0 * gen.gamma * t)
    u = damp * traj.l2
    n0 = traj.l2[0]
    decay_ratio = float((u / n0).max()) if n0 else 0.0
    grad_u2 = (damp * traj.grad_eps) ** 2
    integral = float(simpson(grad_u2, x=t)) if t.size > 2 else float(trapezoid(grad_u2, x=t))
    uT2 = float(u[-1] ** 2)
    stated = (uT2 + gen.c * integral) / n0**2 if n0 else 0.0
    sharp = (uT2 + 0.5 * gen.c * integral) / n0**2 if n0 else 0.0
    increments = np.diff(traj.l2) / n0 if n0 else np.zeros(0)
    report = {
        "M0": gen.M0,
        "c": gen.c,
        "epsilon": gen.epsilon,
        "decay_ratio": decay_ratio,
        "decay_ok": decay_ratio <= 1 + tol,
        "max_relative_increase": float(max(increments.max(), 0.0)) if increments.size else 0.0,
        "dissipation_integral": integral,
        "budget_stated": float(stated),
        "budget_stated_ok": stated <= 1 + tol,
        "budget_sharp": float(sharp),
        "budget_sharp_ok": sharp <= 1 + tol,
    }
    if gen.friction_free:
        report["sobolev_constants"] = {
            float(s): float((v / v[0]).max()) for s, v in traj.sobolev.items()}
    return report


# -- flow and Lyapunov constant ---------------------------------------------------

@dataclass
class FlowJacobian:
    t: float
    jacobian: np.ndarray
    endpoint: np.ndarray
    Gamma: float
    C: float
    growth_rate: float
    ok: bool
    times: np.ndarray
    max_entries: np.ndarray


def _derivative_evaluator(p):
    """``(x, xi) -> (grad, hessian)`` for a Symbol or an object exposing them."""
    if isinstance(p, Symbol):
        def ev(x, xi):
            px = float(np.real(evaluate(p, 1, 0, x, xi)))
            pxi = float(np.real(evaluate(p, 0, 1, x, xi)))
            pxx = float(np.real(evaluate(p, 2, 0, x, xi)))
            pxxi = float(np.real(evaluate(p, 1, 1, x, xi)))
            pxixi = float(np.real(evaluate(p, 0, 2, x, xi)))
            return np.array([px, pxi]), np.array([[pxx, pxxi], [pxxi, pxixi]])
        return ev, p.grid
    return p.derivatives, None


def flow_jacobian(p, z0, t: float, dt: float = 1e-3, Gamma: float | None = None,
                  C_max: float = 1.0, tol: float = 1e-8) -> FlowJacobian:
    """Integrate the Hamilton flow and its variational equation by RK4.

    ``p`` is a Symbol or any object with ``derivatives(x, xi) -> (grad, hess)``.
    The bound ``max |d phi_s| <= C exp(Gamma s)`` is checked along the path;
    ``C`` is the smallest admissible constant and ``ok`` means ``C <= C_max``.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    ev, grid = _derivative_evaluator(p)
    if Gamma is None:
        Gamma = lyapunov_gamma(p) if isinstance(p, Symbol) else float(p.Gamma)
    x0 = np.array(z0, dtype=float)

    def inside(z):
        if grid is None:
            return True
        return (grid.x[0] <= z[0] <= grid.x[-1] + grid.dx
                and grid.xi[0] <= z[1] <= grid.xi[-1] + grid.dxi)

    def rhs(y):
        z, J = y[:2], y[2:].reshape(2, 2)
        grad, hess = ev(z[0], z[1])
        F = np.array([grad[1], -grad[0]])
        DF = np.array([[hess[0, 1], hess[1, 1]], [-hess[0, 0], -hess[0, 1]]])
        return np.concatenate([F, (DF @ J).ravel()])

    y = np.concatenate([x0, np.eye(2).ravel()])
    times, entries = [0.0], [1.0]
    s = 0.0
    for step in step_schedule(t, dt) if t > 0 else []:
        y = _rk4_step(rhs, y, step)
        s += step
        if not inside(y[:2]):
            raise ValueError(f"trajectory left the box at t={s:.4g}: z={y[:2]}")
        times.append(s)
        entries.append(float(np.abs(y[2:]).max()))
    times = np.array(times)
    entries = np.array(entries)
    C = float((entries * np.exp(-Gamma * times)).max())
    rate = float(np.log(entries[-1]) / times[-1]) if times[-1] > 0 else 0.0
    return FlowJacobian(float(t), y[2:].reshape(2, 2), y[:2], float(Gamma), C, rate,
                        C <= C_max * (1 + tol), times, entries)


def _second_derivatives(p: Symbol) -> list[tuple[tuple[int, int], np.ndarray]]:
    out = []
    for nx, nxi in ((2, 0), (1, 1), (0, 2)):
        d = spectral_derivative(spectral_derivative(p, "x", nx), "xi", nxi)
        out.append(((nx, nxi), np.real(d.values)))
    return out


def lyapunov_gamma(p: Symbol, polish: bool = True) -> float:
    """``sup_{|alpha| = 2} |d^alpha p|`` over the box.

    The grid maximum is refined by maximising the trigonometric interpolant
    (plus the exact polynomial part) near the best node, so the value does
    not depend on where the nodes fall.
    """
    best = 0.0
    grid = p.grid
    for (nx, nxi), arr in _second_derivatives(p):
        k = np.unravel_index(np.argmax(np.abs(arr)), arr.shape)
        val = float(np.abs(arr[k]))
        if polish and not _is_constant(arr):
            z0 = np.array([grid.x[k[0]], grid.xi[k[1]]])
            f = lambda z: -abs(float(np.real(evaluate(p, nx, nxi, z[0], z[1]))))
            res = optimize.minimize(f, z0, method="Nelder-Mead",
                                    options={"xatol": 1e-10, "fatol": 1e-14, "maxiter": 2000})
            if res.success or res.fun < -val:
                val = max(val, -float(res.fun))
        best = max(best, val)
    return best


def technical_condition(ells: list[Symbol], orders=(2, 3)) -> dict:
    """Grid suprema of ``|d^a Im l||l| + |Im l||d^a l|`` for ``|a|`` in ``orders``."""
    out = {}
    for j, ell in enumerate(ells):
        im = Symbol(ell.grid, np.imag(ell.values),
                    {k: np.imag(v) for k, v in ell.poly.items()})
        vals = {}
        for order in orders:
            sup = 0.0
            for nx in range(order + 1):
                nxi = order - nx
                d_im = spectral_derivative(spectral_derivative(im, "x", nx), "xi", nxi).values
                d_l = spectral_derivative(spectral_derivative(ell, "x", nx), "xi", nxi).values
                q = np.abs(d_im) * np.abs(ell.values) + np.abs(im.values) * np.abs(d_l)
                sup = max(sup, float(q.max()))
            vals[order] = sup
        out[j] = vals
    return out


def transported(a0: Symbol, flow_inverse) -> Symbol:
    """``a0`` composed with a map of the grid nodes (via trigonometric interpolation)."""
    X, XI = a0.grid.mesh
    Xs, XIs = flow_inverse(X, XI)
    return Symbol(a0.grid, trig_interpolate(a0.values, a0.grid, Xs, XIs))


__all__ += ["transported", "stable_dt", "transport_part", "drift_part", "diffusion_part",
            "spectral_radius"]
