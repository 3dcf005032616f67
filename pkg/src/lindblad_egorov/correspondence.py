"""Quantum versus classical evolution: distances, envelopes, sweeps and the corrector."""

from __future__ import annotations

import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from . import fokker_planck as fp
from . import lindblad as lb
from .fokker_planck import lyapunov_gamma
from .phase_space import PhaseSpaceGrid, Symbol, l2_norm, make_grid
from .presets import BOX_FLOOR, EXACT_BOX_FLOOR, _fast_even, get_preset, instantiate
from .weyl import OperatorMatrix, coherent_state, quantize, quantize_array, symbol_array, weyl_symbol

__all__ = [
    "MODES",
    "ExperimentConfig",
    "CorrespondenceReport",
    "hs_distance",
    "theoretical_envelope",
    "run_experiment",
    "scaling_sweep",
    "duhamel_corrector",
    "discretization_floor",
    "IsometryError",
    "lyapunov_gamma",
]

MODES = ("lindblad_vs_fp", "egorov", "exact_case", "corrector")
ISOMETRY_TOL = 1e-9
EDGE_ROUNDOFF = 1e-13


class IsometryError(RuntimeError):
    """The matrix-side and symbol-side distances disagree."""


@dataclass
class ExperimentConfig:
    mode: str = "lindblad_vs_fp"
    preset: str = "anharmonic"
    h: float = 1 / 32
    gamma: float = 1.0
    T: float = 1.0
    dt: float | None = None
    n_points: int | None = None
    x_halfwidth: float | None = None
    z0: tuple | None = None
    samples: int = 20
    C0: float = 1.0
    box_floor: float | None = None
    fit_fraction: float = 0.5
    h_list: list | None = None
    gamma_list: list | None = None
    measure_floor: bool = True

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {', '.join(MODES)}")
        get_preset(self.preset)
        if self.box_floor is None:
            self.box_floor = EXACT_BOX_FLOOR if self.mode == "exact_case" else BOX_FLOOR
        if not 0 < self.h <= 1:
            raise ValueError(f"h must lie in (0, 1], got {self.h}")
        if self.gamma < 0:
            raise ValueError(f"gamma must be >= 0, got {self.gamma}")
        if self.T < 0:
            raise ValueError(f"T must be >= 0, got {self.T}")
        if self.dt is not None and not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}")
        if self.samples < 1:
            raise ValueError("samples must be >= 1")
        if self.h_list is not None:
            self.h_list = [float(v) for v in self.h_list]
            if any(b >= a for a, b in zip(self.h_list, self.h_list[1:])):
                raise ValueError("h_list must be sorted in descending order")
        if self.gamma_list is not None:
            self.gamma_list = [float(v) for v in self.gamma_list]
        if self.z0 is not None:
            self.z0 = tuple(float(v) for v in self.z0)

    @property
    def effective_gamma(self) -> float:
        return 0.0 if self.mode == "egorov" else float(self.gamma)

    def replace(self, **kw) -> "ExperimentConfig":
        d = asdict(self)
        d.update(kw)
        return ExperimentConfig(**d)

    def to_dict(self) -> dict:
        d = asdict(self)
        if d["z0"] is not None:
            d["z0"] = list(d["z0"])
        return d


@dataclass
class CorrespondenceReport:
    config: dict
    mode: str
    envelope_kind: str
    times: np.ndarray
    hs_distance: np.ndarray
    envelope: np.ndarray
    Cfit: float
    trace_defect: np.ndarray
    herm_defect: np.ndarray
    l2_classical: np.ndarray
    hs_quantum: np.ndarray
    grid: dict
    constants: dict
    audit: dict
    diagnostics: dict = field(default_factory=dict)
    corrector: dict | None = None
    sweep: dict | None = None
    floor: dict | None = None

    def rows(self) -> list[tuple]:
        return list(zip(self.times, self.hs_distance, self.envelope, self.trace_defect,
                        self.herm_defect, self.l2_classical, self.hs_quantum))

    def to_dict(self) -> dict:
        return _jsonable(asdict(self))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


# -- distances and envelopes -------------------------------------------------------

def hs_distance(A: OperatorMatrix, a: Symbol, tol: float = ISOMETRY_TOL) -> float:
    """``||A - Op(a)||_HS``, cross-checked against ``(2 pi h)^(-1/2) ||sigma_A - a||_L2``."""
    if not A.grid.same_as(a.grid):
        raise ValueError("grid mismatch between operator and symbol")
    grid = A.grid
    d = float(np.linalg.norm(A.data - quantize(a).data))
    cross = (2 * np.pi * grid.h) ** -0.5 * l2_norm(symbol_array(A.data, grid) - a.values, grid)
    scale = max(d, float(np.linalg.norm(A.data)), np.finfo(float).tiny)
    if abs(d - cross) > tol * scale:
        raise IsometryError(f"HS distance {d:.17g} disagrees with symbol-side value {cross:.17g}")
    return d


def envelope_shape(kind: str, M0: float, Gamma: float, h: float, gamma: float, C0: float, t):
    t = np.asarray(t, dtype=float)
    if kind in ("t21", "nofric"):
        if gamma <= 0:
            raise ValueError(f"the {kind} envelope requires gamma > 0")
        base = t * (gamma + gamma**-1.5) * math.sqrt(h)
        if kind == "t21":
            return np.exp((M0 + C0 * h) * gamma * t) * base * (1 + t * gamma**1.5 * math.sqrt(h))
        return np.exp(C0 * h**2 * gamma * t) * base
    if kind == "egorov":
        return np.exp(3 * Gamma * t) * math.sqrt(h)
    raise ValueError(f"unknown envelope {kind!r}")


def theoretical_envelope(mode: str, M0: float, Gamma: float, h: float, gamma: float,
                         C0: float, Cfit: float, t):
    """Evaluate the ``t21``, ``nofric`` or ``egorov`` bound with constant ``Cfit``."""
    return Cfit * envelope_shape(mode, M0, Gamma, h, gamma, C0, t)


def _envelope_kind(mode: str, gamma: float, friction_free: bool) -> str:
    if mode == "egorov" or gamma == 0:
        return "egorov"
    return "nofric" if friction_free else "t21"


def fit_constant(t, d, shape, window: float) -> tuple[float, dict]:
    """Least-squares ``Cfit`` on ``t <= window`` and the inflation needed beyond it."""
    t, d, shape = map(np.asarray, (t, d, shape))
    fit = (t <= window + 1e-12) & (shape > 0)
    if not fit.any():
        return 0.0, {"fit_points": 0}
    C = float(np.dot(d[fit], shape[fit]) / np.dot(shape[fit], shape[fit]))
    rest = (t > window + 1e-12) & (shape > 0)
    ratio = d[rest] / (C * shape[rest]) if rest.any() and C > 0 else np.zeros(0)
    inflation = float(max(ratio.max(), 1.0)) if ratio.size else 1.0
    return C, {"fit_points": int(fit.sum()), "fit_window": float(window),
               "inflation_needed": inflation, "envelope_ok": inflation <= 2.0}


# -- experiment plumbing -----------------------------------------------------------

@dataclass
class _Setup:
    cfg: ExperimentConfig
    grid: PhaseSpaceGrid
    p: Symbol
    ells: list
    constants: dict
    qgen: lb.LindbladGenerator
    cgen: fp.FokkerPlanckGenerator
    A0: OperatorMatrix
    a0: Symbol
    z0: tuple
    dt: float
    steps_per_sample: int


def _grid_for(cfg: ExperimentConfig) -> PhaseSpaceGrid:
    preset = get_preset(cfg.preset)
    gamma = cfg.effective_gamma
    if cfg.n_points is None and cfg.x_halfwidth is None:
        return preset.recommended_grid(cfg.h, gamma, cfg.T, cfg.z0, cfg.box_floor)
    base = preset.recommended_grid(cfg.h, gamma, cfg.T, cfg.z0, cfg.box_floor)
    N = cfg.n_points or base.n_points
    half = cfg.x_halfwidth or base.x_halfwidth
    return make_grid(N, 0.0, half, 0.0, cfg.h)


def _setup(cfg: ExperimentConfig, dt_scale: float = 1.0, grid: PhaseSpaceGrid | None = None) -> _Setup:
    preset = get_preset(cfg.preset)
    grid = grid or _grid_for(cfg)
    p, ells, constants = instantiate(preset, grid)
    gamma = cfg.effective_gamma
    qgen = lb.build_lindbladian(p, ells, gamma, C0=cfg.C0)
    cgen = fp.build_fp(p, ells, gamma)
    z0 = cfg.z0 or preset.z0
    cs = coherent_state(z0, grid, floor=cfg.box_floor)
    A0 = cs.projector
    a0 = weyl_symbol(A0)
    interval = cfg.T / cfg.samples if cfg.T > 0 else 1.0
    dt_max = cfg.dt or min(lb.stable_dt(qgen), fp.stable_dt(cgen))
    steps = max(1, math.ceil(interval / dt_max - 1e-9))
    steps = max(1, int(round(steps / dt_scale)))
    dt = interval / steps
    return _Setup(cfg, grid, p, ells, constants, qgen, cgen, A0, a0, tuple(z0), dt, steps)


def _edge_amplitude(values: np.ndarray) -> float:
    """Largest boundary magnitude relative to the peak."""
    peak = float(np.abs(values).max())
    if peak == 0:
        return 0.0
    edge = max(np.abs(values[0]).max(), np.abs(values[-1]).max(),
               np.abs(values[:, 0]).max(), np.abs(values[:, -1]).max())
    return float(edge / peak)


def _audit(s: _Setup, final_symbol: Symbol, final_A: OperatorMatrix) -> dict:
    audit = s.cgen.hypothesis_audit()
    audit["box_edge_symbol"] = _edge_amplitude(final_symbol.values)
    audit["box_edge_quantum"] = _edge_amplitude(symbol_array(final_A.data, s.grid))
    audit["box_floor"] = s.cfg.box_floor
    # edge values below EDGE_ROUNDOFF are FFT noise, not leakage
    limit = max(s.cfg.box_floor, EDGE_ROUNDOFF)
    audit["box_ok"] = max(audit["box_edge_symbol"], audit["box_edge_quantum"]) <= limit
    audit["regime_gamma_lt_1_over_h"] = s.qgen.regime_ok
    audit["C0"] = s.cfg.C0
    return audit


def _evolve_pair(s: _Setup):
    T = s.cfg.T
    qt = lb.evolve(s.qgen, s.A0, T, s.dt, save_every=s.steps_per_sample)
    ct = fp.evolve_fp(s.cgen, s.a0, T, s.dt, save_every=s.steps_per_sample)
    return qt, ct


def run_experiment(cfg: ExperimentConfig) -> CorrespondenceReport:
    """Evolve ``A(t)`` and ``a(t)`` from matched data and compare them in HS norm."""
    if cfg.mode == "corrector":
        _, report = duhamel_corrector(cfg)
        return report
    clock = time.perf_counter()
    s = _setup(cfg)
    qt, ct = _evolve_pair(s)
    elapsed = time.perf_counter() - clock
    d = np.array([hs_distance(A, a) for A, a in zip(qt.states, ct.symbols)])
    report = _assemble(s, qt, ct, d)
    report.diagnostics["wall_seconds"] = elapsed
    if cfg.mode == "exact_case" and cfg.measure_floor:
        report.floor = discretization_floor(cfg, baseline=(qt, ct, d))
    return report


def _constants(s: _Setup) -> dict:
    out = {k: v for k, v in s.constants.items() if k != "technical_condition"}
    out.update({"M0": s.cgen.M0, "c": s.cgen.c, "contraction_M": s.qgen.contraction_M,
                "epsilon": s.cgen.epsilon})
    return out


def _assemble(s: _Setup, qt, ct, d) -> CorrespondenceReport:
    cfg = s.cfg
    gamma = cfg.effective_gamma
    kind = _envelope_kind(cfg.mode, gamma, s.cgen.friction_free)
    times = qt.times
    shape = envelope_shape(kind, s.cgen.M0, s.constants["Gamma"], cfg.h, gamma, cfg.C0, times)
    C, fit_info = fit_constant(times, d, shape, cfg.fit_fraction * cfg.T)
    save = np.isin(np.round(qt.step_times, 12), np.round(times, 12))
    trace_def = np.abs(qt.trace[save] - 1.0)
    herm = qt.herm_defect[save]
    l2c = ct.l2[np.isin(np.round(ct.step_times, 12), np.round(times, 12))]
    constants = _constants(s)
    report = CorrespondenceReport(
        config=cfg.to_dict(), mode=cfg.mode, envelope_kind=kind, times=times, hs_distance=d,
        envelope=C * shape, Cfit=C, trace_defect=trace_def, herm_defect=herm,
        l2_classical=l2c, hs_quantum=np.array([np.linalg.norm(A.data) for A in qt.states]),
        grid=s.grid.describe(), constants=constants,
        audit=_audit(s, ct.symbols[-1], qt.states[-1]),
        diagnostics={
            "dt": s.dt, "steps": int(qt.step_times.size - 1), "z0": list(s.z0),
            "max_trace_defect_all_steps": float(np.abs(qt.trace - 1).max()),
            "max_herm_defect_all_steps": float(qt.herm_defect.max()),
            "min_eigenvalue_final": float(np.linalg.eigvalsh(
                0.5 * (qt.states[-1].data + qt.states[-1].data.conj().T))[0]),
            "contraction": lb.contraction_report(qt, s.qgen),
            "energy": fp.energy_ledger(ct, s.cgen),
            "envelope_fit": fit_info,
        },
    )
    return report


def discretization_floor(cfg: ExperimentConfig, baseline=None) -> dict:
    """Numerical floor of ``d(t)`` from step halving and grid refinement.

    ``dt_floor`` is ``max_t ||A_dt - A_dt/2||_HS``.  ``dt_floor_half`` repeats
    the measurement one level finer so the ratio shows how the floor scales
    with the step.  ``grid_floor`` is ``max_t |d_N - d_N'|`` on a grid with about 25%
    more points and both windows enlarged.  ``floor`` is the larger of the step and grid parts.
    """
    s1 = _setup(cfg)
    qt1, ct1 = baseline[:2] if baseline else _evolve_pair(s1)
    d1 = baseline[2] if baseline else np.array(
        [hs_distance(A, a) for A, a in zip(qt1.states, ct1.symbols)])
    s2 = _setup(cfg, dt_scale=0.5, grid=s1.grid)
    qt2 = lb.evolve(s2.qgen, s2.A0, cfg.T, s2.dt, save_every=s2.steps_per_sample)
    s4 = _setup(cfg, dt_scale=0.25, grid=s1.grid)
    qt4 = lb.evolve(s4.qgen, s4.A0, cfg.T, s4.dt, save_every=s4.steps_per_sample)
    f1 = max(np.linalg.norm(a.data - b.data) for a, b in zip(qt1.states, qt2.states))
    f2 = max(np.linalg.norm(a.data - b.data) for a, b in zip(qt2.states, qt4.states))
    g = s1.grid
    n_fine = _fast_even(math.ceil(1.25 * g.n_points))
    fine = make_grid(n_fine, g.x_center, g.x_halfwidth * math.sqrt(n_fine / g.n_points),
                     g.xi_center, g.h)
    sf = _setup(cfg, grid=fine)
    qf, cf = _evolve_pair(sf)
    df = np.array([hs_distance(A, a) for A, a in zip(qf.states, cf.symbols)])
    grid_floor = float(np.abs(df - d1).max())
    floor = max(f1, grid_floor)
    return {"dt": s1.dt, "dt_floor": float(f1), "dt_floor_half": float(f2),
            "dt_halving_ratio": float(f2 / f1) if f1 > 0 else float("nan"),
            "grid_floor": grid_floor, "floor": float(floor),
            "max_distance": float(d1.max()),
            "below_10x_floor": bool(d1.max() < 10 * floor)}


# -- sweeps ------------------------------------------------------------------------

def _slope_fit(xs, ys) -> dict:
    lx, ly = np.log(xs), np.log(ys)
    res = stats.linregress(lx, ly)
    resid = ly - (res.intercept + res.slope * lx)
    n = len(xs)
    tq = stats.t.ppf(0.975, n - 2) if n > 2 else float("inf")
    return {"slope": float(res.slope), "intercept": float(res.intercept),
            "stderr": float(res.stderr), "rvalue": float(res.rvalue),
            "residual_rms": float(np.sqrt(np.mean(resid**2))),
            "confidence_95": [float(res.slope - tq * res.stderr), float(res.slope + tq * res.stderr)]}


def _resolve_threads(threads: int | None) -> int:
    import os
    if threads is None:
        env = os.environ.get("LINDBLAD_EGOROV_THREADS")
        threads = int(env) if env else 1
    return max(1, int(threads))


def scaling_sweep(cfg: ExperimentConfig, threads: int | None = None) -> CorrespondenceReport:
    """Run ``cfg`` across ``h_list`` or ``gamma_list`` and fit log-log slopes at ``t = T``."""
    if cfg.h_list is not None and cfg.gamma_list is not None:
        raise ValueError("sweep either h or gamma, not both")
    if cfg.h_list is not None:
        axis, values = "h", list(cfg.h_list)
    elif cfg.gamma_list is not None:
        axis, values = "gamma", sorted(cfg.gamma_list)
    else:
        raise ValueError("a sweep needs h_list or gamma_list")
    if len(values) < 3:
        raise ValueError(f"a sweep needs at least 3 points, got {len(values)}")
    point_cfgs = [cfg.replace(**{axis: v, "h_list": None, "gamma_list": None,
                                 "measure_floor": cfg.mode == "exact_case"}) for v in values]
    threads = _resolve_threads(threads)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = dict(zip(values, pool.map(run_experiment, point_cfgs)))
    else:
        results = {v: run_experiment(c) for v, c in zip(values, point_cfgs)}
    order = sorted(values, reverse=(axis == "h"))
    reports = [results[v] for v in order]
    finals = np.array([r.hs_distance[-1] for r in reports])
    sweep: dict = {"axis": axis, "values": order, "final_distance": finals,
                   "t": cfg.T, "points": [r.to_dict() for r in reports]}
    if np.all(finals > 0):
        sweep["fit"] = _slope_fit(np.array(order), finals)
    if axis == "gamma":
        asc = np.argsort(order)
        dd = finals[asc]
        sweep["monotone_nonincreasing"] = bool(np.all(dd[1:] <= 1.05 * dd[:-1]))
    floors = [r.floor["floor"] for r in reports if r.floor]
    if floors:
        sweep["floors"] = floors
        sweep["floor_dominated"] = bool(np.all(finals < 10 * np.array(floors)))
    last = reports[0]
    rows = [(cfg.T, r.hs_distance[-1], r.envelope[-1], r.trace_defect[-1], r.herm_defect[-1],
             r.l2_classical[-1], r.hs_quantum[-1]) for r in reports]
    cols = list(zip(*rows))
    return CorrespondenceReport(
        config=cfg.to_dict(), mode=cfg.mode, envelope_kind=last.envelope_kind,
        times=np.array(cols[0]), hs_distance=np.array(cols[1]), envelope=np.array(cols[2]),
        Cfit=float("nan"), trace_defect=np.array(cols[3]), herm_defect=np.array(cols[4]),
        l2_classical=np.array(cols[5]), hs_quantum=np.array(cols[6]),
        grid=last.grid, constants=last.constants, audit=last.audit,
        diagnostics={"threads": threads}, sweep=sweep)


# -- first Duhamel corrector ------------------------------------------------------

def defect_symbol(s: _Setup, a: np.ndarray) -> np.ndarray:
    """``e_1 = Q a - sigma(L Op(a))``."""
    K = quantize_array(a, s.grid)
    LA = lb._apply_array(s.qgen, K)
    return fp._apply_array(s.cgen, a) - symbol_array(LA, s.grid)


def duhamel_corrector(cfg: ExperimentConfig):
    """First corrector ``a_1(t) = -int_0^t U(t-s) e_1(s) ds`` along ``a_0(t) = U(t) a_0``.

    ``a_0`` and ``a_1`` are advanced together by RK4 on
    ``d/dt (a_0, a_1) = (Q a_0, Q a_1 - e_1(a_0))``.  Returns the corrector
    trajectory and a report whose ``corrector`` entry holds ``d_1(t)``.
    """
    cfg = cfg if cfg.mode == "corrector" else cfg.replace(mode="corrector")
    s = _setup(cfg)
    N = s.grid.n_points

    def rhs(y):
        a0, a1 = y[:N], y[N:]
        q0 = fp._apply_array(s.cgen, a0)
        K = quantize_array(a0, s.grid)
        e1 = q0 - symbol_array(lb._apply_array(s.qgen, K), s.grid)
        return np.concatenate([q0, fp._apply_array(s.cgen, a1) - e1])

    y = np.concatenate([np.asarray(s.a0.values, dtype=complex), np.zeros((N, N), dtype=complex)])
    steps = lb.step_schedule(cfg.T, s.dt) if cfg.T > 0 else np.zeros(0)
    qt = lb.evolve(s.qgen, s.A0, cfg.T, s.dt, save_every=s.steps_per_sample)
    a0s, a1s = [Symbol(s.grid, y[:N].copy())], [Symbol(s.grid, y[N:].copy())]
    t = 0.0
    step_t = [0.0]
    defect_norm = [l2_norm(defect_symbol(s, y[:N]), s.grid)]
    for i, st in enumerate(steps, 1):
        y = lb._rk4_step(rhs, y, st)
        t = cfg.T if i == len(steps) else i * s.dt
        step_t.append(t)
        if i % s.steps_per_sample == 0 or i == len(steps):
            a0s.append(Symbol(s.grid, y[:N].copy()))
            a1s.append(Symbol(s.grid, y[N:].copy()))
            defect_norm.append(l2_norm(defect_symbol(s, y[:N]), s.grid))
    d = np.array([hs_distance(A, a) for A, a in zip(qt.states, a0s)])
    d1 = np.array([hs_distance(A, a + b) for A, a, b in zip(qt.states, a0s, a1s)])
    l2 = np.array([l2_norm(a) for a in a0s])
    ct = fp.ClassicalTrajectory(qt.times, a0s, np.array(step_t), l2, np.zeros_like(l2),
                                np.zeros_like(l2), {}, s.dt)
    corr = fp.ClassicalTrajectory(qt.times, a1s, qt.times.copy(),
                                  np.array([l2_norm(a) for a in a1s]), np.zeros_like(l2),
                                  np.zeros_like(l2), {}, s.dt)
    report = _assemble_corrector(s, qt, ct, d, d1, np.array(defect_norm))
    return corr, report


def _assemble_corrector(s, qt, ct, d, d1, defect_norm) -> CorrespondenceReport:
    cfg = s.cfg
    gamma = cfg.effective_gamma
    kind = _envelope_kind(cfg.mode, gamma, s.cgen.friction_free)
    times = qt.times
    shape = envelope_shape(kind, s.cgen.M0, s.constants["Gamma"], cfg.h, gamma, cfg.C0, times)
    C, fit_info = fit_constant(times, d, shape, cfg.fit_fraction * cfg.T)
    save = np.isin(np.round(qt.step_times, 12), np.round(times, 12))
    ratio = np.divide(d1, d, out=np.zeros_like(d1), where=d > 0)
    constants = _constants(s)
    return CorrespondenceReport(
        config=cfg.to_dict(), mode=cfg.mode, envelope_kind=kind, times=times, hs_distance=d,
        envelope=C * shape, Cfit=C, trace_defect=np.abs(qt.trace[save] - 1.0),
        herm_defect=qt.herm_defect[save], l2_classical=ct.l2,
        hs_quantum=np.array([np.linalg.norm(A.data) for A in qt.states]),
        grid=s.grid.describe(), constants=constants,
        audit=_audit(s, ct.symbols[-1], qt.states[-1]),
        diagnostics={"dt": s.dt, "steps": int(qt.step_times.size - 1), "z0": list(s.z0),
                     "max_trace_defect_all_steps": float(np.abs(qt.trace - 1).max()),
                     "max_herm_defect_all_steps": float(qt.herm_defect.max()),
                     "envelope_fit": fit_info},
        corrector={"d1": d1, "ratio": ratio, "defect_l2": defect_norm,
                   "improves": bool(np.all(d1[1:] <= d[1:])) if d.size > 1 else True,
                   "final_ratio": float(ratio[-1]) if ratio.size else 0.0})
