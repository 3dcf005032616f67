import warnings

import numpy as np
import pytest

from lindblad_egorov import lindblad as lb
from lindblad_egorov.phase_space import Symbol, make_grid
from lindblad_egorov.presets import get_preset, instantiate, preset_names
from lindblad_egorov.validation import random_matrix
from lindblad_egorov.weyl import OperatorMatrix, coherent_state


def _generator(name, grid, gamma=1.0):
    p, ells, _ = instantiate(get_preset(name), grid, check=False)
    return lb.build_lindbladian(p, ells, gamma)


@pytest.fixture
def grid():
    return make_grid(64, 0.0, 4.0, 0.0, 1 / 32)


@pytest.mark.parametrize("name", ["harmonic_exact", "position_momentum", "damped_oscillator",
                                  "free_hyperbolic"])
@pytest.mark.parametrize("adjoint", [False, True])
def test_fast_path_matches_dense_reference(name, adjoint, grid, rng):
    gen = _generator(name, grid)
    A = random_matrix(grid, rng)
    fast = lb.apply(gen, A, adjoint).data
    ref = lb.apply_reference(gen, A, adjoint).data
    assert np.abs(fast - ref).max() < 1e-12 * np.abs(ref).max()


def test_generator_is_trace_free(grid, rng):
    gen = _generator("damped_oscillator", grid)
    out = lb.apply(gen, random_matrix(grid, rng)).data
    assert abs(np.trace(out)) < 1e-12 * np.abs(out).max()


def test_adjoint_duality(grid, rng):
    gen = _generator("harmonic_exact", grid)
    A, B = random_matrix(grid, rng), random_matrix(grid, rng)
    lhs = np.vdot(B.data, lb.apply(gen, A).data)
    rhs = np.vdot(lb.apply(gen, B, adjoint=True).data, A.data)
    assert abs(lhs - rhs) < 1e-12 * abs(lhs)


@pytest.mark.parametrize("name", preset_names())
def test_dissipation_identities(name, rng):
    preset = get_preset(name)
    g = make_grid(64, 0.0, max(4.0, preset.min_halfwidth), 0.0, 1 / 32)
    gen = _generator(name, g)
    for _ in range(3):
        A = random_matrix(g, rng)
        assert lb.dissipation_residual(gen, A) < 1e-10
        assert lb.dissipation_residual(gen, A, adjoint=True) < 1e-10


def test_friction_bound_values(grid):
    x = Symbol.from_parts(grid, {(1, 0): 1.0})
    damped = Symbol.from_parts(grid, {(1, 0): 1.0, (0, 1): 1j})
    assert lb.friction_bound([x]) == (0.0, True)
    M0, free = lb.friction_bound([damped])
    assert M0 == pytest.approx(1.0, abs=1e-12) and not free


def test_build_rejects_bad_input(grid):
    p, ells, _ = instantiate(get_preset("position_momentum"), grid)
    with pytest.raises(ValueError, match="gamma"):
        lb.build_lindbladian(p, ells, -0.1)
    with pytest.raises(ValueError, match="h="):
        lb.build_lindbladian(p, ells, 1.0, h=0.5)
    complex_p = Symbol.from_parts(grid, {(1, 1): 1j})
    with pytest.raises(ValueError, match="not real"):
        lb.build_lindbladian(complex_p, ells, 1.0)
    with pytest.warns(UserWarning, match="regime"):
        lb.build_lindbladian(p, ells, 40.0)


def test_step_schedule():
    s = lb.step_schedule(1.0, 0.3)
    assert s.sum() == pytest.approx(1.0, abs=1e-15)
    assert s[-1] == pytest.approx(0.1)
    assert lb.step_schedule(0.0, 0.1).size == 0
    with pytest.raises(ValueError):
        lb.step_schedule(1.0, 0.0)
    with pytest.raises(ValueError):
        lb.step_schedule(-1.0, 0.1)


def test_evolution_conserves_trace_and_hermiticity():
    g = make_grid(80, 0.0, 2.5, 0.0, 1 / 32)
    gen = _generator("position_momentum", g)
    A0 = coherent_state((0.5, 0.0), g).projector
    traj = lb.evolve(gen, A0, 0.5, lb.stable_dt(gen), save_every=10)
    assert np.abs(traj.trace - 1).max() < 1e-12
    assert traj.herm_defect.max() < 1e-12
    rep = lb.contraction_report(traj, gen)
    assert rep["ok"]
    assert np.all(np.diff(traj.hs) <= 1e-8 * traj.hs[0])
    eig = np.linalg.eigvalsh(traj.states[-1].data)
    assert eig.min() > -1e-10


def test_unstable_step_is_detected():
    g = make_grid(64, 0.0, 2.5, 0.0, 1 / 32)
    gen = _generator("position_momentum", g)
    A0 = coherent_state((0.5, 0.0), g).projector
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(lb.StabilityError):
            lb.evolve(gen, A0, 2.0, 20 * lb.stable_dt(gen))


def test_grid_mismatch(grid):
    gen = _generator("position_momentum", grid)
    other = make_grid(64, 0.0, 4.0, 0.0, 1 / 16)
    with pytest.raises(ValueError):
        lb.apply(gen, OperatorMatrix(other, np.eye(64)))
