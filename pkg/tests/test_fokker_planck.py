import warnings

import numpy as np
import pytest

from lindblad_egorov import fokker_planck as fp
from lindblad_egorov import lindblad as lb
from lindblad_egorov.phase_space import Symbol, make_grid, sample
from lindblad_egorov.presets import HARMONIC, SymbolExpr, get_preset, instantiate
from lindblad_egorov.validation import localized_symbol
from lindblad_egorov.weyl import quantize, symbol_array


@pytest.fixture
def grid():
    return make_grid(128, 0.0, 5.0, 0.0, 1 / 16)


def _pair(name, grid, gamma=1.0):
    p, ells, _ = instantiate(get_preset(name), grid, check=False)
    return lb.build_lindbladian(p, ells, gamma), fp.build_fp(p, ells, gamma)


def _ip(a, b, grid):
    return np.vdot(b, a) * grid.cell


@pytest.mark.parametrize("name", ["harmonic_exact", "position_momentum", "damped_oscillator"])
def test_quadratic_presets_intertwine_exactly(name, grid):
    qgen, cgen = _pair(name, grid)
    a = localized_symbol(grid, width=0.35)
    quantum = symbol_array(lb.apply(qgen, quantize(a)).data, grid)
    classical = fp.apply_q(cgen, a).values
    assert np.abs(quantum - classical).max() < 1e-9 * np.abs(classical).max()


def test_generator_parts_have_the_right_signs(grid):
    _, gen = _pair("damped_oscillator", grid)
    a = localized_symbol(grid, width=0.35).values
    for part in (fp.transport_part, fp.drift_part):
        assert abs(np.real(_ip(part(gen, a), a, grid))) < 1e-10 * np.real(_ip(a, a, grid))
    assert np.real(_ip(fp.diffusion_part(gen, a), a, grid)) < 0


def test_friction_term_on_constants(grid):
    _, gen = _pair("damped_oscillator", grid, gamma=0.7)
    one = Symbol(grid, np.ones((grid.n_points, grid.n_points), dtype=complex))
    assert np.allclose(fp.apply_q(gen, one).values, 2 * 0.7 * gen.mu.values, atol=1e-12)
    assert gen.M0 == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("poly_sets, c", [
    ([{(1, 0): 1.0}, {(0, 1): 1.0}], 2.0),
    ([{(1, 0): 1.0, (0, 1): 1j}], 2.0),
    ([{(1, 0): 2**-0.5, (0, 1): 1j * 2**-0.5}], 1.0),
    ([{(1, 0): 1.0}], 0.0),
])
def test_nondegeneracy_constant(poly_sets, c, grid):
    ells = [Symbol.from_parts(grid, p) for p in poly_sets]
    assert fp.nondegeneracy_constant(ells) == pytest.approx(c, abs=1e-10)


def test_hamilton_field_of_harmonic(grid):
    vx, vxi = fp.hamilton_field(Symbol.from_parts(grid, HARMONIC))
    X, XI = grid.mesh
    assert np.allclose(vx, XI) and np.allclose(vxi, -X)


def test_mass_is_conserved_and_l2_decays():
    g = make_grid(96, 0.0, 3.0, 0.0, 1 / 32)
    _, gen = _pair("position_momentum", g)
    a0 = sample(lambda X, XI: 2 * np.exp(-((X - 0.5) ** 2 + XI**2) / g.h), g)
    traj = fp.evolve_fp(gen, a0, 0.5, fp.stable_dt(gen), save_every=20)
    assert np.abs(traj.mass / traj.mass[0] - 1).max() < 1e-10
    assert np.all(np.diff(traj.l2) <= 1e-8 * traj.l2[0])
    ledger = fp.energy_ledger(traj, gen)
    assert ledger["decay_ok"] and ledger["budget_sharp_ok"]
    assert set(ledger["sobolev_constants"]) == {0.0, 1.0, 2.0}


def test_unstable_step_detected():
    g = make_grid(64, 0.0, 2.5, 0.0, 1 / 32)
    _, gen = _pair("position_momentum", g)
    a0 = sample(lambda X, XI: 2 * np.exp(-((X - 0.5) ** 2 + XI**2) / g.h), g)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        with pytest.raises(lb.StabilityError):
            fp.evolve_fp(gen, a0, 2.0, 20 * fp.stable_dt(gen))


def test_harmonic_flow_is_a_rotation():
    t = np.pi / 3
    res = fp.flow_jacobian(SymbolExpr.from_poly(HARMONIC), (1.0, 0.0), t, dt=1e-3)
    rot = np.array([[np.cos(t), np.sin(t)], [-np.sin(t), np.cos(t)]])
    assert np.abs(res.jacobian - rot).max() < 1e-10
    assert np.allclose(res.endpoint, [np.cos(t), -np.sin(t)], atol=1e-10)
    assert res.max_entries.max() <= 1 + 1e-8


def test_hyperbolic_flow_stretches_along_x():
    res = fp.flow_jacobian(get_preset("free_hyperbolic").hamiltonian, (0.0, 0.0), 2.0)
    assert np.abs(res.jacobian - np.diag([np.exp(2.0), np.exp(-2.0)])).max() < 1e-9
    assert res.growth_rate == pytest.approx(1.0, abs=1e-9)


def test_lyapunov_gamma_on_grid_symbols(grid):
    assert fp.lyapunov_gamma(Symbol.from_parts(grid, HARMONIC)) == pytest.approx(1.0)
    hyp = Symbol.from_parts(grid, {(1, 1): 1.0})
    assert fp.lyapunov_gamma(hyp) == pytest.approx(1.0)


def test_technical_condition_vanishes_for_real_or_linear_jumps(grid):
    ells = [Symbol.from_parts(grid, {(1, 0): 1.0, (0, 1): 1j})]
    vals = fp.technical_condition(ells)[0]
    assert vals[2] < 1e-9 and vals[3] < 1e-9


def test_flow_leaving_the_box_is_reported(grid):
    p = Symbol.from_parts(grid, {(1, 1): 1.0})
    with pytest.raises(ValueError, match="left the box"):
        fp.flow_jacobian(p, (1.0, 0.5), 5.0, dt=1e-2)
