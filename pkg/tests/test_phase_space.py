import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lindblad_egorov.phase_space import (Symbol, evaluate, l2_norm, make_grid, poisson_bracket,
                                         poly_eval, poly_mul, sample, sobolev_norm,
                                         spectral_derivative, trig_interpolate)


def test_grid_duality_relation():
    g = make_grid(96, 0.3, 3.0, 0.0, 1 / 32)
    assert g.dx * g.dxi * g.n_points == pytest.approx(2 * np.pi * g.h, rel=1e-14)
    assert g.x[0] == pytest.approx(0.3 - 3.0)
    assert g.xi[g.n_points // 2] == 0.0


def test_xi_center_snaps_to_dual_lattice():
    g = make_grid(32, 0.0, 2.0, 0.37, 1 / 8)
    assert g.xi_center / g.dxi == pytest.approx(round(g.xi_center / g.dxi), abs=1e-12)


@pytest.mark.parametrize("kw", [dict(n_points=33), dict(n_points=0), dict(x_halfwidth=-1.0),
                                dict(h=0.0), dict(h=1.5)])
def test_make_grid_rejects_bad_input(kw):
    args = dict(n_points=32, x_center=0.0, x_halfwidth=2.0, xi_center=0.0, h=0.1)
    args.update(kw)
    with pytest.raises(ValueError):
        make_grid(**args)


def test_symbol_shape_and_finiteness_checked(grid64):
    with pytest.raises(ValueError):
        Symbol(grid64, np.zeros((3, 3)))
    bad = np.zeros((64, 64))
    bad[0, 0] = np.nan
    with pytest.raises(ValueError):
        Symbol(grid64, bad)


def test_spectral_derivative_exact_on_fourier_modes(grid64):
    kx = 2 * np.pi * 3 / grid64.L
    a = sample(lambda X, XI: np.sin(kx * X) * np.ones_like(XI), grid64)
    d = spectral_derivative(a, "x")
    X, _ = grid64.mesh
    assert np.abs(d.values - kx * np.cos(kx * X)).max() < 1e-12


def test_polynomial_derivatives_are_exact(grid64):
    a = Symbol.from_parts(grid64, {(2, 1): 1.0})
    X, XI = grid64.mesh
    assert np.allclose(spectral_derivative(a, "x").values, 2 * X * XI, atol=1e-12)
    assert np.allclose(spectral_derivative(a, "xi").values, X**2, atol=1e-12)


def test_poisson_bracket_sign_convention(grid64):
    x = Symbol.from_parts(grid64, {(1, 0): 1.0})
    xi = Symbol.from_parts(grid64, {(0, 1): 1.0})
    assert np.allclose(poisson_bracket(x, xi).values, -1.0)


@pytest.fixture
def square_grid():
    """Both windows span [-5, 5)."""
    return make_grid(128, 0.0, 5.0, 0.0, 1 / 8)


def test_l2_norm_of_gaussian(square_grid):
    a = sample(lambda X, XI: np.exp(-(X**2 + XI**2)), square_grid)
    assert l2_norm(a) == pytest.approx(np.sqrt(np.pi / 2), rel=1e-12)


def test_sobolev_norm_reduces_and_grows(square_grid):
    a = sample(lambda X, XI: np.exp(-(X**2 + XI**2)), square_grid)
    assert sobolev_norm(a, 0, 0.1) == pytest.approx(l2_norm(a), rel=1e-14)
    assert sobolev_norm(a, 1, 0.1) > l2_norm(a)
    with pytest.raises(ValueError):
        sobolev_norm(a, -1, 0.1)


def test_trig_interpolate_hits_nodes_and_band_limited_values(grid64):
    kx = 2 * np.pi * 2 / grid64.L
    kxi = 2 * np.pi * 1 / grid64.xi_width
    f = lambda X, XI: np.cos(kx * X) * np.sin(kxi * (XI - grid64.xi[0]))
    a = sample(f, grid64)
    X, XI = grid64.mesh
    assert np.abs(trig_interpolate(a.values, grid64, X, XI) - a.values).max() < 1e-12
    pts = np.array([0.123, -1.7]), np.array([0.4, -0.9])
    assert np.allclose(trig_interpolate(a.values, grid64, *pts), f(*pts), atol=1e-12)


def test_evaluate_mixes_exact_poly_and_interpolated_remainder(square_grid):
    a = Symbol.from_parts(square_grid, {(3, 0): 1.0}, lambda X, XI: np.exp(-(X**2 + XI**2)))
    x0, xi0 = 0.31, -0.2
    # d_x^3 x^3 = 6 and d_x d_xi exp(-r^2) = 4 x xi exp(-r^2)
    val = evaluate(a, 3, 0, x0, xi0)
    gauss3 = (-8 * x0**3 + 12 * x0) * np.exp(-(x0**2 + xi0**2))
    assert val == pytest.approx(6.0 + gauss3, rel=1e-9)
    mixed = evaluate(a, 1, 1, x0, xi0)
    assert mixed == pytest.approx(4 * x0 * xi0 * np.exp(-(x0**2 + xi0**2)), rel=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)),
                       st.floats(-2, 2, allow_nan=False), max_size=4),
       st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)),
                       st.floats(-2, 2, allow_nan=False), max_size=4),
       st.floats(-2, 2), st.floats(-2, 2))
def test_poly_mul_matches_pointwise_product(p, q, x, xi):
    lhs = poly_eval(poly_mul(p, q), np.array(x), np.array(xi))
    rhs = poly_eval(p, np.array(x), np.array(xi)) * poly_eval(q, np.array(x), np.array(xi))
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-10)
