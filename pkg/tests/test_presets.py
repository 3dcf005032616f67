import numpy as np
import pytest
import sympy as sp

from lindblad_egorov.phase_space import make_grid
from lindblad_egorov.presets import (HARMONIC, SymbolExpr, anharmonic, get_preset, instantiate,
                                     preset_names, x)
from lindblad_egorov.weyl import coherent_state

EXPECTED = {
    # name: (M0, Gamma, c, friction_free)
    "harmonic_exact": (0.5, 1.0, 1.0, False),
    "position_momentum": (0.0, 1.0, 2.0, True),
    "damped_oscillator": (1.0, 1.0, 2.0, False),
    "free_hyperbolic": (0.0, 1.0, 2.0, True),
}


def test_catalog_names():
    assert preset_names() == ["harmonic_exact", "position_momentum", "damped_oscillator",
                              "anharmonic", "free_hyperbolic"]


def test_unknown_preset_lists_the_catalog():
    with pytest.raises(KeyError, match="harmonic_exact"):
        get_preset("nope")


@pytest.mark.parametrize("name", sorted(EXPECTED))
def test_certified_constants(name):
    pr = get_preset(name)
    M0, Gamma, c, free = EXPECTED[name]
    assert pr.M0 == pytest.approx(M0, abs=1e-12)
    assert pr.Gamma == pytest.approx(Gamma, abs=1e-12)
    assert pr.c == pytest.approx(c, abs=1e-10)
    assert pr.friction_free is free


def test_anharmonic_gamma_matches_dense_sampling():
    pr = get_preset("anharmonic")
    second = sp.lambdify(x, sp.diff(pr.hamiltonian.expr, x, 2))
    xs = np.linspace(-pr.min_halfwidth, pr.min_halfwidth, 400001)
    dense = max(1.0, float(np.abs(second(xs)).max()))
    assert pr.Gamma == pytest.approx(dense, rel=1e-6)
    assert pr.M0 == 0.0 and pr.c == pytest.approx(2.0)


@pytest.mark.parametrize("h", [1 / 32, 1 / 64])
def test_anharmonic_gamma_recomputed_on_grid(h):
    pr = get_preset("anharmonic")
    _, _, consts = instantiate(pr, pr.recommended_grid(h))
    assert consts["Gamma_grid"] == pytest.approx(pr.Gamma, rel=1e-6)


def test_anharmonic_with_zero_lambda_is_harmonic():
    pr = anharmonic(lam=0.0)
    assert sp.simplify(pr.hamiltonian.expr - SymbolExpr.from_poly(HARMONIC).expr) == 0
    assert pr.min_halfwidth == 0.0


def test_anharmonic_core_is_a_clean_cubic():
    third = sp.lambdify(x, sp.diff(get_preset("anharmonic").hamiltonian.expr, x, 3))
    xs = np.linspace(-0.8, 0.8, 101)
    assert np.abs(third(xs) - 0.6).max() < 0.01


def test_box_too_small_is_rejected():
    pr = get_preset("anharmonic")
    with pytest.raises(ValueError, match="box too small"):
        instantiate(pr, make_grid(64, 0.0, 2.0, 0.0, 1 / 32))


@pytest.mark.parametrize("name", preset_names())
def test_recommended_grid_holds_the_initial_state(name):
    pr = get_preset(name)
    g = pr.recommended_grid(1 / 32)
    assert g.n_points % 2 == 0
    assert g.x_halfwidth >= pr.min_halfwidth
    coherent_state(pr.z0, g)


def test_box_grows_with_time_and_diffusion():
    pr = get_preset("position_momentum")
    assert pr.box_halfwidths(1 / 32, T=5)[0] > pr.box_halfwidths(1 / 32, T=1)[0]
    hyp = get_preset("free_hyperbolic")
    assert hyp.box_halfwidths(1 / 32, T=2)[0] > np.e * hyp.box_halfwidths(1 / 32, T=0)[0]


def test_describe_is_plain_data():
    d = get_preset("damped_oscillator").describe()
    assert d["name"] == "damped_oscillator" and isinstance(d["hamiltonian"], str)
