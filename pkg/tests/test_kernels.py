import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from conftest import bump1
from fracvar import constants as C
from fracvar.geometry import IntervalSet
from fracvar.grid import (GridSpec, ScalarField, VectorField, lp_norm, make_bump,
                          make_gaussian_cutoff, random_bump, random_vector_bump, zero_field)
from fracvar.kernels import (QuadParams, closed_form_indicator_gradient, duality_residual, frac_divergence,
                             frac_gradient, frac_gradient_at, indicator_gradient_quadrature,
                             leibniz_remainder_div, leibniz_remainder_grad, riesz_potential,
                             riesz_potential_at)
from fracvar.spectral import MultiplierSymbol, apply_multiplier
from fracvar.tolerances import default_model

MODEL = default_model()


@pytest.mark.parametrize("a", [0.25, 0.5, 0.75, 0.9, 0.99])
def test_gradient_vs_fourier_oracle_1d(gauss1d, a):
    g = frac_gradient(gauss1d, a)
    o = apply_multiplier(gauss1d, MultiplierSymbol("frac_gradient", a), 4)
    err = lp_norm(g - o, 1) / lp_norm(o, 1)
    assert err <= MODEL.rel("frac_gradient", gauss1d.spec.h, a)


@pytest.mark.parametrize("a", [0.3, 0.7])
def test_gradient_vs_fourier_oracle_2d(bump2d, a):
    g = frac_gradient(bump2d, a)
    o = apply_multiplier(bump2d, MultiplierSymbol("frac_gradient", a), 8)
    err = lp_norm(g - o, 1) / lp_norm(o, 1)
    assert err <= MODEL.rel("frac_gradient", bump2d.spec.h, a)


def test_gradient_pointwise_vs_direct_quadrature():
    # nabla^alpha f(x) = mu int (f(x+z) - f(x-z)) sign(z) |z|^{-1-alpha} dz over z > 0
    a = 0.6
    spec = GridSpec.from_spacing(1, 2.0, 1 / 256)
    f = make_bump(spec, 0.0, 1.0)
    g = frac_gradient(f, a).components[0]
    for x in (-0.75, 0.25, 1.5):
        i = int(round((x + 2.0) / spec.h))
        assert spec.axis[i] == x
        ref = C.mu(1, a) * quad(lambda z: (bump1(x + z) - bump1(x - z)) * z ** (-1 - a), 0, 4,
                                 points=[abs(x + 1), abs(x - 1), abs(1 - x), abs(-1 - x)], limit=200,
                                 epsabs=1e-13)[0]
        assert g[i] == pytest.approx(ref, rel=1e-6)


def test_zero_input_gives_zero():
    z = zero_field(GridSpec(2, 1.0, 17))
    assert np.all(frac_gradient(z, 0.5).magnitude() == 0)


def test_odd_symmetry(bump1d):
    g = frac_gradient(bump1d, 0.4).components[0]
    assert np.allclose(g, -g[::-1], atol=1e-13 * np.abs(g).max())


def test_translation_equivariance():
    spec = GridSpec(1, 4.0, 257)
    k = 17
    f = make_bump(spec, 0.0, 1.0)
    fs = make_bump(spec, k * spec.h, 1.0)
    g, gs = frac_gradient(f, 0.5).components[0], frac_gradient(fs, 0.5).components[0]
    assert np.allclose(gs[k:], g[:-k], atol=1e-12)


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.05, 0.95))
def test_linearity(s, t, a):
    spec = GridSpec(1, 2.0, 65)
    f, g = make_bump(spec, 0.2, 1.0), make_bump(spec, -0.3, 0.8)
    lhs = frac_gradient(s * f + t * g, a).components[0]
    rhs = s * frac_gradient(f, a).components[0] + t * frac_gradient(g, a).components[0]
    assert np.allclose(lhs, rhs, atol=1e-12 * (1 + abs(s) + abs(t)))


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2 ** 31), st.integers(1, 2), st.sampled_from([0.3, 0.5, 0.7, 0.9]))
def test_duality_within_budget(seed, n, a):
    spec = GridSpec(n, 2.0, 65 if n == 1 else 33)
    rng = np.random.default_rng(seed)
    f, phi = random_bump(spec, rng), random_vector_bump(spec, rng)
    d = duality_residual(f, phi, a)
    assert d.residual <= MODEL.tol("duality", spec.h, a, d.scale)


def test_divergence_of_gradient_direction():
    # div^alpha(f e_1) equals the first component of nabla^alpha f
    spec = GridSpec(2, 2.0, 33)
    f = make_bump(spec, (0.1, -0.2), 1.0)
    phi = VectorField(spec, (f.values, np.zeros(spec.shape)), f.support_radius)
    assert np.allclose(frac_divergence(phi, 0.6).values, frac_gradient(f, 0.6).components[0], atol=1e-13)


def riesz_direct(sigma, x):
    c = C.riesz_constant(1, sigma)
    f = lambda y: bump1(y) * abs(x - y) ** (sigma - 1)
    pts = sorted({-1.0, 1.0, min(max(x, -1), 1)})
    return c * sum(quad(f, lo, hi, limit=200, epsabs=1e-13)[0] for lo, hi in zip(pts[:-1], pts[1:]) if hi > lo)


@pytest.mark.parametrize("sigma", [0.3, 0.6])
def test_riesz_potential_vs_direct(sigma):
    spec = GridSpec.from_spacing(1, 2.0, 1 / 256)
    u = make_bump(spec, 0.0, 1.0)
    I = riesz_potential(u, sigma).values
    for x in (-0.5, 0.25, 1.25):
        i = int(round((x + 2.0) / spec.h))
        assert I[i] == pytest.approx(riesz_direct(sigma, x), rel=1e-5)
    # off-grid evaluation agrees away from the support
    assert riesz_potential_at(u, sigma, np.array([1.25]))[0] == pytest.approx(riesz_direct(sigma, 1.25), rel=1e-5)


def test_gradient_at_matches_grid_outside_support():
    spec = GridSpec.from_spacing(1, 4.0, 1 / 64)
    f = make_bump(spec, 0.0, 1.0)
    g = frac_gradient(f, 0.5).components[0]
    x = np.array([2.0, 3.0, -2.5])
    idx = np.rint((x + 4.0) / spec.h).astype(int)
    assert np.allclose(frac_gradient_at(f, 0.5, x)[:, 0], g[idx], rtol=1e-3)


def test_leibniz_identity():
    spec = GridSpec.from_spacing(1, 3.0, 1 / 128)
    eta, f = make_bump(spec, 0.3, 1.2), make_bump(spec, -0.2, 1.0)
    a = 0.5
    prod = ScalarField(spec, eta.values * f.values, 1.5)
    lhs = frac_gradient(prod, a).components[0]
    rhs = (eta.values * frac_gradient(f, a).components[0] + f.values * frac_gradient(eta, a).components[0]
           + leibniz_remainder_grad(eta, f, a).components[0])
    assert np.abs(lhs - rhs).max() / np.abs(lhs).max() < 2e-3
    phi = VectorField(spec, (f.values,), f.support_radius)
    d1 = frac_divergence(VectorField(spec, (prod.values,), 1.5), a).values
    d2 = (eta.values * frac_divergence(phi, a).values + f.values * frac_gradient(eta, a).components[0]
          + leibniz_remainder_div(eta, phi, a).values)
    assert np.abs(d1 - d2).max() / np.abs(d1).max() < 2e-3


@pytest.mark.parametrize("a", [0.25, 0.5, 0.75])
def test_indicator_closed_form_vs_quadrature(a):
    spec = GridSpec.from_spacing(1, 2.0, 1 / 64)
    E = IntervalSet(((0, 1),))
    g = indicator_gradient_quadrature(E, a, spec).components[0]
    x = spec.axis
    keep = (np.abs(x) > 4 * spec.h) & (np.abs(x - 1) > 4 * spec.h)
    ref = closed_form_indicator_gradient(E, a, x[keep])
    assert math.fsum(np.abs(g[keep] - ref)) / math.fsum(np.abs(ref)) <= 1e-3


def test_closed_form_rejects_endpoint():
    with pytest.raises(ValueError):
        closed_form_indicator_gradient(IntervalSet(((0, 1),)), 0.5, np.array([1.0]))


def test_near_field_modes_converge():
    errs = {}
    for mode in ("lattice_zeta", "taylor_ball"):
        q = QuadParams(near_field=mode)
        e = []
        for h in (1 / 16, 1 / 32):
            f = make_gaussian_cutoff(GridSpec.from_spacing(1, 16.0, h), 1.0, 8.0)
            o = apply_multiplier(f, MultiplierSymbol("frac_gradient", 0.5), 4)
            e.append(lp_norm(frac_gradient(f, 0.5, q) - o, 1) / lp_norm(o, 1))
        errs[mode] = e
        assert e[1] < e[0]
    assert errs["lattice_zeta"][1] < errs["taylor_ball"][1]


def test_requires_support():
    spec = GridSpec(1, 1.0, 17)
    with pytest.raises(ValueError):
        frac_gradient(ScalarField(spec, np.zeros(17)), 0.5)
    with pytest.raises(ValueError):
        QuadParams(near_radius_cells=0)
