import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from fracvar import constants as C
from fracvar import variation as V
from fracvar.geometry import IntervalSet, PolySet
from fracvar.grid import GridSpec, Window, make_bump, zero_field

SQ = PolySet.square(0, 0, 1, 1)
UNIT = IntervalSet(((0, 1),))


# ---------------------------------------------------------------- 1D perimeter

@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95), st.floats(0.1, 10.0), st.floats(-5, 5))
def test_interval_perimeter_closed_form(a, ell, x0):
    E = IntervalSet(((x0, x0 + ell),))
    assert V.frac_perimeter(E, a).total == pytest.approx(4 * ell ** (1 - a) / (a * (1 - a)), rel=1e-12)


@pytest.mark.parametrize("a", [0.25, 0.5, 0.75])
def test_interval_perimeter_quadrature_path(a):
    E = IntervalSet(((0, 1), (1.5, 2.2)))
    w = Window.open_interval(-2, 3)
    q = V.frac_perimeter(E, a, w, method="quadrature")
    x = V.frac_perimeter(E, a, w)
    assert q.inner == pytest.approx(x.inner, rel=1e-3)
    assert q.cross == pytest.approx(x.cross, rel=1e-3)


def test_quadrature_path_needs_bounded_window():
    with pytest.raises(ValueError):
        V.frac_perimeter(UNIT, 0.5, method="quadrature")


def test_window_perimeter_vs_iterated_quad():
    a = 0.4
    pb = V.frac_perimeter(UNIT, a, Window.open_interval(0.5, 3.0))
    # Omega cap E = (0.5, 1), Omega minus E = (1, 3), E minus Omega = (0, 0.5);
    # inner integrals over y are taken in closed form, outer ones numerically
    sing = 0.5 ** (1 - a) / (1 - a)  # int_0.5^1 (1 - x)^-a dx
    inner = 2 * (sing - quad(lambda x: (3 - x) ** -a, 0.5, 1)[0]) / a
    c1 = quad(lambda x: (x ** -a + (3 - x) ** -a) / a, 0.5, 1)[0]
    c2 = quad(lambda x: ((x - 0.5) ** -a - x ** -a) / a, 1, 3)[0]
    assert pb.inner == pytest.approx(inner, rel=1e-9)
    assert pb.cross == pytest.approx(c1 + c2, rel=1e-9)


def test_breakdown_invariants():
    with pytest.raises(ValueError):
        V.PerimeterBreakdown(-1.0, 0.0)
    pb = V.frac_perimeter(UNIT, 0.5, Window.open_interval(-2, 2))
    assert pb.tilde <= pb.total and pb.total == pb.inner + 2 * pb.cross


def test_divergent_configuration_raises():
    with pytest.raises(ValueError):
        V.frac_perimeter(IntervalSet(((0, math.inf),)), 0.5)


def test_empty_set_has_zero_perimeter():
    assert V.frac_perimeter(IntervalSet(()), 0.5).total == 0.0


# ---------------------------------------------------------------- 1D variation

@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 0.95))
def test_unit_interval_variation_closed_form(a):
    # two sign-symmetric halves: 2 (mu / a) 2^a / (1 - a)
    assert V.frac_variation(UNIT, a) == pytest.approx(2 ** (1 + a) * C.mu(1, a) / (a * (1 - a)), rel=1e-11)


def test_variation_vs_mpmath():
    mpmath.mp.dps = 30
    a = mpmath.mpf("0.4")
    E = IntervalSet(((0, 1), (2, 3.5)))
    c = mpmath.mpf(C.mu(1, 0.4)) / a
    g = lambda x: c * (abs(x) ** -a - abs(x - 1) ** -a + abs(x - 2) ** -a - abs(x - 3.5) ** -a)
    # sign changes of g inside (-1, 4)
    roots = [V._sign_pieces(E, 0.4, lo, hi) for lo, hi in ((-1, 0), (0, 1), (1, 2), (2, 3.5), (3.5, 4))]
    cuts = sorted({p for piece in roots for iv in piece for p in iv})
    ref = sum(abs(mpmath.quad(g, [lo, hi])) for lo, hi in zip(cuts[:-1], cuts[1:]))
    val = V.frac_variation(E, 0.4, Window.open_interval(-1, 4))
    assert val == pytest.approx(float(ref), rel=1e-10)


def test_half_line_equality():
    E = IntervalSet(((0, math.inf),))
    w = Window.open_interval(-1, 1)
    for a in (0.2, 0.5, 0.8):
        lhs = V.frac_variation(E, a, w)
        assert lhs == pytest.approx(C.mu(1, a) * V.frac_perimeter(E, a, w).tilde, rel=1e-12)


def test_unbalanced_set_on_unbounded_window():
    with pytest.raises(ValueError):
        V.frac_variation(IntervalSet(((0, math.inf),)), 0.5)


def test_weighted_reduces_to_plain():
    x = np.linspace(-3, 4, 8)
    v = np.ones_like(x)
    val = V.indicator_weighted_1d(UNIT, 0.5, x, v)
    assert val == pytest.approx(V.frac_variation(UNIT, 0.5, Window.open_interval(-3, 4)), rel=1e-12)


# ---------------------------------------------------------------- 2D sets

@pytest.mark.parametrize("a,ref", [(0.4, 55.54006109839626), (0.7, 68.16664993679991)])
def test_square_perimeter_vs_polar_oracle(a, ref):
    # reference: 8-fold symmetric iterated quad of the polar exit-distance formula
    assert V.frac_perimeter(SQ, a).total == pytest.approx(ref, rel=1e-9)


def test_square_perimeter_alpha_to_one():
    # (1 - alpha) P_alpha -> 2 omega_1 P(E) = 16 for the unit square
    assert (1 - 0.99) * V.frac_perimeter(SQ, 0.99).total == pytest.approx(16.0, rel=0.01)


@pytest.mark.parametrize("a", [0.3, 0.6])
def test_window_perimeter_two_methods(a):
    w = Window.box(-0.5, 0.7, -0.5, 1.5)
    b = V.frac_perimeter(SQ, a, w)
    c = V._perimeter_2d_area(SQ, a, w)
    assert b.inner == pytest.approx(c.inner, rel=1e-5)
    assert b.cross == pytest.approx(c.cross, rel=1e-5)


def test_interaction_symmetric():
    A, B = SQ, PolySet.square(1.5, -0.3, 2.5, 0.4)
    assert V.set_interaction_2d(A, B, 0.5) == pytest.approx(V.set_interaction_2d(B, A, 0.5), rel=1e-12)


@settings(max_examples=8, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_perimeter_translation_invariant(tx, ty):
    P0 = V.frac_perimeter(SQ, 0.5).total
    assert V.frac_perimeter(SQ.translate(tx, ty), 0.5).total == pytest.approx(P0, rel=1e-10)


def test_2d_variation_guards():
    with pytest.raises(ValueError):
        V.indicator_variation_2d(SQ, 0.95, Window.box(-1, 2, -1, 2))
    with pytest.raises(ValueError):
        V.indicator_variation_2d(SQ, 0.5, None)


def test_2d_variation_strictly_below_tilde():
    w = Window.box(-0.5, 1.5, -0.5, 1.5)
    for a in (0.25, 0.75):
        lhs = V.frac_variation(SQ, a, w)
        assert 0 < lhs < C.mu(2, a) * V.frac_perimeter(SQ, a, w).tilde


# ---------------------------------------------------------------- seminorms

@pytest.mark.parametrize("a,ref", [(0.3, 21.423165808635765), (0.7, 19.839681948602625)])
def test_seminorm_1d(a, ref):
    # reference: slab reduction of the Gagliardo double integral for symmetric unimodal profiles
    f = make_bump(GridSpec(1, 2.0, 2049), 0.0, 1.0)
    assert V.sobolev_seminorm(f, a) == pytest.approx(ref, rel=1e-6)


@pytest.mark.parametrize("a,ref", [(0.3, 73.39954893335212), (0.7, 71.82204918675302)])
def test_seminorm_2d(a, ref):
    f = make_bump(GridSpec(2, 2.0, 65), (0.0, 0.0), 1.0)
    assert V.sobolev_seminorm(f, a) == pytest.approx(ref, rel=1e-2)


def test_seminorm_of_set_is_perimeter():
    assert V.sobolev_seminorm(UNIT, 0.5) == V.frac_perimeter(UNIT, 0.5).total


def test_seminorm_zero():
    assert V.sobolev_seminorm(zero_field(GridSpec(1, 1.0, 33)), 0.5) == 0.0


# ---------------------------------------------------------------- norms on R^n

def test_exterior_tail_is_box_independent():
    a = 0.5
    vals = []
    for L in (2.0, 6.0):
        f = make_bump(GridSpec.from_spacing(1, L, 1 / 64), 0.0, 1.0)
        vals.append(V.frac_gradient_norm(f, a, 1))
    assert vals[0] == pytest.approx(vals[1], rel=1e-5)


def test_window_must_fit_box(bump1d):
    with pytest.raises(ValueError):
        V.frac_variation(bump1d, 0.5, Window.open_interval(-3, 1))


def test_field_variation_on_window_below_whole(bump1d):
    a = 0.5
    assert V.frac_variation(bump1d, a, Window.open_interval(-1, 1)) < V.frac_variation(bump1d, a)


# ---------------------------------------------------------------- unit ball

@pytest.mark.parametrize("a,ref", [(0.3, 12.721130740554612), (0.5, 8.763364794557742), (0.9, 6.490295157482801)])
def test_unit_disc_variation(a, ref):
    # reference: circle boundary integral for the radial profile, then radial quad
    assert V.unit_ball_variation(2, a) == pytest.approx(ref, rel=1e-6)


def test_unit_ball_limits():
    assert V.unit_ball_variation(1, 0.5) == pytest.approx(4 * C.mu(1, 0.5) / (0.5 * 0.5), rel=1e-12)
    assert V.unit_ball_variation(1, 0.99) == pytest.approx(2.0, rel=0.03)
    assert V.unit_ball_variation(2, 0.99) == pytest.approx(2 * math.pi, rel=0.03)


# ---------------------------------------------------------------- dual estimator

def test_dual_lower_bound():
    f = make_bump(GridSpec(1, 2.0, 129), 0.0, 1.0)
    w = Window.open_interval(-1.5, 1.5)
    res = V.dual_ascent(f, 0.5, w, V.DualOptions(iters=300))
    dens = V.frac_variation(f, 0.5, w)
    assert res.value <= dens * (1 + 1e-9)
    assert res.value >= 0.95 * dens
    assert res.history[-1] >= res.history[0]
    assert float(res) == res.value


def test_dual_zero_input():
    z = zero_field(GridSpec(1, 1.0, 33))
    assert V.dual_variation_lower_bound(z, 0.5) == 0.0


# ---------------------------------------------------------------- classifier

@pytest.mark.parametrize("E,w,verdict", [
    (((0, math.inf),), (-1, 1), "equality"),
    (((-5, -4), (-1, math.inf)), (0, 1), "equality"),
    (((-5, -4), (0, math.inf)), (-1, 1), "strict"),
    (((0, 1),), (-2, 2), "strict"),
    (((0, 1),), (2, 3), "equality"),
])
def test_classifier(E, w, verdict):
    assert V.equality_classifier_1d(IntervalSet(E), Window.open_interval(*w)) == verdict
