import math

import pytest

from fracvar import asymptotics as A
from fracvar import constants as C
from fracvar import variation as V
from fracvar.geometry import IntervalSet, PolySet
from fracvar.grid import GridSpec, Window, make_bump, make_gaussian_cutoff, zero_field

UNIT = IntervalSet(((0, 1),))


def _report(residuals, tol=0.1, rule="final", checks=(), flags=()):
    recs = tuple(A.SweepRecord(p, 1.0, r, tol, {"v": r}) for p, r in residuals)
    return A.SweepReport("demo", "alpha", recs, rule, checks, "v", 1.0, flags)


# ---------------------------------------------------------------- report types

def test_record_validation():
    with pytest.raises(ValueError):
        A.SweepRecord(0.5, 1.0, -1.0, 0.1)
    with pytest.raises(ValueError):
        A.SweepRecord(0.5, 1.0, float("nan"), 0.1)
    with pytest.raises(ValueError):
        A.Check("bogus", "v")
    with pytest.raises(ValueError):
        _report([(0.5, 0.0)], rule="most")


def test_rules():
    r = _report([(0.5, 0.5), (0.9, 0.05)])
    assert r.verdict is True
    assert _report([(0.5, 0.5), (0.9, 0.05)], rule="all").verdict is False
    assert _report([(0.5, 0.5), (0.9, 0.05)], flags=("bad",)).verdict is None


def test_check_kinds():
    pts = [(0.5, 0.08), (0.7, 0.04), (0.9, 0.02)]
    assert _report(pts, checks=(A.Check("decreasing", "v"),)).verdict
    assert not _report([(0.5, 0.02), (0.9, 0.04)], checks=(A.Check("decreasing", "v"),)).verdict
    assert _report(pts, checks=(A.Check("final_le", "v", 0.03),)).verdict
    assert not _report(pts, checks=(A.Check("all_le", "v", 0.03),)).verdict
    r = _report(pts, checks=(A.Check("all_le", "v", 0.03),))
    assert r.failures() == ["0:all_le:v"]


def test_order_fit():
    pts = [(1 - t, t ** 1.5) for t in (0.4, 0.2, 0.1, 0.05)]
    assert _report(pts).order == pytest.approx(1.5, rel=1e-12)
    assert _report([(0.5, 0.1)]).order is None


def test_json_roundtrip_reproduces_verdict():
    r = _report([(0.5, 0.5), (0.9, 0.05)], checks=(A.Check("decreasing", "v"),))
    back = A.SweepReport.from_json(r.to_json())
    assert back == r and back.verdict == r.verdict and back.order == r.order


def test_json_schema_mismatch():
    d = _report([(0.5, 0.1)]).to_dict()
    d["schema_version"] = 99
    with pytest.raises(ValueError):
        A.SweepReport.from_dict(d)


def test_csv_rows():
    text = _report([(0.5, 0.5), (0.7, 0.2), (0.9, 0.05)]).to_csv()
    lines = text.strip().splitlines()
    assert len(lines) == 4
    assert lines[0].startswith("schema_version,label,alpha")
    assert all(l.startswith(f"{A.SCHEMA_VERSION},") for l in lines[1:])


# ---------------------------------------------------------------- sweeps

def test_alpha_sweep_single_point():
    f = make_bump(GridSpec(1, 2.0, 129), 0.0, 1.0)
    r = A.sweep_alpha_to_one(f, 1, alphas=(0.99,))
    assert len(r.records) == 1 and r.order is None


def test_alpha_sweep_rejects_p():
    f = make_bump(GridSpec(1, 2.0, 33), 0.0, 1.0)
    with pytest.raises(ValueError):
        A.sweep_alpha_to_one(f, 3)


def test_alpha_sweep_linf():
    f = make_gaussian_cutoff(GridSpec.from_spacing(1, 16.0, 1 / 32), 1.0, 8.0)
    r = A.sweep_alpha_to_one(f, math.inf, alphas=(0.9, 0.99))
    assert r.verdict
    assert r.records[-1].residual < r.records[0].residual


def test_beta_equal_alpha_is_zero():
    f = make_bump(GridSpec(1, 2.0, 129), 0.0, 1.0)
    r = A.sweep_beta_to_alpha(f, 0.6, (0.6,), intertwine=False)
    assert r.records[0].residual == 0.0
    with pytest.raises(ValueError):
        A.sweep_beta_to_alpha(f, 0.6, (0.7,))


def test_weakstar_phi_away_from_boundary():
    # phi supported in (0.2, 0.8), away from the jumps of chi_(0,1)
    spec = GridSpec(1, 2.0, 257)
    phi = make_bump(spec, 0.5, 0.3)
    r = A.weakstar_test(UNIT, (0.9, 0.99), [phi])
    assert all(rec.reference == 0.0 for rec in r.records)
    assert r.verdict


def test_weakstar_set_and_field():
    spec = GridSpec(1, 3.0, 385)
    phi = make_bump(spec, 0.2, 1.5)
    assert A.weakstar_test(UNIT, (0.9, 0.99), [phi]).verdict
    sq = PolySet.square(-0.5, -0.5, 0.5, 0.5)
    phi2 = make_bump(GridSpec(2, 2.0, 65), (0.1, 0.0), 1.5)
    assert A.weakstar_test(sq, (0.9, 0.99), [phi2]).verdict
    f = make_bump(GridSpec(1, 2.0, 257), 0.0, 1.0)
    assert A.weakstar_test(f, (0.99,), [make_bump(f.spec, 0.3, 1.0)]).verdict


# ---------------------------------------------------------------- Gamma harness

def test_family_validation():
    with pytest.raises(ValueError):
        A.PerturbationFamily("rotate")
    with pytest.raises(ValueError):
        A.PerturbationFamily("translate", schedule="cubic")
    assert A.PerturbationFamily("translate", 0.5, "sqrt").eps(0.75) == pytest.approx(0.25)


def test_gamma_constant_family_reaches_limit():
    w = Window.open_interval(-1, 2)
    r = A.gamma_falsification(UNIT, w, (0.9, 0.99), [A.PerturbationFamily("constant")])
    assert r.verdict
    assert r.meta["base_variation"] == 2.0


def test_gamma_flags_nonconvergent_family():
    w = Window.open_interval(-1, 2)
    fams = [A.PerturbationFamily("constant"), A.PerturbationFamily("translate", 0.3, "fixed")]
    r = A.gamma_falsification(UNIT, w, (0.9, 0.99), fams)
    assert r.flags and r.verdict is None


def test_gamma_rejects_unsupported():
    with pytest.raises(ValueError):
        A.gamma_falsification(UNIT, Window.open_interval(-math.inf, 1), (0.9,), [])
    with pytest.raises(ValueError):
        A.gamma_falsification(PolySet.square(0, 0, 1, 1), Window.box(-1, 2, -1, 2), (0.9,), [])


def test_gamma_bump_family_zero_eps_matches_set():
    w = Window.open_interval(-1, 2)
    fam = A.PerturbationFamily("additive_bump", 0.0)
    r = A.gamma_falsification(UNIT, w, (0.99,), [fam])
    assert r.records[0].values["value"] == pytest.approx(V.frac_variation(UNIT, 0.99, w), rel=1e-12)


# ---------------------------------------------------------------- inequality suite, dichotomy, duality

def test_inequality_suite_zero_input():
    item = A.CorpusItem("zero", zero_field(GridSpec(1, 2.0, 65)), local=Window.open_interval(-0.5, 0.5))
    r = A.inequality_suite((item,), alphas=(0.5,))
    assert r.records and r.verdict
    assert all(rec.values["lhs"] == 0.0 for rec in r.records)


def test_inequality_suite_sets_quick():
    corpus = [c for c in A.default_corpus(quick=True) if isinstance(c.obj, IntervalSet)]
    assert A.inequality_suite(corpus, alphas=(0.3, 0.8)).verdict


def test_dichotomy():
    r = A.equality_dichotomy()
    assert r.verdict
    kinds = {rec.values["predicted_equality"] for rec in r.records}
    assert kinds == {0.0, 1.0}


def test_duality_study_small():
    r = A.duality_study(GridSpec(1, 2.0, 129), (0.3, 0.7), pairs=3, seed=1)
    assert len(r.records) == 6 and r.verdict


# ---------------------------------------------------------------- limits as alpha -> 1

def test_unit_ball_variation_tends_to_two():
    assert V.unit_ball_variation(1, 0.99) == pytest.approx(2.0, rel=0.03)


def test_seminorm_of_interval_scaled():
    # (1 - alpha) P_alpha of a unit interval -> 2 x (two jumps)
    assert (1 - 0.99) * V.sobolev_seminorm(UNIT, 0.99) == pytest.approx(4.0, rel=0.03)


def test_mu_normalisation_limit():
    a = 0.999
    assert C.mu(1, a) / (1 - a) == pytest.approx(0.5, rel=0.01)
