"""Experiment harness: alpha -> 1 and beta -> alpha sweeps, weak-star tests,
Gamma-liminf falsification, the inequality suite and the 1D equality dichotomy.

Every sweep returns a SweepReport whose verdict is recomputed from its records
and declared checks alone, so a serialized report re-verdicts identically."""

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline, RegularGridInterpolator
from scipy.optimize import brentq

from . import constants, spectral
from .constants import RegionStats
from .geometry import IntervalSet, PolySet
from .grid import (GridSpec, ScalarField, VectorField, Window, integrate, local_gradient, lp_norm,
                   make_bump)
from .kernels import DEFAULT_QUAD, frac_gradient, frac_gradient_at, riesz_potential
from .quadrature import gauss_legendre
from .tolerances import EXACT_REL, FLOOR, default_model
from . import variation as V

SCHEMA_VERSION = 1
DEFAULT_ALPHAS = (0.5, 0.7, 0.9, 0.95, 0.99)
INEQ_ALPHAS = (0.25, 0.5, 0.75, 0.9)
CHECK_KINDS = ("decreasing", "final_le", "all_le", "all_le_key")


# ================================================================ report types

@dataclass(frozen=True)
class SweepRecord:
    param: float
    reference: float
    residual: float
    tolerance: float
    values: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        for name in ("residual", "tolerance"):
            v = getattr(self, name)
            if not (v >= 0):  # also rejects NaN
                raise ValueError(f"{name} must be a nonnegative number, got {v!r}")


@dataclass(frozen=True)
class Check:
    """decreasing: values[key] strictly decreases with the parameter;
    final_le: values[key] <= threshold at the finest parameter;
    all_le: values[key] <= threshold at every point;
    all_le_key: values[key] <= values[bound_key] at every point.
    `label` restricts the check to one record group."""
    kind: str
    key: str
    threshold: float | None = None
    bound_key: str | None = None
    label: str | None = None

    def __post_init__(self):
        if self.kind not in CHECK_KINDS:
            raise ValueError(f"unknown check kind {self.kind!r}")


def _groups(records):
    out = {}
    for r in records:
        out.setdefault(r.label, []).append(r)
    return {k: sorted(v, key=lambda r: r.param) for k, v in out.items()}


def _run_check(c, groups):
    sel = [groups[c.label]] if c.label is not None else list(groups.values())
    ok = True
    for recs in sel:
        vals = [r.values[c.key] for r in recs if c.key in r.values]
        if c.kind == "decreasing":
            ok &= all(b < a for a, b in zip(vals, vals[1:]))
        elif c.kind == "final_le":
            ok &= (not vals) or vals[-1] <= c.threshold
        elif c.kind == "all_le":
            ok &= all(v <= c.threshold for v in vals)
        else:
            ok &= all(r.values[c.key] <= r.values[c.bound_key] for r in recs if c.key in r.values)
    return bool(ok)


@dataclass(frozen=True)
class SweepReport:
    """Per-parameter records plus declared checks.

    rule 'final': in every label group the residual at the finest (largest)
    parameter must be within its tolerance; rule 'all': at every record.
    Flags (for instance a perturbation family breaking its own convergence
    invariant) suppress the verdict."""
    kind: str
    parameter: str
    records: tuple
    rule: str = "final"
    checks: tuple = ()
    order_key: str | None = None
    limit: float | None = None
    flags: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.rule not in ("final", "all"):
            raise ValueError("rule must be 'final' or 'all'")

    def evaluate(self):
        groups = _groups(self.records)
        out = {}
        if self.rule == "final":
            out["residual"] = all(g[-1].residual <= g[-1].tolerance for g in groups.values())
        else:
            out["residual"] = all(r.residual <= r.tolerance for r in self.records)
        for i, c in enumerate(self.checks):
            out[f"{i}:{c.kind}:{c.key}" + (f"@{c.label}" if c.label else "")] = _run_check(c, groups)
        return out

    @property
    def verdict(self):
        if self.flags:
            return None
        return all(self.evaluate().values())

    @property
    def order(self):
        """Log-log least-squares slope of values[order_key] against the distance
        of the parameter to its limit, over the first label group."""
        if self.order_key is None or self.limit is None or not self.records:
            return None
        recs = next(iter(_groups(self.records).values()))
        pts = [(abs(self.limit - r.param), r.values.get(self.order_key)) for r in recs]
        pts = [(x, y) for x, y in pts if y is not None and x > 0 and y > 0]
        if len(pts) < 2:
            return None
        x, y = np.log(np.array(pts)).T
        return float(np.polyfit(x, y, 1)[0])

    def failures(self):
        return [k for k, v in self.evaluate().items() if not v]

    def to_dict(self):
        return {"schema_version": SCHEMA_VERSION, "kind": self.kind, "parameter": self.parameter,
                "rule": self.rule, "order_key": self.order_key, "limit": self.limit,
                "flags": list(self.flags), "meta": self.meta,
                "checks": [asdict(c) for c in self.checks],
                "records": [asdict(r) for r in self.records],
                "order": self.order, "verdict": self.verdict}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        if d.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported report schema {d.get('schema_version')!r}")
        return cls(d["kind"], d["parameter"], tuple(SweepRecord(**r) for r in d["records"]), d["rule"],
                   tuple(Check(**c) for c in d["checks"]), d["order_key"], d["limit"],
                   tuple(d["flags"]), d["meta"])

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def to_csv(self):
        keys = sorted({k for r in self.records for k in r.values})
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["schema_version", "label", self.parameter, "reference", "residual", "tolerance", *keys])
        for r in self.records:
            w.writerow([SCHEMA_VERSION, r.label, repr(r.param), repr(r.reference), repr(r.residual), repr(r.tolerance),
                        *[repr(r.values[k]) if k in r.values else "" for k in keys]])
        return buf.getvalue()


# ================================================================ helpers

def _exterior_grad(f, alpha):
    return lambda pts: frac_gradient_at(f, alpha, pts)


def _whole_norm(f, alpha, box_field, p, exterior=None):
    """L^p(R^n) norm of a field equal to box_field on the box and to
    `exterior(points)` outside (default: nabla^alpha f)."""
    ext = exterior if exterior is not None else _exterior_grad(f, alpha)
    return V.field_norm(box_field, p, None, ext, f.spec.n + alpha, f.support_radius)


def _rel(a, b):
    return abs(a - b) / abs(b) if b else abs(a)


# ================================================================ alpha -> 1

def sweep_alpha_to_one(f, p=1, alphas=DEFAULT_ALPHAS, q=DEFAULT_QUAD, tv_tol=0.02, linf_tol=0.02):
    """||nabla^alpha f - nabla f||_{L^p} and |D^alpha f|(R^n) against |Df|(R^n)."""
    if p not in (1, 2, math.inf):
        raise ValueError("p must be 1, 2 or inf")
    alphas = sorted(float(a) for a in alphas)
    grad = local_gradient(f, q.fd_order)
    tv_one = lp_norm(grad, 1)
    grad_p = lp_norm(grad, p)
    model = default_model()
    recs = []
    for a in alphas:
        g = frac_gradient(f, a, q)
        diff = g - grad
        lp_res = _whole_norm(f, a, diff, p)
        tv_a = _whole_norm(f, a, g, 1)
        vals = {"lp_residual": lp_res, "lp_residual_rel": lp_res / grad_p if grad_p else lp_res,
                "tv_alpha": tv_a, "tv_one": tv_one,
                "budget_rel": model.rel("frac_gradient", f.spec.h, a)}
        if p == math.inf:
            g_inf = _whole_norm(f, a, g, math.inf)
            vals["linf_alpha"] = g_inf
            vals["linf_one"] = grad_p
            resid = max(0.0, grad_p / g_inf - 1.0) if g_inf > 0 else (0.0 if grad_p == 0 else math.inf)
            recs.append(SweepRecord(a, grad_p, resid, linf_tol, vals))
        else:
            recs.append(SweepRecord(a, tv_one, _rel(tv_a, tv_one), tv_tol, vals))
    checks = () if p == math.inf else (Check("decreasing", "lp_residual"),)
    notes = [f"alpha={r.param}: residual below quadrature budget" for r in recs
             if r.values["lp_residual_rel"] < r.values["budget_rel"]]
    return SweepReport("alpha_to_one", "alpha", tuple(recs), "final", checks, "lp_residual", 1.0,
                       meta={"p": "inf" if p == math.inf else p, "h": f.spec.h, "n": f.spec.n, "notes": notes})


# ================================================================ beta -> alpha

def sweep_beta_to_alpha(f, alpha, betas, q=DEFAULT_QUAD, tol=0.02, intertwine_tol=1e-2,
                        intertwine=True):
    """||nabla^beta f - nabla^alpha f||_{L^1}, |D^beta f|(R^n) against |D^alpha f|(R^n),
    the representation nabla^beta f = I_{alpha-beta} nabla^alpha f and the
    fractional-Laplacian intertwining residual."""
    betas = sorted(float(b) for b in betas)
    if any(not (0 < b <= alpha) for b in betas):
        raise ValueError("betas must lie in (0, alpha]")
    n = f.spec.n
    model = default_model()
    ga = frac_gradient(f, alpha, q)
    tv_a = _whole_norm(f, alpha, ga, 1)
    ext_a = _exterior_grad(f, alpha)
    recs = []
    for b in betas:
        gb = frac_gradient(f, b, q)
        ext_b = _exterior_grad(f, b)
        diff = _whole_norm(f, b, gb - ga, 1, lambda pts: ext_b(pts) - ext_a(pts))
        tv_b = _whole_norm(f, b, gb, 1)
        vals = {"l1_diff": diff, "l1_diff_rel": diff / tv_a, "tv_beta": tv_b, "tv_alpha": tv_a,
                "tv_gap": _rel(tv_b, tv_a), "repr_tol": model.rel("frac_gradient", f.spec.h, b)}
        if b < alpha:
            I = riesz_potential(ga, alpha - b, q, exterior=ext_a, exterior_decay=n + alpha)
            vals["repr_residual"] = lp_norm(gb - I, 1) / lp_norm(gb, 1)
            if intertwine:
                vals["intertwine_residual"] = spectral.intertwine_check(f, alpha, b, q).rel_residual
        else:
            vals["repr_residual"] = 0.0
            if intertwine:
                vals["intertwine_residual"] = 0.0
        recs.append(SweepRecord(b, tv_a, diff / tv_a, tol, vals))
    checks = [Check("decreasing", "l1_diff"), Check("final_le", "tv_gap", tol),
              Check("all_le_key", "repr_residual", bound_key="repr_tol")]
    if intertwine:
        checks.append(Check("all_le", "intertwine_residual", intertwine_tol))
    return SweepReport("beta_to_alpha", "beta", tuple(recs), "final", tuple(checks), "l1_diff", alpha,
                       meta={"alpha": alpha, "h": f.spec.h, "n": n})


# ================================================================ weak-star

def _test_interp(phi):
    spec = phi.spec
    if spec.n == 1:
        return lambda x: np.interp(x, spec.axis, phi.values, left=0.0, right=0.0)
    rg = RegularGridInterpolator((spec.axis, spec.axis), phi.values, bounds_error=False, fill_value=0.0)
    return lambda x: rg(np.asarray(x).reshape(-1, 2))


def _edge_integral(E, fn, h):
    """(int_{dE} fn dH, int_{dE} fn nu dH) by Gauss panels no longer than h."""
    xg, wg = gauss_legendre(6)
    tot, vec = [], np.zeros(2)
    for P0, P1 in E.edges():
        D = P1 - P0
        ell = math.hypot(*D)
        nu = np.array([D[1], -D[0]]) / ell
        k = max(1, math.ceil(ell / h))
        s = ((np.arange(k)[:, None] + (xg[None, :] + 1) / 2) / k).ravel()
        w = np.tile(wg / 2, k) / k * ell
        v = fn(P0 + s[:, None] * D)
        tot.append(math.fsum(v * w))
        vec += nu * math.fsum(v * w)
    return math.fsum(tot), vec


def weakstar_test(obj, alphas, test_fns, q=DEFAULT_QUAD, tol=0.03):
    """int phi nabla^alpha f -> int phi dDf and int phi |nabla^alpha f| -> int phi d|Df|.

    Residuals are normalised by ||phi||_inf |Df|(R^n). Geometry inputs use exact
    limits (jump sums in 1D, edge integrals in 2D)."""
    alphas = sorted(float(a) for a in alphas)
    recs = []
    for i, phi in enumerate(test_fns):
        pmax = float(np.abs(phi.values).max())
        if isinstance(obj, IntervalSet):
            ends = V._signed_endpoints(obj)
            interp = _test_interp(phi)
            t_abs = math.fsum(float(interp(np.array([e]))[0]) for e, _ in ends)
            t_sgn = math.fsum(s * float(interp(np.array([e]))[0]) for e, s in ends)
            mass = len(ends)
            for a in alphas:
                v_abs = V.indicator_weighted_1d(obj, a, phi.spec.axis, phi.values, True)
                v_sgn = V.indicator_weighted_1d(obj, a, phi.spec.axis, phi.values, False)
                scale = pmax * mass or 1.0
                recs.append(SweepRecord(a, t_abs, abs(v_abs - t_abs) / scale, tol,
                                        {"value": v_abs, "target": t_abs}, f"phi{i}:abs"))
                recs.append(SweepRecord(a, t_sgn, abs(v_sgn - t_sgn) / scale, tol,
                                        {"value": v_sgn, "target": t_sgn}, f"phi{i}:signed"))
        elif isinstance(obj, PolySet):
            interp = _test_interp(phi)
            _, t_vec = _edge_integral(obj, interp, phi.spec.h / 4)
            # int phi dD chi_E = -int_{dE} phi nu
            t_vec = -t_vec
            mass = obj.perimeter
            for a in alphas:
                # int phi nabla^alpha chi_E = -int_E nabla^alpha phi; the |.| part is
                # skipped here since the set quadrature is limited to alpha <= 0.9
                g = frac_gradient(phi, a, q)
                w = Window.from_set(obj)
                v_vec = -np.array([integrate(g.component(k), w) for k in range(2)])
                scale = pmax * mass or 1.0
                recs.append(SweepRecord(a, float(np.linalg.norm(t_vec)),
                                        float(np.linalg.norm(v_vec - t_vec)) / scale, tol,
                                        {"value_x": float(v_vec[0]), "value_y": float(v_vec[1]),
                                         "target_x": float(t_vec[0]), "target_y": float(t_vec[1])}, f"phi{i}:signed"))
        else:
            f = obj
            if phi.spec != f.spec:
                raise ValueError("test functions must live on the grid of f")
            grad = local_gradient(f, q.fd_order)
            mass = lp_norm(grad, 1)
            t_abs = integrate(ScalarField(f.spec, phi.values * grad.magnitude()))
            t_vec = np.array([integrate(ScalarField(f.spec, phi.values * c)) for c in grad.components])
            for a in alphas:
                g = frac_gradient(f, a, q)
                v_abs = integrate(ScalarField(f.spec, phi.values * g.magnitude()))
                v_vec = np.array([integrate(ScalarField(f.spec, phi.values * c)) for c in g.components])
                scale = pmax * mass or 1.0
                recs.append(SweepRecord(a, t_abs, abs(v_abs - t_abs) / scale, tol,
                                        {"value": v_abs, "target": t_abs}, f"phi{i}:abs"))
                recs.append(SweepRecord(a, float(np.linalg.norm(t_vec)),
                                        float(np.linalg.norm(v_vec - t_vec)) / scale, tol,
                                        {"value": float(np.linalg.norm(v_vec)),
                                         "target": float(np.linalg.norm(t_vec))}, f"phi{i}:signed"))
    return SweepReport("weakstar", "alpha", tuple(recs), "final", meta={"tol": tol})


# ================================================================ Gamma falsification

SCHEDULES = ("linear", "sqrt", "fixed")
FAMILY_KINDS = ("constant", "translate", "dilate", "additive_bump")


@dataclass(frozen=True)
class PerturbationFamily:
    """f_alpha = perturbation of the base input with amplitude eps(alpha).

    eps(alpha) = scale (1-alpha) ('linear'), scale sqrt(1-alpha) ('sqrt') or
    scale ('fixed', which does not converge and is rejected by the harness).
    additive_bump adds eps times a bump of radius bump_radius at bump_center."""
    kind: str
    scale: float = 1.0
    schedule: str = "linear"
    bump_center: float = 0.3
    bump_radius: float = 0.5

    def __post_init__(self):
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.schedule not in SCHEDULES:
            raise ValueError(f"unknown schedule {self.schedule!r}")

    @property
    def name(self):
        return f"{self.kind}:{self.schedule}:{self.scale:g}"

    def eps(self, alpha):
        if self.kind == "constant":
            return 0.0
        t = 1.0 - alpha
        return {"linear": self.scale * t, "sqrt": self.scale * math.sqrt(max(t, 0.0)),
                "fixed": self.scale}[self.schedule]


def _resample(f, mapping):
    """f evaluated at mapping(x) for every node (cubic interpolation, zero outside)."""
    spec = f.spec
    axes = (spec.axis,) * spec.n
    rg = RegularGridInterpolator(axes, f.values, method="cubic", bounds_error=False, fill_value=0.0)
    X = np.stack([x.ravel() for x in spec.mesh()], axis=1)
    return rg(mapping(X)).reshape(spec.shape)


def _family_field(f, fam, eps):
    spec = f.spec
    if fam.kind == "constant" or eps == 0:
        return f
    sr = f.support_radius
    if fam.kind == "translate":
        vals = _resample(f, lambda X: X - eps)
        return ScalarField(spec, vals, sr + abs(eps) * math.sqrt(spec.n))
    if fam.kind == "dilate":
        lam = 1.0 + eps
        vals = _resample(f, lambda X: X / lam)
        return ScalarField(spec, vals, sr * lam)
    c = (fam.bump_center,) * spec.n if spec.n > 1 else fam.bump_center
    g = make_bump(spec, c, fam.bump_radius)
    return ScalarField(spec, f.values + eps * g.values, max(sr, g.support_radius))


def _family_set(E, fam, eps):
    if fam.kind == "translate":
        return E.translate(eps)
    if fam.kind == "dilate":
        lo, hi = E.intervals[0][0], E.intervals[-1][1]
        return E.scale(1.0 + eps, 0.5 * (lo + hi))
    return E


class _BumpGradient:
    """nabla^alpha of a 1D bump as a cubic spline of its grid values on a box
    covering [-reach, reach], with exact spline antiderivatives."""

    def __init__(self, center, radius, alpha, q, reach=0.0, h=1 / 256):
        L = math.ceil(max(abs(center) + radius + 1.0, reach))
        spec = GridSpec.from_spacing(1, L, h)
        self.f = make_bump(spec, center, radius)
        self.L = spec.half_width
        self.g = CubicSpline(spec.axis, frac_gradient(self.f, alpha, q).components[0])
        self.G = self.g.antiderivative()
        self.l1 = lp_norm(self.f, 1)

    def __call__(self, x):
        return self.g(x)

    def integral(self, a, b):
        if max(abs(a), abs(b)) > self.L:
            raise ValueError("interval leaves the spline box")
        return float(self.G(b) - self.G(a))


def _set_plus_bump_variation(E, eps, bump, alpha, w):
    """int_Omega |nabla^alpha chi_E + eps nabla^alpha g| over a bounded 1D window:
    split where the sum changes sign, then integrate each part exactly (set) and
    by spline antiderivative (bump)."""
    a, b = w.interval
    cuts = sorted({a, b} | {e for e in E.endpoints if a < e < b})
    fn = lambda y: float(V._g1d(E, alpha, np.array([y]))[0] + eps * bump(y))
    t = 0.5 - 0.5 * np.cos(np.pi * np.linspace(0, 1, 801)[1:-1])
    tot = []
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        xs = lo + (hi - lo) * t
        vs = V._g1d(E, alpha, xs) + eps * bump(xs)
        pts = [lo]
        for k in range(len(xs) - 1):
            if vs[k] * vs[k + 1] < 0:
                pts.append(brentq(fn, xs[k], xs[k + 1], xtol=1e-15, rtol=1e-15))
        pts.append(hi)
        for p, r in zip(pts[:-1], pts[1:]):
            val = (V._antider(E, alpha, r) - V._antider(E, alpha, p)) + eps * bump.integral(p, r)
            tot.append(abs(val))
    return math.fsum(tot)


def _base_variation(obj, w, q):
    if isinstance(obj, IntervalSet):
        a, b = w.interval
        for e in obj.endpoints:
            if e == a or e == b:
                raise ValueError("the base set must not jump on the window boundary")
        return float(sum(1 for e in obj.endpoints if a < e < b))
    return lp_norm(local_gradient(obj, q.fd_order), 1, w)


def _l1_distance(obj, other, eps, fam, bump_l1):
    if isinstance(obj, IntervalSet):
        d = obj.difference(other).measure + other.difference(obj).measure
        if fam.kind == "additive_bump":
            d += abs(eps) * bump_l1
        return d
    return lp_norm(other - obj, 1)


def gamma_falsification(obj, w, alphas, families, q=DEFAULT_QUAD, tol=0.03, slack_rate=1.0):
    """Liminf side: |D^alpha f_alpha|(Omega) >= |Df|(Omega) (1 - slack(alpha)) with
    slack(alpha) = tol + slack_rate (1 - alpha) -> tol. Limsup side: the constant
    family reaches |Df|(Omega) within tol at the finest alpha.

    This is falsification over declared families, not a proof of Gamma-convergence."""
    if not w.is_bounded:
        raise ValueError("Gamma tests need a bounded window")
    if isinstance(obj, PolySet):
        raise ValueError("2D sets are not supported here (boundary layer above alpha = 0.9)")
    alphas = sorted(float(a) for a in alphas)
    base = _base_variation(obj, w, q)
    recs, flags = [], []
    checks = []
    for fam in families:
        bump_cache = {}
        dists = []
        fam_recs = []
        for a in alphas:
            eps = fam.eps(a)
            if isinstance(obj, IntervalSet):
                Ea = _family_set(obj, fam, eps)
                if fam.kind == "additive_bump" and eps != 0:
                    bump = bump_cache.setdefault(a, _BumpGradient(fam.bump_center, fam.bump_radius, a, q,
                                                                        max(map(abs, w.interval))))
                    val = _set_plus_bump_variation(Ea, eps, bump, a, w)
                    dists.append(float(_l1_distance(obj, Ea, eps, fam, bump.l1)))
                else:
                    val = V.frac_variation(Ea, a, w)
                    dists.append(float(_l1_distance(obj, Ea, eps, fam, 0.0)))
            else:
                fa = _family_field(obj, fam, eps)
                val = V.frac_gradient_norm(fa, a, 1, w, q)
                dists.append(float(_l1_distance(obj, fa, eps, fam, 0.0)))
            deficit = max(0.0, (base - val) / base) if base else 0.0
            vals = {"value": val, "eps": eps, "l1_distance": dists[-1], "gap_rel": _rel(val, base)}
            fam_recs.append(SweepRecord(a, base, deficit, tol + slack_rate * (1 - a), vals, fam.name))
        # the family must converge to the base input as alpha -> 1
        if fam.eps(1.0) != 0 or (len(dists) > 1 and dists[-1] > dists[0]):
            flags.append(f"family {fam.name} does not converge to the base input in L1")
        recs += fam_recs
        if fam.kind == "constant":
            checks.append(Check("final_le", "gap_rel", tol, label=fam.name))
    return SweepReport("gamma_falsification", "alpha", tuple(recs), "all", tuple(checks),
                       flags=tuple(flags), meta={"base_variation": base, "tol": tol,
                                                 "slack_rate": slack_rate,
                                                 "note": "falsification over declared families"})


# ================================================================ inequality suite

@dataclass(frozen=True)
class CorpusItem:
    name: str
    obj: object
    windows: tuple = ()       # windows for the perimeter inequality (sets)
    local: object = None      # bounded A / U for the localised estimates


def default_corpus(quick=False):
    items = []
    s1 = GridSpec.from_spacing(1, 4.0, 1 / 64)
    items.append(CorpusItem("bump1d", make_bump(s1, 0.0, 1.0), local=Window.open_interval(-0.5, 0.5)))
    items.append(CorpusItem("bump1d_off", make_bump(s1, 0.8, 1.5, 2.0), local=Window.open_interval(0.0, 1.0)))
    s2 = GridSpec(2, 2.0, 65)
    items.append(CorpusItem("bump2d", make_bump(s2, (0.0, 0.0), 1.0), local=Window.box(-0.5, 0.5, -0.5, 0.5)))
    if not quick:
        items.append(CorpusItem("bump2d_off", make_bump(s2, (0.3, -0.2), 0.9, 1.5),
                                local=Window.box(0.0, 0.6, -0.6, 0.2)))
    ww = (Window.open_interval(-2, 2), Window.open_interval(0.25, 3))
    items.append(CorpusItem("interval", IntervalSet(((0, 1),)), ww, Window.open_interval(-0.5, 0.5)))
    items.append(CorpusItem("two_intervals", IntervalSet(((0, 1), (1.5, 3))), ww, Window.open_interval(0.5, 2)))
    items.append(CorpusItem("half_line", IntervalSet(((0, math.inf),)),
                            (Window.open_interval(-1, 1), Window.open_interval(1, 2))))
    sq = PolySet.square(0, 0, 1, 1)
    items.append(CorpusItem("square", sq, (Window.box(-0.5, 1.5, -0.5, 1.5), Window.box(0.2, 0.8, -0.5, 0.5))))
    if not quick:
        ell = PolySet.from_polygons([[(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]])
        items.append(CorpusItem("l_shape", ell, (Window.box(-0.5, 1.5, -0.3, 1.2),)))
        ring = PolySet.from_polygons([[(0, 0), (3, 0), (3, 3), (0, 3)]], [[[(1, 1), (2, 1), (2, 2), (1, 2)]]])
        items.append(CorpusItem("square_hole", ring, (Window.box(0.5, 2.5, 0.5, 2.5),)))
    return tuple(items)


def _ineq(recs, item, name, a, lhs, rhs, tol):
    recs.append(SweepRecord(a, rhs, max(0.0, lhs - rhs), tol, {"lhs": lhs, "rhs": rhs},
                            f"{item}:{name}"))


def _local_set_mass(E, a_lo, a_hi, r):
    return float(sum(1 for e in E.endpoints if a_lo - r <= e <= a_hi + r))


def _buffered(win, r):
    if win.n == 1:
        a, b = win.interval
        return Window.open_interval(a - r, b + r)
    return Window(2, region=win.region.buffer(r, quad_segs=32))


def _field_inequalities(item, f, alphas, q, recs):
    n = f.spec.n
    h = f.spec.h
    model = default_model()
    nw = n * constants.unit_ball_volume(n)
    grad = local_gradient(f, q.fd_order)
    tv = lp_norm(grad, 1)
    g2, ginf = lp_norm(grad, 2), lp_norm(grad, math.inf)
    f1, f2, finf = lp_norm(f, 1), lp_norm(f, 2), lp_norm(f, math.inf)
    for a in alphas:
        rel = model.rel("frac_gradient", h, a)
        tol = lambda l, r, extra=0.0: (rel + extra) * (abs(l) + abs(r)) + FLOOR
        mu = constants.mu(n, a)
        g = frac_gradient(f, a, q)
        n1 = _whole_norm(f, a, g, 1)
        n2 = _whole_norm(f, a, g, 2)
        ninf = _whole_norm(f, a, g, math.inf)
        semi = V.sobolev_seminorm(f, a)
        _ineq(recs, item.name, "repr_L1", a, n1, mu * semi, tol(n1, mu * semi, model.rel("seminorm", h, a)))
        # phi = f e_1, so div^alpha phi is the first component of nabla^alpha f
        g1 = VectorField(f.spec, (g.components[0],) + tuple(np.zeros(f.spec.shape) for _ in range(n - 1)))
        lhs = _whole_norm(f, a, g1, math.inf,
                          lambda pts: frac_gradient_at(f, a, pts) * np.eye(n)[0])
        rhs = 2 ** (1 - a) * nw * mu / (a * (1 - a)) * ginf ** a * finf ** (1 - a)
        _ineq(recs, item.name, "div_lip", a, lhs, rhs, tol(lhs, rhs))
        c = nw * mu / (n + a - 1)
        for r in (0.5, 1.0, 2.0):
            rhs = c * (tv / (1 - a) * r ** (1 - a) + (n + 2 * a - 1) / a * f1 * r ** (-a))
            _ineq(recs, item.name, f"sobolev_interp_r{r:g}", a, n1, rhs, tol(n1, rhs))
            if item.local is not None:
                lhs = lp_norm(g, 1, item.local)
                mass = lp_norm(grad, 1, _buffered(item.local, r))
                rhs = c * (mass / (1 - a) * r ** (1 - a) + (n + 2 * a - 1) / a * f1 * r ** (-a))
                _ineq(recs, item.name, f"sobolev_interp_local_r{r:g}", a, lhs, rhs, tol(lhs, rhs))
        rhs = nw * mu * (n + 2 * a - 1) ** (1 - a) / (a * (1 - a) * (n + a - 1)) * f1 ** (1 - a) * tv ** a
        _ineq(recs, item.name, "sobolev_interp_opt", a, n1, rhs, tol(n1, rhs))
        rhs = (n + 2 * a - 1) ** (1 - a) / (n + a - 1) * nw * mu / (a * (1 - a)) * g2 ** a * f2 ** (1 - a)
        _ineq(recs, item.name, "w1p_p2", a, n2, rhs, tol(n2, rhs))
        rhs = 2 ** (1 - a) * nw * mu / (a * (1 - a)) * ginf ** a * finf ** (1 - a)
        _ineq(recs, item.name, "w1inf", a, ninf, rhs, tol(ninf, rhs))
        b = a / 2
        nb = _whole_norm(f, b, frac_gradient(f, b, q), 1)
        rhs = _alpha_beta_rhs(n, a, b, f1, n1)
        _ineq(recs, item.name, "ab_interp", a, nb, rhs, tol(nb, rhs, model.rel("frac_gradient", h, b)))
        if item.local is not None:
            lhs = lp_norm(g, 1, item.local)
            d, vol = item.local.diameter_and_volume()
            rhs = constants.c_region(n, a, RegionStats(d, vol, n)) * tv
            _ineq(recs, item.name, "local_c_region", a, lhs, rhs, tol(lhs, rhs))


def _alpha_beta_rhs(n, a, b, f1, tv_alpha):
    om1 = n * constants.unit_ball_volume(n)
    oma = V.unit_ball_variation(n, a)
    t = b / a
    num = a * constants.mu_generalized(n, 1 + b - a) * om1 ** t * oma ** (1 - t) * (n + 2 * b - a) ** (1 - t)
    return num / (b * (n + b - a) * (a - b)) * f1 ** (1 - t) * tv_alpha ** t


def _set_inequalities_1d(item, E, alphas, recs):
    finite = E.measure < math.inf
    for a in alphas:
        mu = constants.mu(1, a)
        tol = lambda l, r: EXACT_REL * (abs(l) + abs(r)) + FLOOR
        for w in item.windows:
            lhs = V.frac_variation(E, a, w)
            rhs = mu * V.frac_perimeter(E, a, w).tilde
            _ineq(recs, item.name, f"perim_tilde{w.interval}", a, lhs, rhs, tol(lhs, rhs))
        if not finite:
            continue
        n1 = V.frac_variation(E, a)
        tv = float(len(E.endpoints))
        f1 = E.measure
        P = V.frac_perimeter(E, a).total
        _ineq(recs, item.name, "repr_L1", a, n1, mu * P, tol(n1, mu * P))
        c = 2 * mu / a
        for r in (0.5, 1.0, 2.0):
            rhs = c * (tv / (1 - a) * r ** (1 - a) + (2 * a) / a * f1 * r ** (-a))
            _ineq(recs, item.name, f"sobolev_interp_r{r:g}", a, n1, rhs, tol(n1, rhs))
            if item.local is not None:
                lo, hi = item.local.interval
                lhs = V._integral_1d(E, a, lo, hi)
                rhs = c * (_local_set_mass(E, lo, hi, r) / (1 - a) * r ** (1 - a) + 2 * f1 * r ** (-a))
                _ineq(recs, item.name, f"sobolev_interp_local_r{r:g}", a, lhs, rhs, tol(lhs, rhs))
        rhs = 2 * mu * (2 * a) ** (1 - a) / (a * (1 - a) * a) * f1 ** (1 - a) * tv ** a
        _ineq(recs, item.name, "sobolev_interp_opt", a, n1, rhs, tol(n1, rhs))
        b = a / 2
        nb = V.frac_variation(E, b)
        rhs = _alpha_beta_rhs(1, a, b, f1, n1)
        _ineq(recs, item.name, "ab_interp", a, nb, rhs, tol(nb, rhs))
        if item.local is not None:
            lo, hi = item.local.interval
            lhs = V._integral_1d(E, a, lo, hi)
            rhs = constants.c_region(1, a, RegionStats(hi - lo, hi - lo, 1)) * tv
            _ineq(recs, item.name, "local_c_region", a, lhs, rhs, tol(lhs, rhs))


def _set_inequalities_2d(item, E, alphas, recs):
    for a in alphas:
        mu = constants.mu(2, a)
        for w in item.windows:
            lhs = V.indicator_variation_2d(E, a, w, 24)
            est = abs(lhs - V.indicator_variation_2d(E, a, w, 16))
            rhs = mu * V.frac_perimeter(E, a, w).tilde
            tol = 4 * est + EXACT_REL * (lhs + rhs) + FLOOR
            x0, y0, x1, y1 = w.region.bounds
            _ineq(recs, item.name, f"perim_tilde[{x0:g},{x1:g}]x[{y0:g},{y1:g}]", a, lhs, rhs, tol)


def inequality_suite(corpus=None, alphas=INEQ_ALPHAS, q=DEFAULT_QUAD):
    """Evaluate both sides of each inequality over corpus x alphas; pass iff
    lhs <= rhs + tol everywhere."""
    corpus = default_corpus() if corpus is None else corpus
    alphas = sorted(float(a) for a in alphas)
    recs = []
    for item in corpus:
        obj = item.obj
        if isinstance(obj, IntervalSet):
            _set_inequalities_1d(item, obj, alphas, recs)
        elif isinstance(obj, PolySet):
            _set_inequalities_2d(item, obj, alphas, recs)
        else:
            _field_inequalities(item, obj, alphas, q, recs)
    return SweepReport("inequality_suite", "alpha", tuple(recs), "all",
                       meta={"alphas": list(alphas), "items": [c.name for c in corpus]})


# ================================================================ 1D equality dichotomy

def dichotomy_corpus():
    """(E, Omega) pairs covering both verdicts of the 1D characterisation."""
    I = lambda *iv: IntervalSet(tuple(iv))
    W = Window.open_interval
    inf = math.inf
    return (
        ("half_line_right", I((0, inf)), W(-1, 1)),
        ("half_line_left", I((-inf, 0)), W(-1, 2)),
        ("gap_set_equality", I((-5, -4), (-1, inf)), W(0, 1)),
        ("gap_set_strict", I((-5, -4), (0, inf)), W(-1, 1)),
        ("interval", I((0, 1)), W(-2, 2)),
        ("two_intervals", I((0, 1), (2, 3)), W(-1, 4)),
        ("two_half_lines", I((-inf, 0), (1, inf)), W(-0.5, 0.5)),
        ("inside_half_line", I((0, inf)), W(1, 2)),
        ("gap_then_half_line", I((-3, -2), (0, inf)), W(0.5, 3)),
        ("window_beside_interval", I((0, 1)), W(2, 3)),
        ("window_in_gap", I((0, 1), (3, 4)), W(1.5, 2.5)),
    )


def equality_dichotomy(cases=None, alphas=(0.25, 0.5, 0.75), tol=EXACT_REL):
    """Numerical verdict (equality if the relative gap is <= tol, strict if > 5 tol)
    against equality_classifier_1d."""
    cases = dichotomy_corpus() if cases is None else cases
    recs = []
    for name, E, w in cases:
        predicted = V.equality_classifier_1d(E, w)
        for a in alphas:
            lhs = V.frac_variation(E, a, w)
            rhs = constants.mu(1, a) * V.frac_perimeter(E, a, w).tilde
            gap = (rhs - lhs) / rhs
            numeric = "equality" if abs(gap) <= tol else ("strict" if gap > 5 * tol else "undecided")
            match = numeric == predicted
            recs.append(SweepRecord(a, rhs, 0.0 if match else 1.0, 0.5,
                                    {"lhs": lhs, "rhs": rhs, "gap_rel": gap, "margin_over_tol": gap / tol,
                                     "predicted_equality": float(predicted == "equality"),
                                     "numeric_equality": float(numeric == "equality")}, name))
    return SweepReport("equality_dichotomy", "alpha", tuple(recs), "all", meta={"tol": tol})


# ================================================================ duality

def duality_study(spec, alphas, pairs=5, seed=0, q=DEFAULT_QUAD):
    """|int f div^alpha phi + int phi . nabla^alpha f| over seeded random bump pairs,
    relative to the Cauchy-Schwarz scale, against the calibrated duality budget."""
    from .grid import random_bump, random_vector_bump
    from .kernels import duality_residual

    model = default_model()
    rng = np.random.default_rng(seed)
    inputs = [(random_bump(spec, rng), random_vector_bump(spec, rng)) for _ in range(pairs)]
    recs = []
    for a in sorted(float(x) for x in alphas):
        for i, (f, phi) in enumerate(inputs):
            d = duality_residual(f, phi, a, q)
            recs.append(SweepRecord(a, 0.0, d.residual / d.scale, model.rel("duality", spec.h, a),
                                    {"lhs": d.lhs, "rhs": d.rhs, "scale": d.scale}, f"pair{i}"))
    return SweepReport("duality", "alpha", tuple(recs), "all",
                       meta={"n": spec.n, "m": spec.m, "h": spec.h, "seed": seed})
