"""Command-line front end.

    fracvar eval   --config run.toml --out out/
    fracvar sweep  --config run.toml --out out/
    fracvar gamma  --config run.toml --out out/
    fracvar report out/a.json out/b.json --out merged/

Exit codes: 0 pass, 2 config error, 3 numerical budget or failed verdict,
4 report schema mismatch. Config values can be overridden from the
environment: FRACVAR_SEED=3, FRACVAR_GRID__H=0.01 (section__key).
"""

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np

from . import asymptotics as A
from . import constants
from .geometry import IntervalSet, load_geometry
from .grid import (GridSpec, ScalarField, VectorField, Window, make_bump, make_gaussian_cutoff,
                   random_bump, save_field, zero_field)
from .kernels import QuadParams, duality_residual, frac_divergence, frac_gradient, riesz_potential
from .tolerances import default_model

EXIT_OK, EXIT_CONFIG, EXIT_BUDGET, EXIT_SCHEMA = 0, 2, 3, 4
ENV_PREFIX = "FRACVAR_"
SWEEP_KINDS = ("alpha_sweep", "beta_sweep", "weakstar", "gamma", "inequality", "duality")
EVAL_OPS = ("grad", "div", "riesz")


class ConfigError(ValueError):
    pass


class BudgetError(RuntimeError):
    pass


class SchemaError(ValueError):
    pass


# ---------------------------------------------------------------- config

@dataclass
class RunConfig:
    experiment: str
    grid: dict = field(default_factory=dict)
    input: dict = field(default_factory=dict)
    operator: dict = field(default_factory=dict)
    window: dict = field(default_factory=dict)
    quadrature: dict = field(default_factory=dict)
    tolerance: dict = field(default_factory=dict)
    families: list = field(default_factory=list)
    test_functions: list = field(default_factory=list)
    output: dict = field(default_factory=dict)
    seed: int = 0
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, d, base_dir=Path(".")):
        d = dict(d)
        known = {"experiment", "grid", "input", "operator", "window", "quadrature", "tolerance",
                 "families", "test_functions", "output", "seed"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        if "experiment" not in d:
            raise ConfigError("config needs an 'experiment'")
        seed = d.get("seed", 0)
        if not isinstance(seed, int) or isinstance(seed, bool):
            raise ConfigError("seed must be an integer")
        return cls(base_dir=Path(base_dir), **d)

    @classmethod
    def load(cls, path, env=None):
        path = Path(path)
        try:
            data = tomllib.loads(path.read_text())
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"cannot read config {path}: {e}") from None
        apply_env(data, os.environ if env is None else env)
        return cls.from_dict(data, path.parent)


def _parse_env_value(text):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_env(data, env):
    for key in sorted(env):
        if not key.startswith(ENV_PREFIX):
            continue
        parts = key[len(ENV_PREFIX):].lower().split("__")
        node = data
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"{key} does not name a config table")
        node[parts[-1]] = _parse_env_value(env[key])
    return data


def _alpha(x, name="alpha"):
    try:
        return constants.FracOrder(float(x)).alpha
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{name}: {e}") from None


def build_grid(cfg):
    g = cfg.grid
    try:
        n = int(g.get("n", 1))
        L = float(g["half_width"])
        if "h" in g:
            return GridSpec.from_spacing(n, L, float(g["h"]))
        return GridSpec(n, L, int(g["m"]))
    except KeyError as e:
        raise ConfigError(f"grid needs {e.args[0]!r}") from None
    except (TypeError, ValueError) as e:
        raise ConfigError(f"grid: {e}") from None


def build_quad(cfg, threads):
    try:
        return QuadParams(**cfg.quadrature, workers=threads)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"quadrature: {e}") from None


def _center(spec, c):
    if spec.n == 1:
        return float(c if not isinstance(c, list) else c[0])
    return tuple(float(v) for v in (c if isinstance(c, list) else (c, c)))


def build_input(cfg, spec):
    """ScalarField, IntervalSet or PolySet described by the [input] table."""
    inp = dict(cfg.input)
    kind = inp.pop("kind", None)
    try:
        if kind == "bump":
            return make_bump(spec, _center(spec, inp.get("center", 0.0)), float(inp.get("radius", 1.0)),
                             float(inp.get("height", 1.0)))
        if kind == "gaussian_cutoff":
            return make_gaussian_cutoff(spec, float(inp.get("sigma", 1.0)), float(inp.get("cutoff_radius", 8.0)))
        if kind == "random_bump":
            return random_bump(spec, np.random.default_rng(cfg.seed))
        if kind == "zero":
            return zero_field(spec)
        if kind == "intervals":
            return IntervalSet(tuple(tuple(map(float, iv)) for iv in inp["intervals"]))
        if kind == "geometry":
            return load_geometry((cfg.base_dir / inp["path"]).read_text())
    except KeyError as e:
        raise ConfigError(f"input needs {e.args[0]!r}") from None
    except (OSError, TypeError, ValueError) as e:
        raise ConfigError(f"input: {e}") from None
    raise ConfigError(f"unknown input kind {kind!r}")


def build_window(cfg, n):
    w = cfg.window
    try:
        if "interval" in w:
            return Window.open_interval(*map(float, w["interval"]))
        if "box" in w:
            return Window.box(*map(float, w["box"]))
        if "polygon" in w:
            return Window.polygon([tuple(map(float, p)) for p in w["polygon"]])
    except (TypeError, ValueError) as e:
        raise ConfigError(f"window: {e}") from None
    return Window.whole(n)


def _alphas(cfg, default):
    return [_alpha(a, "alphas") for a in cfg.operator.get("alphas", default)]


# ---------------------------------------------------------------- eval

def _vector_from(f, axis):
    comps = [np.zeros(f.spec.shape) for _ in range(f.spec.n)]
    comps[axis] = f.values
    return VectorField(f.spec, tuple(comps), f.support_radius)


def cmd_eval(cfg, out, threads=1, deterministic=False):
    spec = build_grid(cfg)
    q = build_quad(cfg, threads)
    f = build_input(cfg, spec)
    if not isinstance(f, ScalarField):
        raise ConfigError("eval needs a sampled field input")
    op = cfg.operator.get("op", "grad")
    if op not in EVAL_OPS:
        raise ConfigError(f"operator.op must be one of {EVAL_OPS}")
    model = default_model()
    meta = {"grid": spec.to_dict(), "op": op, "h": spec.h}
    if op == "riesz":
        sigma = float(cfg.operator.get("sigma", 0.5))
        if not 0 < sigma < spec.n:
            raise ConfigError(f"operator.sigma must lie in (0, {spec.n})")
        res = riesz_potential(f, sigma, q)
        meta.update(sigma=sigma, riesz_constant=constants.riesz_constant(spec.n, sigma))
        tol = None
    else:
        a = _alpha(cfg.operator.get("alpha"))
        axis = int(cfg.operator.get("axis", 0))
        if not 0 <= axis < spec.n:
            raise ConfigError("operator.axis out of range")
        phi = _vector_from(f, axis)
        res = frac_gradient(f, a, q) if op == "grad" else frac_divergence(phi, a, q)
        d = duality_residual(f, phi, a, q)
        tol = model.rel("duality", spec.h, a)
        rel = d.residual / d.scale if d.scale else 0.0
        meta.update(alpha=a, mu=constants.mu(spec.n, a), declared_tolerance=tol,
                    duality_residual=rel,
                    frac_gradient_budget=model.rel("frac_gradient", spec.h, a))
    arrays = res.components if isinstance(res, VectorField) else (res.values,)
    out.mkdir(parents=True, exist_ok=True)
    if not deterministic:
        meta["created"] = time.strftime("%Y-%m-%dT%H:%M:%S")
    fmt = cfg.output.get("format", "bin")
    if fmt not in ("bin", "csv"):
        raise ConfigError("output.format must be 'bin' or 'csv'")
    name = cfg.output.get("name", op)
    save_field(out / f"{name}.field", res, fmt, meta)
    (out / f"{name}.meta.json").write_text(json.dumps(meta, indent=1, sort_keys=True) + "\n")
    if not all(np.all(np.isfinite(c)) for c in arrays):
        raise BudgetError("non-finite values in the result")
    if tol is not None and meta["duality_residual"] > tol:
        raise BudgetError(f"duality residual {meta['duality_residual']:.3e} exceeds budget {tol:.3e}")
    return EXIT_OK


# ---------------------------------------------------------------- sweeps

def _families(cfg):
    fams = cfg.families or [{"kind": "constant"}, {"kind": "translate"}, {"kind": "dilate"}]
    try:
        return [A.PerturbationFamily(**fam) for fam in fams]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"families: {e}") from None


def _test_fns(cfg, spec):
    fns = cfg.test_functions or [{"center": 0.5, "radius": 1.5}]
    try:
        return [make_bump(spec, _center(spec, t.get("center", 0.0)), float(t.get("radius", 1.0)),
                          float(t.get("height", 1.0))) for t in fns]
    except (TypeError, ValueError) as e:
        raise ConfigError(f"test_functions: {e}") from None


def run_sweep(cfg, threads=1):
    kind = cfg.experiment
    if kind not in SWEEP_KINDS:
        raise ConfigError(f"experiment must be one of {SWEEP_KINDS}, got {kind!r}")
    q = build_quad(cfg, threads)
    tol = cfg.tolerance
    if kind == "inequality":
        return A.inequality_suite(A.default_corpus(bool(cfg.operator.get("quick", False))),
                                  _alphas(cfg, A.INEQ_ALPHAS), q)
    spec = build_grid(cfg)
    if kind == "duality":
        return A.duality_study(spec, _alphas(cfg, (0.3, 0.5, 0.7, 0.9)),
                               int(cfg.operator.get("pairs", 5)), cfg.seed, q)
    obj = build_input(cfg, spec)
    if kind == "alpha_sweep":
        p = cfg.operator.get("p", 1)
        p = math.inf if p in ("inf", math.inf) else p
        if p not in (1, 2, math.inf):
            raise ConfigError("operator.p must be 1, 2 or 'inf'")
        return A.sweep_alpha_to_one(obj, p, _alphas(cfg, A.DEFAULT_ALPHAS), q,
                                    float(tol.get("total_mass", 0.02)))
    if kind == "beta_sweep":
        a = _alpha(cfg.operator.get("alpha", 0.7))
        betas = [_alpha(b, "betas") for b in cfg.operator.get("betas", (0.5, 0.6, 0.65, 0.69))]
        return A.sweep_beta_to_alpha(obj, a, betas, q, float(tol.get("total_mass", 0.02)))
    if kind == "weakstar":
        return A.weakstar_test(obj, _alphas(cfg, A.DEFAULT_ALPHAS), _test_fns(cfg, spec), q,
                               float(tol.get("weakstar", 0.03)))
    w = build_window(cfg, spec.n)
    return A.gamma_falsification(obj, w, _alphas(cfg, A.DEFAULT_ALPHAS), _families(cfg), q,
                                 float(tol.get("gamma", 0.03)))


def write_report(report, out, name=None):
    out.mkdir(parents=True, exist_ok=True)
    name = name or report.kind
    (out / f"{name}.json").write_text(report.to_json() + "\n")
    (out / f"{name}.csv").write_text(report.to_csv())


def cmd_sweep(cfg, out, threads=1, deterministic=False):
    try:
        report = run_sweep(cfg, threads)
    except (TypeError, ValueError) as e:
        if isinstance(e, ConfigError):
            raise
        raise ConfigError(str(e)) from None
    write_report(report, out, cfg.output.get("name"))
    if report.flags:
        for fl in report.flags:
            print(f"flag: {fl}", file=sys.stderr)
        raise ConfigError("report flagged, no verdict emitted")
    if not report.verdict:
        raise BudgetError(f"verdict failed: {', '.join(report.failures())}")
    return EXIT_OK


# ---------------------------------------------------------------- report

SUMMARY_COLUMNS = ("schema_version", "source", "kind", "label", "param", "reference", "residual",
                   "tolerance", "pass")


def _load_reports(path):
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigError(f"cannot read report {path}: {e}") from None
    if data.get("schema_version") != A.SCHEMA_VERSION:
        raise SchemaError(f"{path}: schema version {data.get('schema_version')!r}, "
                          f"expected {A.SCHEMA_VERSION}")
    if data.get("kind") == "summary":
        return [(s, A.SweepReport.from_dict(r)) for s, r in data["reports"]]
    return [(Path(path).name, A.SweepReport.from_dict(data))]


def merge_reports(paths):
    """Flatten reports (or earlier summaries) into (summary dict, csv text, table text)."""
    items = [it for p in paths for it in _load_reports(p)]
    rows = []
    for src, rep in items:
        for r in rep.records:
            rows.append((str(A.SCHEMA_VERSION), src, rep.kind, r.label, repr(r.param), repr(r.reference),
                         repr(r.residual), repr(r.tolerance), str(r.residual <= r.tolerance).lower()))
    summary = {"schema_version": A.SCHEMA_VERSION, "kind": "summary",
               "reports": [[s, r.to_dict()] for s, r in items]}
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    w.writerows(rows)
    widths = [max([len(c)] + [len(r[i]) for r in rows]) for i, c in enumerate(SUMMARY_COLUMNS)]
    fmt = lambda row: "  ".join(v.ljust(k) for v, k in zip(row, widths)).rstrip()
    table = "\n".join([fmt(SUMMARY_COLUMNS)] + [fmt(r) for r in rows]) + "\n"
    verdicts = [f"{s}: {rep.kind} verdict={rep.verdict}" for s, rep in items]
    table += "".join(v + "\n" for v in verdicts)
    return summary, buf.getvalue(), table


def cmd_report(paths, out):
    summary, text_csv, table = merge_reports(paths)
    sys.stdout.write(table)
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "summary.json").write_text(json.dumps(summary, indent=1, sort_keys=True) + "\n")
        (out / "summary.csv").write_text(text_csv)
        (out / "summary.txt").write_text(table)
    return EXIT_OK


# ---------------------------------------------------------------- entry point

def build_parser():
    ap = argparse.ArgumentParser(prog="fracvar", description="Fractional gradient and variation experiments.")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, helptext in (("eval", "evaluate an operator on a field"),
                           ("sweep", "run a parameter sweep and write a report"),
                           ("gamma", "run the Gamma-liminf falsification harness")):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("--config", required=True, type=Path)
        sp.add_argument("--out", type=Path, default=Path("fracvar-out"))
        sp.add_argument("--deterministic", action="store_true",
                        help="fixed reduction order and no run-dependent metadata")
        sp.add_argument("--threads", type=int, default=1)
    sp = sub.add_parser("report", help="merge report files into one table")
    sp.add_argument("paths", nargs="*", type=Path)
    sp.add_argument("--out", type=Path, default=None)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return cmd_report(args.paths, args.out)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        cfg = RunConfig.load(args.config)
        if args.command == "eval":
            if cfg.experiment != "eval":
                raise ConfigError(f"eval expects experiment = 'eval', got {cfg.experiment!r}")
            return cmd_eval(cfg, args.out, args.threads, args.deterministic)
        if args.command == "gamma" and cfg.experiment != "gamma":
            raise ConfigError(f"gamma expects experiment = 'gamma', got {cfg.experiment!r}")
        return cmd_sweep(cfg, args.out, args.threads, args.deterministic)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BudgetError as e:
        print(f"budget violation: {e}", file=sys.stderr)
        return EXIT_BUDGET
    except SchemaError as e:
        print(f"schema error: {e}", file=sys.stderr)
        return EXIT_SCHEMA


if __name__ == "__main__":
    sys.exit(main())
