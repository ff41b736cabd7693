"""Calibrate the per-operator constants C_tol of tol(h) = C_tol h^min(2-alpha,1).

Each constant is safety * max(err / h^order) over a fixed set of smooth inputs,
where err is a relative error against an independent reference:
  frac_gradient  Fourier-multiplier oracle (padded, 1D image-corrected)
  seminorm       closed-form reductions for symmetric unimodal profiles
  duality        the pairing residual itself (its reference is 0)

Writes src/fracvar/data/tolerances.json.
"""

import json
import math
from pathlib import Path

import numpy as np
from scipy.integrate import quad

from fracvar import kernels, spectral, variation
from fracvar.grid import GridSpec, lp_norm, make_bump, make_gaussian_cutoff, random_bump, random_vector_bump
from fracvar.tolerances import budget_order

ALPHAS = (0.25, 0.5, 0.75, 0.9, 0.99)
SAFETY = 4.0
OUT = Path(__file__).resolve().parents[1] / "src" / "fracvar" / "data" / "tolerances.json"


def grad_cases():
    for h in (1 / 16, 1 / 32):
        spec = GridSpec.from_spacing(1, 16.0, h)
        yield make_gaussian_cutoff(spec, 1.0, 8.0), 4
    for m in (65, 129):
        spec = GridSpec(1, 2.0, m)
        yield make_bump(spec, 0.0, 1.0), 4
    for m in (65, 129):
        spec = GridSpec(2, 2.0, m)
        yield make_bump(spec, (0.0, 0.0), 1.0), 8


def bump1(x):
    return math.exp(1 - 1 / (1 - x * x)) if abs(x) < 1 else 0.0


def seminorm_oracle(n, alpha):
    # for symmetric unimodal profiles ||f(.+z) - f||_1 is twice the mass of the
    # slab |x . z| < |z|/2, which integrates to a single weighted moment
    if n == 1:
        g = bump1
        c = 4 / alpha
    else:
        g = lambda x: 2 * quad(lambda y: bump1(math.hypot(x, y)), 0, math.sqrt(max(1 - x * x, 0)),
                               epsabs=1e-14)[0]
        c = 4 * math.pi / alpha
    return 2 * c * 2 ** -alpha * quad(g, 0, 1, weight="alg", wvar=(-alpha, 0), epsabs=1e-14)[0]


def calibrate():
    ratios = {"frac_gradient": [], "seminorm": [], "duality": []}
    for f, pad in grad_cases():
        h = f.spec.h
        for a in ALPHAS:
            q = kernels.frac_gradient(f, a)
            o = spectral.apply_multiplier(f, spectral.MultiplierSymbol("frac_gradient", a), pad)
            err = lp_norm(q - o, 1) / lp_norm(o, 1)
            ratios["frac_gradient"].append(err / h ** budget_order(a))
    for n, ms in ((1, (257, 513)), (2, (65,))):
        for a in (0.25, 0.5, 0.75, 0.9):
            ref = seminorm_oracle(n, a)
            for m in ms:
                spec = GridSpec(n, 2.0, m)
                f = make_bump(spec, (0.0,) * n if n == 2 else 0.0, 1.0)
                err = abs(variation.sobolev_seminorm(f, a) - ref) / ref
                ratios["seminorm"].append(err / spec.h ** budget_order(a))
    rng = np.random.default_rng(20240601)
    for n, ms in ((1, (129, 257, 513)), (2, (33, 65, 129))):
        for m in ms:
            spec = GridSpec(n, 2.0, m)
            for _ in range(6):
                f = random_bump(spec, rng)
                phi = random_vector_bump(spec, rng)
                for a in ALPHAS:
                    d = kernels.duality_residual(f, phi, a)
                    ratios["duality"].append(d.residual / d.scale / spec.h ** budget_order(a))
    consts = {k: SAFETY * max(max(v), 1e-14) for k, v in ratios.items()}
    return consts, {k: max(v) for k, v in ratios.items()}


def main():
    consts, raw = calibrate()
    data = {"safety": SAFETY, "constants": {k: float(f"{v:.3e}") for k, v in sorted(consts.items())},
            "max_observed_ratio": {k: float(f"{v:.3e}") for k, v in sorted(raw.items())},
            "order": "min(2 - alpha, 1)"}
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(data, indent=2) + "\n")
    print(json.dumps(data, indent=2))


if __name__ == "__main__":
    main()
