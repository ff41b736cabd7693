"""Regenerate tests/data/gamma_reference.json with mpmath at 50 digits."""

import json
from pathlib import Path

import mpmath
import numpy as np

mpmath.mp.dps = 50


def main():
    xs = np.concatenate([np.geomspace(1e-3, 1.0, 80, endpoint=False), np.linspace(1.0, 50.0, 120)])
    rows = [[repr(float(x)), mpmath.nstr(mpmath.gamma(mpmath.mpf(float(x))), 30)] for x in xs]
    out = Path(__file__).resolve().parents[1] / "tests" / "data" / "gamma_reference.json"
    out.write_text(json.dumps({"digits": 50, "rows": rows}, indent=1) + "\n")
    print(f"wrote {len(rows)} rows to {out}")


if __name__ == "__main__":
    main()
