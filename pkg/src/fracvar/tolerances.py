"""Declared error budgets: tol(h) = C_tol * h^min(2-alpha, 1) * scale, with one
calibrated constant per operator (see tools/calibrate_tolerances.py)."""

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

# relative budgets for quantities computed by exact antiderivatives or closed forms
EXACT_REL = 1e-9
# absolute floor so that zero inputs compare cleanly
FLOOR = 1e-12


def budget_order(alpha):
    return min(2.0 - alpha, 1.0)


@dataclass(frozen=True)
class ToleranceModel:
    constants: dict = field(default_factory=dict)
    safety: float = 4.0

    def c_tol(self, op):
        try:
            return self.constants[op]
        except KeyError:
            raise KeyError(f"no calibrated tolerance for operator {op!r}") from None

    def rel(self, op, h, alpha):
        """Relative budget at spacing h."""
        return self.c_tol(op) * h ** budget_order(alpha)

    def tol(self, op, h, alpha, scale):
        return self.rel(op, h, alpha) * abs(scale) + FLOOR

    def to_dict(self):
        return {"safety": self.safety, "constants": dict(sorted(self.constants.items()))}


@lru_cache(maxsize=1)
def default_model():
    text = resources.files("fracvar").joinpath("data/tolerances.json").read_text()
    data = json.loads(text)
    return ToleranceModel({k: float(v) for k, v in data["constants"].items()}, float(data["safety"]))


def within(value, reference, tol):
    return abs(value - reference) <= tol


def rel_gap(value, reference):
    if reference == 0:
        return abs(value)
    return abs(value - reference) / abs(reference)


def is_finite(*xs):
    return all(math.isfinite(x) for x in xs)
