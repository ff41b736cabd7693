"""Closed-form constants of the fractional calculus: Gamma, mu, ball volumes and
region constants."""

import math
from dataclasses import dataclass


def gamma_fn(x):
    """Euler Gamma for real x > 0.

    math.gamma is correctly rounded to a few ulps on the whole positive axis,
    which is well inside the 1e-12 budget the rest of the package relies on.
    """
    x = float(x)
    if not x > 0.0 or not math.isfinite(x):
        raise ValueError(f"gamma_fn needs x > 0, got {x!r}")
    if x > 171.0:
        raise OverflowError("gamma_fn overflows for x > 171")
    return math.gamma(x)


def _gamma_ratio(a, b):
    # Gamma(a)/Gamma(b) through lgamma when the values get large
    if a < 150 and b < 150:
        return math.gamma(a) / math.gamma(b)
    return math.exp(math.lgamma(a) - math.lgamma(b))


def _check_alpha(alpha):
    alpha = float(alpha)
    if not (0.0 < alpha < 1.0):
        raise ValueError(f"alpha must lie in the open interval (0, 1), got {alpha!r}")
    return alpha


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"dimension must be a positive integer, got {n!r}")
    return int(n)


@dataclass(frozen=True)
class FracOrder:
    alpha: float
    n: int = 1

    def __post_init__(self):
        object.__setattr__(self, "alpha", _check_alpha(self.alpha))
        object.__setattr__(self, "n", _check_n(self.n))

    @property
    def mu(self):
        return mu(self.n, self.alpha)


@dataclass(frozen=True)
class RegionStats:
    """Diameter and volume of a bounded open set U."""
    diam: float
    vol: float
    n: int = 1

    def __post_init__(self):
        if not (self.diam > 0 and self.vol > 0):
            raise ValueError("RegionStats needs diam > 0 and vol > 0")
        # isodiametric inequality, small slack for rounding
        if self.vol > unit_ball_volume(self.n) * (self.diam / 2) ** self.n * (1 + 1e-12):
            raise ValueError("vol exceeds the isodiametric bound for this diameter")

    @classmethod
    def box(cls, half_width, n):
        """Stats of the cube (-s, s)^n."""
        s = float(half_width)
        return cls(diam=2 * s * math.sqrt(n), vol=(2 * s) ** n, n=n)


def unit_ball_volume(n):
    n = _check_n(n)
    return math.pi ** (n / 2) / math.gamma(n / 2 + 1)


def mu_generalized(n, gamma):
    """2^g pi^{-n/2} Gamma((n+g+1)/2) / Gamma((1-g)/2) for any real g < 1.

    Negative orders appear as the normalisation of Riesz potentials.
    """
    n = _check_n(n)
    g = float(gamma)
    if not g < 1.0 or (n + g + 1) / 2 <= 0:
        raise ValueError(f"order {g!r} outside the admissible range")
    return 2.0 ** g * math.pi ** (-n / 2) * _gamma_ratio((n + g + 1) / 2, (1 - g) / 2)


def mu_over_one_minus_alpha(n, alpha):
    """mu_{n,alpha}/(1-alpha) computed without the cancellation near alpha=1."""
    n = _check_n(n)
    alpha = _check_alpha(alpha)
    return 2.0 ** (alpha - 1) * math.pi ** (-n / 2) * _gamma_ratio((n + alpha + 1) / 2, (1 - alpha) / 2 + 1)


def mu(n, alpha):
    """mu_{n,alpha} = 2^alpha pi^{-n/2} Gamma((n+alpha+1)/2) / Gamma((1-alpha)/2)."""
    alpha = _check_alpha(alpha)
    return mu_over_one_minus_alpha(n, alpha) * (1 - alpha)


def mu_zero(n):
    """The alpha -> 0 limit of mu_{n,alpha}."""
    return mu_generalized(n, 0.0)


def c_upper(n):
    """C_n, a uniform upper bound of mu_{n,alpha}/(1-alpha) on (0,1)."""
    n = _check_n(n)
    return math.pi ** (-n / 2) * math.sqrt(1.5) * math.gamma(n / 2 + 1) / math.gamma(1.5)


def c_region(n, alpha, stats):
    """C_{n,alpha,U}, the constant of the L^infty/L^1 estimates on a bounded set U."""
    n = _check_n(n)
    alpha = _check_alpha(alpha)
    w = unit_ball_volume(n)
    s = n + alpha - 1
    lead = n * mu_over_one_minus_alpha(n, alpha) / s
    return lead * (w * stats.diam ** (1 - alpha) + (n * w / s) ** (s / n) * stats.vol ** ((1 - alpha) / n))


def kappa_region(n, stats):
    """kappa_{n,U}, bounding C_{n,alpha,U} uniformly for alpha in (1/2, 1)."""
    n = _check_n(n)
    w = unit_ball_volume(n)
    pre = n * w * c_upper(n) / (n - 0.5)
    return pre * ((n / (n - 0.5)) * max(1.0, stats.vol / w) ** (1.0 / n) + max(1.0, math.sqrt(stats.diam)))


def riesz_constant(n, sigma):
    """Normalisation of I_sigma: mu_{n,1-sigma}/(n-sigma), sigma in (0, n)."""
    n = _check_n(n)
    sigma = float(sigma)
    if not (0.0 < sigma < n):
        raise ValueError(f"sigma must lie in (0, {n}), got {sigma!r}")
    return mu_generalized(n, 1 - sigma) / (n - sigma)
