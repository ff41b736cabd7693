"""Quadrature rules: Gauss panels, Gauss-Jacobi tails, tanh-sinh with accurate
endpoint distances, Duffy triangles, and exterior-of-box rules."""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import betainc, betaln, roots_jacobi, roots_legendre


@lru_cache(maxsize=None)
def gauss_legendre(k):
    x, w = roots_legendre(k)
    return x, w


@lru_cache(maxsize=None)
def gauss_jacobi01(k, gamma):
    """Nodes/weights on (0,1) for the weight t^gamma."""
    x, w = roots_jacobi(k, 0.0, gamma)  # weight (1-x)^0 (1+x)^gamma on (-1,1)
    t = (1 + x) / 2
    return t, w / 2 ** (gamma + 1)


def panels(breaks, k=8):
    """Composite Gauss-Legendre on consecutive breakpoints."""
    xg, wg = gauss_legendre(k)
    breaks = np.asarray(breaks, dtype=float)
    a, b = breaks[:-1, None], breaks[1:, None]
    x = (a + b) / 2 + (b - a) / 2 * xg
    w = (b - a) / 2 * wg
    return x.ravel(), w.ravel()


@dataclass(frozen=True)
class EndpointRule:
    """Rule on [0,1] for integrands with |d|^{-alpha} singularities at both ends.

    Gauss-Legendre in s after the map x = I_s(p, p) (regularized incomplete beta)
    with integer p >= 2/(1 - alpha): both d^{-alpha} and smooth parts become at
    least C^1 in s.
    `left` and `right` are the node distances to the two endpoints, each
    accurate to full relative precision."""
    left: np.ndarray
    right: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def endpoint_rule(alpha, k=24, npanels=2):
    p = float(min(math.ceil(2.0 / (1.0 - min(max(alpha, 0.0), 0.975))), 80))
    s, ws = panels(np.linspace(0.0, 1.0, npanels + 1), k)
    left = betainc(p, p, s)
    right = betainc(p, p, 1.0 - s)
    dens = np.exp((p - 1) * (np.log(s) + np.log1p(-s)) - betaln(p, p))
    return EndpointRule(left, right, ws * dens)


def integrate_interval(fun, a, b, alpha=0.5):
    """Integrate fun over [a, b]; fun receives (x, dist_to_a, dist_to_b)."""
    r = endpoint_rule(alpha)
    L = b - a
    dl, dr = L * r.left, L * r.right
    x = np.where(r.left < 0.5, a + dl, b - dr)
    return math.fsum(fun(x, dl, dr) * r.weights * L)


@lru_cache(maxsize=None)
def _duffy_nodes(alpha, k):
    r = endpoint_rule(alpha, k)
    U, S = np.meshgrid(r.left, r.left, indexing="ij")
    W = np.outer(r.weights, r.weights) * U
    return U.ravel(), S.ravel(), W.ravel()


def triangle_rule(tri, alpha=0.5, k=16):
    """Nodes and weights on a triangle, graded toward every edge (Duffy collapse
    at the first vertex, endpoint rule in both collapsed coordinates)."""
    v0, v1, v2 = (np.asarray(v, dtype=float) for v in tri)
    U, S, W = _duffy_nodes(alpha, k)
    pts = v0 + U[:, None] * ((v1 - v0) + S[:, None] * (v2 - v1))
    area2 = abs((v1[0] - v0[0]) * (v2[1] - v0[1]) - (v1[1] - v0[1]) * (v2[0] - v0[0]))
    return pts, W * area2


# ---------------------------------------------------------------- exterior of the box

@dataclass(frozen=True)
class ExteriorRule:
    """Quadrature for integrals over R^n minus [-L, L]^n of functions decaying like
    |x|^{-decay}. Panels are graded toward the box so that fields whose support
    ends at distance `gap` from the box are resolved."""
    points: np.ndarray   # (N,) in 1D, (N, 2) in 2D
    weights: np.ndarray


def _graded_breaks(start, stop, first):
    b = [start]
    w = first
    while b[-1] + w < stop - 0.5 * w:
        b.append(b[-1] + w)
        w *= 2.0
    b.append(stop)
    return np.array(b)


@lru_cache(maxsize=64)
def exterior_rule(n, L, gap, decay, k=10):
    if decay <= n:
        raise ValueError("exterior integrand must decay faster than |x|^{-n}")
    first = max(min(gap, L) / 2, 1e-6 * L)
    near_x, near_w = panels(_graded_breaks(L, 2 * L, first), k)
    gamma = decay - n - 1
    t, wt = gauss_jacobi01(3 * k, gamma)
    if n == 1:
        # far part: x = 2L/t, dx = 2L/t^2 dt, integrand ~ t^decay
        far_x = 2 * L / t
        far_w = wt * 2 * L / t ** 2 / t ** gamma
        x = np.concatenate([near_x, far_x])
        w = np.concatenate([near_w, far_w])
        return ExteriorRule(np.concatenate([-x[::-1], x]), np.concatenate([w[::-1], w]))
    # 2D: ring [-2L,2L]^2 minus the box as eight blocks, then a polar far field
    mid_x, mid_w = panels(np.linspace(-L, L, 9), k)
    pts, wts = [], []
    for sx in (-1, 0, 1):
        for sy in (-1, 0, 1):
            if sx == 0 and sy == 0:
                continue
            ax = (sx * near_x, near_w) if sx else (mid_x, mid_w)
            ay = (sy * near_x, near_w) if sy else (mid_x, mid_w)
            X, Y = np.meshgrid(ax[0], ay[0], indexing="ij")
            pts.append(np.stack([X.ravel(), Y.ravel()], axis=1))
            wts.append(np.outer(ax[1], ay[1]).ravel())
    # far field: r = rho(theta)/t, rho = 2L/max(|cos|,|sin|); dA = rho^2 t^-3 dt dtheta
    th, wth = panels(np.linspace(-math.pi / 4, 7 * math.pi / 4, 17), k)
    rho = 2 * L / np.maximum(np.abs(np.cos(th)), np.abs(np.sin(th)))
    T, TH = np.meshgrid(t, th, indexing="ij")
    R = (rho[None, :] / T)
    pts.append(np.stack([(R * np.cos(TH)).ravel(), (R * np.sin(TH)).ravel()], axis=1))
    wts.append((np.outer(wt, wth) * rho[None, :] ** 2 / T ** 3 / T ** gamma).ravel())
    return ExteriorRule(np.concatenate(pts), np.concatenate(wts))
