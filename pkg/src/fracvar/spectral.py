"""Fourier-multiplier oracle on zero-padded periodic grids, and the fractional
Laplacian."""

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft
from scipy.special import zeta as hurwitz_zeta

from . import constants
from .grid import GridSpec, ScalarField, VectorField, lp_norm
from .kernels import DEFAULT_QUAD, _grad_raw, _near_field, _third_derivative_1d, frac_gradient
from .grid import diff_axis

KINDS = ("frac_gradient", "frac_divergence", "frac_laplacian")


@dataclass(frozen=True)
class MultiplierSymbol:
    """frac_gradient(a): i xi |xi|^{a-1} per component; frac_divergence(a): the
    same contracted with a vector field; frac_laplacian(s): |xi|^s."""
    kind: str
    order: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown symbol kind {self.kind!r}")
        if self.kind == "frac_laplacian":
            if not self.order >= 0:
                raise ValueError("frac_laplacian needs s >= 0 (bounded symbol near 0)")
        elif not (0 < self.order <= 1):
            raise ValueError("gradient/divergence symbols need order in (0, 1]")

    def radial(self, r):
        with np.errstate(divide="ignore", invalid="ignore"):
            if self.kind == "frac_laplacian":
                out = r ** self.order
            else:
                out = r ** (self.order - 1)
        out = np.where(r > 0, out, 0.0)
        return out


def padded_spec(spec, pad_factor):
    return GridSpec(spec.n, spec.half_width * pad_factor, pad_factor * (spec.m - 1) + 1)


def _frequencies(N, h, n):
    k = 2 * math.pi * sfft.fftfreq(N, d=h)
    if n == 1:
        return (k,)
    return tuple(np.meshgrid(k, k, indexing="ij"))


def _embed(a, pad_factor):
    m = a.shape[0]
    N = pad_factor * (m - 1) + 1
    big = np.zeros((N,) * a.ndim)
    off = (N - m) // 2
    big[tuple(slice(off, off + m) for _ in range(a.ndim))] = a
    return big, off


def _check_support(f):
    if f.support_radius is None or f.support_radius > f.spec.half_width / 2 + 1e-12:
        raise ValueError("spectral oracle needs support_radius <= L/2")


def _apply_raw(arrays, sym, pad_factor, n, h, keep_full=False):
    """Return the (complex) transformed arrays on the padded grid or its centre."""
    m = arrays[0].shape[0]
    bigs = [_embed(a, pad_factor) for a in arrays]
    off = bigs[0][1]
    N = bigs[0][0].shape[0]
    K = _frequencies(N, h, n)
    r = np.sqrt(sum(k * k for k in K))
    rad = sym.radial(r)
    # ifftshift so that the node at the box centre sits at index 0
    hats = [sfft.fftn(sfft.ifftshift(b)) for b, _ in bigs]
    if sym.kind == "frac_laplacian":
        outs = [rad * hh for hh in hats]
    elif sym.kind == "frac_gradient":
        outs = [1j * k * rad * hats[0] for k in K]
    else:
        outs = [sum(1j * k * rad * hh for k, hh in zip(K, hats))]
    res = [sfft.fftshift(sfft.ifftn(o)) for o in outs]
    if keep_full:
        return res
    sl = tuple(slice(off, off + m) for _ in range(n))
    return [x[sl] for x in res]


def _image_sum_1d(values, spec, alpha, period, kmax=14):
    """Sum over j != 0 of (nabla^alpha f)(x + j*period) at the nodes, from the
    far-field moment expansion of nabla^alpha f and Hurwitz zeta sums."""
    x = spec.axis
    w = np.full(spec.m, spec.h)
    mu = constants.mu(1, alpha)
    out = np.zeros(spec.m)
    ck = 1.0
    for k in range(kmax + 1):
        if k > 0:
            ck *= (1 + alpha + k - 1) / k
        Mk = math.fsum(values * x ** k * w)
        s = 1 + alpha + k
        right = period ** (-s) * hurwitz_zeta(s, 1 + x / period)
        left = period ** (-s) * hurwitz_zeta(s, 1 - x / period)
        out += mu * ck * Mk * (-right + (-1) ** k * left)
    return out


def apply_multiplier(f, sym, pad_factor=4, return_imag=False, image_correction=True):
    """Apply a Fourier multiplier to a compactly supported field on a grid padded
    by `pad_factor`; result restricted to the original nodes.

    The transform computes the periodisation of the result. In 1D the periodic
    images of the fractional gradient decay only algebraically, so they are
    subtracted analytically unless `image_correction` is off."""
    if int(pad_factor) != pad_factor or pad_factor < 2:
        raise ValueError("pad_factor must be an integer >= 2")
    spec = f.spec
    if isinstance(f, VectorField):
        if sym.kind != "frac_divergence":
            raise ValueError("vector inputs take the frac_divergence symbol")
        _check_support(f)
        arrays = list(f.components)
    else:
        if sym.kind == "frac_divergence":
            raise ValueError("frac_divergence needs a vector field")
        _check_support(f)
        arrays = [f.values]
    res = _apply_raw(arrays, sym, int(pad_factor), spec.n, spec.h)
    imag = max(float(np.abs(x.imag).max()) for x in res)
    real = [x.real for x in res]
    if image_correction and spec.n == 1 and sym.kind != "frac_laplacian" and sym.order < 1:
        period = (pad_factor * (spec.m - 1) + 1) * spec.h
        corr = _image_sum_1d(arrays[0], spec, sym.order, period)
        real = [real[0] - corr]
    out = VectorField(spec, tuple(real)) if sym.kind == "frac_gradient" else ScalarField(spec, real[0])
    if return_imag:
        return out, imag
    return out


def spectral_frac_gradient(f, alpha, pad_factor=4):
    return apply_multiplier(f, MultiplierSymbol("frac_gradient", alpha), pad_factor)


def frac_laplacian(f, s, pad_factor=4):
    return apply_multiplier(f, MultiplierSymbol("frac_laplacian", s), pad_factor)


def parseval_ratio(f, pad_factor=4):
    """L2 norm after forward+inverse transform over L2 norm before."""
    res = _apply_raw([f.values], MultiplierSymbol("frac_laplacian", 0.0), pad_factor, f.spec.n, f.spec.h)
    # |xi|^0 is 1 except at the zero mode, where the symbol is 0; add the
    # discrete mean over the padded period back
    N = pad_factor * (f.spec.m - 1) + 1
    mean = float(np.sum(f.values)) / N ** f.spec.n
    g = f.with_values(res[0].real + mean, None)
    return lp_norm(g, 2) / lp_norm(f, 2)


# ---------------------------------------------------------------- intertwining

def _lattice_grad_noncompact(values, beta, spec, q):
    """nabla^beta of a field that does not vanish at the box edge, by the lattice
    sum of K(z)(f(x+z)-f(x)) over the box (the -f(x) term is kept because the box
    is not symmetric about x), plus the near-field correction."""
    n = spec.n
    mu = constants.mu(n, beta)
    s_f = _grad_raw(values, beta, spec, q)
    s_1 = _grad_raw(np.ones_like(values), beta, spec, q)
    c1, c3 = _near_field(n, beta, spec.h, q)
    comps = []
    for ax in range(n):
        g = s_f[ax] - values * s_1[ax] - c1 * diff_axis(values, ax, spec.h, q.fd_order)
        if c3:
            g = g - c3 * _third_derivative_1d(values, spec.h)
        comps.append(mu * g)
    return comps


@dataclass(frozen=True)
class IntertwineReport:
    alpha: float
    beta: float
    abs_residual: float
    reference_norm: float

    @property
    def rel_residual(self):
        return self.abs_residual / self.reference_norm if self.reference_norm > 0 else self.abs_residual


def intertwine_check(u, alpha, beta, q=DEFAULT_QUAD, pad_factor=4):
    """Compare nabla^beta f with nabla^alpha u for f = (-Delta)^{(alpha-beta)/2} u.

    f is produced spectrally on the padded grid; nabla^beta f is then computed by
    lattice quadrature on that grid and restricted to the original box."""
    if not (0 < beta <= alpha < 1):
        raise ValueError("need 0 < beta <= alpha < 1")
    _check_support(u)
    spec = u.spec
    ref = frac_gradient(u, alpha, q)
    if beta == alpha:
        return IntertwineReport(alpha, beta, 0.0, lp_norm(ref, 1))
    big = padded_spec(spec, pad_factor)
    (fb,) = _apply_raw([u.values], MultiplierSymbol("frac_laplacian", alpha - beta), pad_factor,
                       spec.n, spec.h, keep_full=True)
    comps = _lattice_grad_noncompact(fb.real, beta, big, q)
    off = (big.m - spec.m) // 2
    sl = tuple(slice(off, off + spec.m) for _ in range(spec.n))
    got = VectorField(spec, tuple(c[sl] for c in comps))
    diff = got - ref
    return IntertwineReport(alpha, beta, lp_norm(diff, 1), lp_norm(ref, 1))
