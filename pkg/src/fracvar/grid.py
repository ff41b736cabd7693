"""Uniform grids on [-L, L]^n, sampled fields, windows, quadrature and norms."""

import io
import json
import math
from dataclasses import dataclass, field

import numpy as np
import shapely

from .geometry import IntervalSet, PolySet

FIELD_FORMAT_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    n: int
    half_width: float
    m: int

    def __post_init__(self):
        if self.n not in (1, 2):
            raise ValueError(f"only n in {{1, 2}} is supported, got {self.n!r}")
        if not (self.half_width > 0 and math.isfinite(self.half_width)):
            raise ValueError("half_width must be positive and finite")
        if int(self.m) != self.m or self.m < 3 or self.m % 2 == 0:
            raise ValueError(f"m must be an odd integer >= 3, got {self.m!r}")
        object.__setattr__(self, "half_width", float(self.half_width))
        object.__setattr__(self, "m", int(self.m))

    @classmethod
    def from_spacing(cls, n, half_width, h):
        m = int(round(2 * half_width / h)) + 1
        return cls(n, half_width, m)

    @property
    def h(self):
        return 2 * self.half_width / (self.m - 1)

    @property
    def shape(self):
        return (self.m,) * self.n

    @property
    def size(self):
        return self.m ** self.n

    @property
    def cell_volume(self):
        return self.h ** self.n

    @property
    def axis(self):
        k = np.arange(self.m) - (self.m - 1) // 2
        return k * self.h

    def mesh(self):
        """Tuple of coordinate arrays, each of shape `self.shape` (ij indexing)."""
        if self.n == 1:
            return (self.axis,)
        return tuple(np.meshgrid(self.axis, self.axis, indexing="ij"))

    def radius(self):
        X = self.mesh()
        return np.sqrt(sum(x * x for x in X))

    def refined(self):
        """Same box with the spacing halved."""
        return GridSpec(self.n, self.half_width, 2 * self.m - 1)

    def to_dict(self):
        return {"n": self.n, "half_width": self.half_width, "m": self.m}


def _freeze(a):
    a = np.array(a, dtype=float, copy=True)
    a.setflags(write=False)
    return a


def _check_support(spec, arrays, support_radius):
    for a in arrays:
        if not np.all(np.isfinite(a)):
            raise ValueError("field values must be finite")
    if support_radius is not None:
        outside = spec.radius() > support_radius + spec.h * (1 + 1e-9)
        for a in arrays:
            if np.any(a[outside] != 0.0):
                raise ValueError("field does not vanish outside support_radius + h")


@dataclass(frozen=True, eq=False)
class ScalarField:
    spec: GridSpec
    values: np.ndarray
    support_radius: float | None = None

    def __post_init__(self):
        v = _freeze(self.values).reshape(self.spec.shape)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        _check_support(self.spec, [v], self.support_radius)

    def with_values(self, values, support_radius="same"):
        sr = self.support_radius if support_radius == "same" else support_radius
        return ScalarField(self.spec, values, sr)

    def __add__(self, other):
        return _combine(self, other, 1.0)

    def __sub__(self, other):
        return _combine(self, other, -1.0)

    def __mul__(self, c):
        return self.with_values(self.values * float(c))

    __rmul__ = __mul__


def _combine(a, b, sign):
    sr = None
    if a.support_radius is not None and b.support_radius is not None:
        sr = max(a.support_radius, b.support_radius)
    return ScalarField(a.spec, a.values + sign * b.values, sr)


@dataclass(frozen=True, eq=False)
class VectorField:
    spec: GridSpec
    components: tuple
    support_radius: float | None = None

    def __post_init__(self):
        comps = tuple(_freeze(c).reshape(self.spec.shape) for c in self.components)
        if len(comps) != self.spec.n:
            raise ValueError("a vector field needs exactly n components")
        for c in comps:
            c.setflags(write=False)
        object.__setattr__(self, "components", comps)
        _check_support(self.spec, comps, self.support_radius)

    def magnitude(self):
        return np.sqrt(sum(c * c for c in self.components))

    def component(self, i):
        return ScalarField(self.spec, self.components[i], self.support_radius)

    def dot(self, other):
        return sum(a * b for a, b in zip(self.components, other.components))

    def __add__(self, other):
        return VectorField(self.spec, tuple(a + b for a, b in zip(self.components, other.components)))

    def __sub__(self, other):
        return VectorField(self.spec, tuple(a - b for a, b in zip(self.components, other.components)))

    def scaled(self, s):
        s = np.asarray(s, dtype=float)
        return VectorField(self.spec, tuple(s * c for c in self.components))


# ---------------------------------------------------------------- windows

def _interval_overlap(lo, hi, a, b):
    return np.clip(np.minimum(hi, b) - np.maximum(lo, a), 0.0, None)


@dataclass(frozen=True, eq=False)
class Window:
    """Open region of integration. `interval` for n=1, a shapely polygon for n=2,
    neither for the whole space."""
    n: int
    interval: tuple | None = None
    region: object = None
    _cache: dict = field(default_factory=dict, repr=False)

    @classmethod
    def whole(cls, n):
        return cls(n)

    @classmethod
    def open_interval(cls, a, b):
        if not a < b:
            raise ValueError("window interval needs a < b")
        return cls(1, interval=(float(a), float(b)))

    @classmethod
    def box(cls, x0, x1, y0, y1):
        return cls(2, region=shapely.box(x0, y0, x1, y1))

    @classmethod
    def polygon(cls, coords):
        return cls(2, region=shapely.Polygon(coords))

    @classmethod
    def from_set(cls, s):
        if isinstance(s, IntervalSet):
            if len(s.intervals) != 1:
                raise ValueError("a 1D window is a single interval")
            return cls.open_interval(*s.intervals[0])
        return cls(2, region=s.geom)

    @property
    def is_whole(self):
        return self.interval is None and self.region is None

    @property
    def is_bounded(self):
        if self.is_whole:
            return False
        if self.n == 1:
            return all(math.isfinite(e) for e in self.interval)
        return True

    def as_set(self):
        if self.n == 1:
            return IntervalSet(((-math.inf, math.inf),) if self.is_whole else (self.interval,))
        if self.is_whole:
            raise ValueError("the whole plane has no polygon representation")
        return PolySet(self.region)

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        if self.is_whole:
            return np.ones(pts.shape[:-1] if self.n == 2 else pts.shape, dtype=bool)
        if self.n == 1:
            a, b = self.interval
            return (pts > a) & (pts < b)
        inside = shapely.contains_xy(self.region, pts[..., 0], pts[..., 1])
        on_edge = shapely.intersects_xy(self.region.boundary, pts[..., 0], pts[..., 1])
        return inside & ~on_edge

    def diameter_and_volume(self):
        if not self.is_bounded:
            raise ValueError("unbounded window")
        if self.n == 1:
            a, b = self.interval
            return b - a, b - a
        hull = np.asarray(self.region.convex_hull.exterior.coords)
        d = np.sqrt(((hull[:, None, :] - hull[None, :, :]) ** 2).sum(-1)).max()
        return float(d), float(self.region.area)

    def node_weights(self, spec):
        """Quadrature weight of every node: the measure of its cell inside the
        box and inside the window. On the whole box this is the trapezoid rule."""
        key = (spec.n, spec.half_width, spec.m)
        if key in self._cache:
            return self._cache[key]
        if spec.n != self.n:
            raise ValueError("window and grid dimension differ")
        h, L = spec.h, spec.half_width
        x = spec.axis
        lo = np.maximum(x - h / 2, -L)
        hi = np.minimum(x + h / 2, L)
        if self.n == 1:
            a, b = (-math.inf, math.inf) if self.is_whole else self.interval
            w = _interval_overlap(lo, hi, a, b)
        elif self.is_whole:
            w1 = hi - lo
            w = np.outer(w1, w1)
        else:
            w = self._polygon_weights(lo, hi)
        w.setflags(write=False)
        self._cache[key] = w
        return w

    def _polygon_weights(self, lo, hi):
        reg = self.region
        x0, y0, x1, y1 = reg.bounds
        minx, maxx = np.meshgrid(lo, lo, indexing="ij")[0], np.meshgrid(hi, hi, indexing="ij")[0]
        miny, maxy = np.meshgrid(lo, lo, indexing="ij")[1], np.meshgrid(hi, hi, indexing="ij")[1]
        w = np.zeros(minx.shape)
        near = (maxx > x0) & (minx < x1) & (maxy > y0) & (miny < y1)
        if reg.equals(reg.envelope):
            # axis aligned box: separable exact overlaps
            wx = _interval_overlap(lo, hi, x0, x1)
            wy = _interval_overlap(lo, hi, y0, y1)
            return np.outer(wx, wy)
        cells = shapely.box(minx[near], miny[near], maxx[near], maxy[near])
        w[near] = shapely.area(shapely.intersection(cells, reg))
        return w


def _window(w, n):
    return Window.whole(n) if w is None else w


# ---------------------------------------------------------------- constructors

def _check_fits(spec, extent):
    if extent > spec.half_width - 4 * spec.h + 1e-12:
        raise ValueError(
            f"support extent {extent:g} does not fit in the box with a 4h margin "
            f"(half_width={spec.half_width:g}, h={spec.h:g})")


def bump_profile(s):
    """exp(1 - 1/(1 - s)) for s = |x-c|^2/r^2 < 1, zero otherwise; peak 1 at s=0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = s < 1.0
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside]))
    return out


def make_bump(spec, center=0.0, radius=1.0, height=1.0):
    c = np.broadcast_to(np.asarray(center, dtype=float), (spec.n,))
    if radius <= 0:
        raise ValueError("radius must be positive")
    _check_fits(spec, float(np.max(np.abs(c))) + radius)
    X = spec.mesh()
    s = sum((x - ci) ** 2 for x, ci in zip(X, c)) / radius ** 2
    return ScalarField(spec, height * bump_profile(s), float(np.linalg.norm(c)) + radius)


def random_bump(spec, rng):
    """Bump with random centre, radius and height that fits the box."""
    room = spec.half_width - 4 * spec.h
    r = rng.uniform(0.25, 0.6) * room
    c = rng.uniform(-1, 1, spec.n) * (room - r) / math.sqrt(spec.n)
    return make_bump(spec, c if spec.n > 1 else float(c[0]), r, rng.uniform(0.5, 2.0))


def random_vector_bump(spec, rng):
    comps = [random_bump(spec, rng) for _ in range(spec.n)]
    return VectorField(spec, tuple(c.values for c in comps), max(c.support_radius for c in comps))


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
        b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def gaussian_cutoff_profile(r, sigma, cutoff_radius):
    r = np.asarray(r, dtype=float)
    inner = 0.75 * cutoff_radius
    cut = 1.0 - smooth_step((r - inner) / (cutoff_radius - inner))
    return np.exp(-r * r / (2 * sigma * sigma)) * cut


def make_gaussian_cutoff(spec, sigma=1.0, cutoff_radius=8.0):
    if sigma <= 0 or cutoff_radius <= 0:
        raise ValueError("sigma and cutoff_radius must be positive")
    _check_fits(spec, cutoff_radius)
    return ScalarField(spec, gaussian_cutoff_profile(spec.radius(), sigma, cutoff_radius), float(cutoff_radius))


def zero_field(spec):
    return ScalarField(spec, np.zeros(spec.shape), 0.0)


# ---------------------------------------------------------------- integration

def weighted_sum(values, weights):
    """Order-fixed, correctly rounded sum of values*weights."""
    prod = (np.asarray(values, dtype=float) * weights).ravel()
    return math.fsum(prod[weights.ravel() != 0])


def integrate(f, w=None):
    """Trapezoid rule on the box, cells clipped to the window by exact overlap."""
    spec = f.spec
    return weighted_sum(f.values, _window(w, spec.n).node_weights(spec))


def _pointwise_abs(f):
    if isinstance(f, VectorField):
        return f.magnitude()
    return np.abs(f.values)


def lp_norm(f, p, w=None):
    spec = f.spec
    wts = _window(w, spec.n).node_weights(spec)
    a = _pointwise_abs(f)
    if p == math.inf or p == "inf":
        sel = wts > 0
        return float(a[sel].max()) if np.any(sel) else 0.0
    p = float(p)
    if p <= 0:
        raise ValueError("p must be positive")
    return weighted_sum(a ** p, wts) ** (1.0 / p)


# ---------------------------------------------------------------- differences

_CENTRAL = {
    2: ([-1, 1], [-0.5, 0.5]),
    4: ([-2, -1, 1, 2], [1 / 12, -8 / 12, 8 / 12, -1 / 12]),
    6: ([-3, -2, -1, 1, 2, 3], [-1 / 60, 9 / 60, -45 / 60, 45 / 60, -9 / 60, 1 / 60]),
}


def diff_axis(a, axis, h, order=6):
    """First derivative along one axis. Central stencil of the given order (6 by
    default, which also meets every 4th-order requirement) in the
    interior, lower-order central next to the edges, one-sided second order at the edges."""
    a = np.moveaxis(np.asarray(a, dtype=float), axis, 0)
    m = a.shape[0]
    out = np.empty_like(a)
    done = np.zeros(m, dtype=bool)
    for k in sorted(_CENTRAL, reverse=True):
        if k > order:
            continue
        offs, coef = _CENTRAL[k]
        r = max(offs)
        if m <= 2 * r:
            continue
        idx = np.arange(r, m - r)
        idx = idx[~done[idx]]
        if idx.size:
            out[idx] = sum(c * a[idx + o] for o, c in zip(offs, coef)) / h
            done[idx] = True
    out[0] = (-3 * a[0] + 4 * a[1] - a[2]) / (2 * h)
    out[-1] = (3 * a[-1] - 4 * a[-2] + a[-3]) / (2 * h)
    return np.moveaxis(out, 0, axis)


def local_gradient(f, order=6):
    spec = f.spec
    comps = tuple(diff_axis(f.values, ax, spec.h, order) for ax in range(spec.n))
    sr = None if f.support_radius is None else f.support_radius + (order // 2) * spec.h
    return VectorField(spec, comps, sr)


def local_divergence(phi, order=6):
    spec = phi.spec
    vals = sum(diff_axis(c, ax, spec.h, order) for ax, c in enumerate(phi.components))
    return ScalarField(spec, vals)


def classical_variation(obj, w=None):
    """|Df|(Omega) of a sampled field, or P(E; Omega) of an exact set."""
    if isinstance(obj, IntervalSet):
        win = _window(w, 1)
        return float(np.count_nonzero(win.contains(np.asarray(obj.endpoints, dtype=float))))
    if isinstance(obj, PolySet):
        win = _window(w, 2)
        bnd = obj.geom.boundary
        if win.is_whole:
            return float(bnd.length)
        return float(bnd.intersection(win.region).length - bnd.intersection(win.region.boundary).length)
    return lp_norm(local_gradient(obj), 1, w)


# ---------------------------------------------------------------- serialization

def _header(spec, kind, ncomp, support_radius, fmt):
    return {"format": "fracvar-field", "version": FIELD_FORMAT_VERSION, "encoding": fmt,
            "kind": kind, "grid": spec.to_dict(), "components": ncomp,
            "support_radius": support_radius, "dtype": "<f8", "order": "C"}


def _field_arrays(f):
    if isinstance(f, VectorField):
        return "vector", list(f.components)
    return "scalar", [f.values]


def dumps_field(f, fmt="bin", meta=None):
    """Serialize a field to bytes: one JSON header line, then raw little-endian
    float64 (fmt='bin') or one repr-exact value per line (fmt='csv')."""
    kind, arrays = _field_arrays(f)
    head = _header(f.spec, kind, len(arrays), f.support_radius, fmt)
    if meta:
        head["meta"] = meta
    line = json.dumps(head, sort_keys=True)
    if fmt == "bin":
        body = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in arrays)
        return line.encode() + b"\n" + body
    if fmt == "csv":
        buf = io.StringIO()
        buf.write("# " + line + "\n")
        cols = [a.ravel() for a in arrays]
        buf.write(",".join(f"c{i}" for i in range(len(cols))) + "\n")
        for row in zip(*cols):
            buf.write(",".join(repr(float(v)) for v in row) + "\n")
        return buf.getvalue().encode()
    raise ValueError(f"unknown field format {fmt!r}")


def loads_field(data):
    if data.startswith(b"# "):
        text = data.decode()
        first, rest = text.split("\n", 1)
        head = json.loads(first[2:])
        lines = rest.splitlines()[1:]
        vals = np.array([[float(v) for v in ln.split(",")] for ln in lines], dtype=float)
        arrays = [vals[:, i] for i in range(head["components"])]
    else:
        first, body = data.split(b"\n", 1)
        head = json.loads(first)
        flat = np.frombuffer(body, dtype="<f8")
        arrays = np.split(flat, head["components"])
    if head.get("format") != "fracvar-field" or head.get("version") != FIELD_FORMAT_VERSION:
        raise ValueError("not a supported field file")
    spec = GridSpec(**head["grid"])
    sr = head["support_radius"]
    arrays = [np.asarray(a, dtype=float).reshape(spec.shape) for a in arrays]
    if head["kind"] == "vector":
        return VectorField(spec, tuple(arrays), sr)
    return ScalarField(spec, arrays[0], sr)


def save_field(path, f, fmt="bin", meta=None):
    with open(path, "wb") as fh:
        fh.write(dumps_field(f, fmt, meta))


def load_field(path):
    with open(path, "rb") as fh:
        return loads_field(fh.read())


__all__ = [
    "GridSpec", "ScalarField", "VectorField", "Window", "IntervalSet", "PolySet",
    "make_bump", "make_gaussian_cutoff", "zero_field", "integrate", "lp_norm",
    "local_gradient", "local_divergence", "classical_variation", "save_field", "load_field",
    "dumps_field", "loads_field",
]
