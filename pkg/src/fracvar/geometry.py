"""Exact set geometry: finite unions of intervals (1D) and polygonal sets (2D)."""

import json
import math
from dataclasses import dataclass, field
from decimal import Decimal

import numpy as np
import shapely
from shapely.geometry import MultiPolygon, Polygon
from shapely.geometry.polygon import orient

_INF_WORDS = {"inf": math.inf, "+inf": math.inf, "infinity": math.inf, "+infinity": math.inf,
              "-inf": -math.inf, "-infinity": -math.inf}


def _parse_number(v):
    # Decimal -> float is correctly rounded, so "0.1" gives the nearest double
    if isinstance(v, str):
        key = v.strip().lower()
        if key in _INF_WORDS:
            return _INF_WORDS[key]
        return float(Decimal(v))
    if isinstance(v, (Decimal, int)):
        return float(v)
    if isinstance(v, float):
        return v
    raise ValueError(f"cannot parse endpoint {v!r}")


def _loads_exact(text):
    return json.loads(text, parse_float=Decimal, parse_int=Decimal)


def _number_to_json(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


@dataclass(frozen=True)
class IntervalSet:
    """Canonical finite union of open intervals; endpoints may be infinite."""
    intervals: tuple = ()

    def __post_init__(self):
        raw = []
        for a, b in self.intervals:
            a, b = float(a), float(b)
            if math.isnan(a) or math.isnan(b):
                raise ValueError("NaN endpoint")
            if a < b:
                raw.append((a, b))
        raw.sort()
        merged = []
        for a, b in raw:
            # touching intervals merge: the shared point is a null set
            if merged and a <= merged[-1][1]:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        object.__setattr__(self, "intervals", tuple(merged))

    @property
    def n(self):
        return 1

    @property
    def is_empty(self):
        return not self.intervals

    @property
    def measure(self):
        return sum(b - a for a, b in self.intervals)

    @property
    def endpoints(self):
        return [e for ab in self.intervals for e in ab if math.isfinite(e)]

    def contains(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for a, b in self.intervals:
            out |= (x > a) & (x < b)
        return out

    def complement(self):
        cuts = [-math.inf] + [e for ab in self.intervals for e in ab] + [math.inf]
        return IntervalSet(tuple((cuts[2 * i], cuts[2 * i + 1]) for i in range(len(cuts) // 2)))

    def intersect(self, other):
        out = []
        for a, b in self.intervals:
            for c, d in other.intervals:
                lo, hi = max(a, c), min(b, d)
                if lo < hi:
                    out.append((lo, hi))
        return IntervalSet(tuple(out))

    def union(self, other):
        return IntervalSet(self.intervals + other.intervals)

    def difference(self, other):
        return self.intersect(other.complement())

    def translate(self, t):
        return IntervalSet(tuple((a + t, b + t) for a, b in self.intervals))

    def scale(self, lam, center=0.0):
        return IntervalSet(tuple((center + lam * (a - center), center + lam * (b - center))
                                 for a, b in self.intervals))

    def to_json(self):
        return json.dumps({"intervals": [[_number_to_json(a), _number_to_json(b)] for a, b in self.intervals]})

    @classmethod
    def from_json(cls, text):
        data = _loads_exact(text) if isinstance(text, str) else text
        if isinstance(data, dict):
            data = data.get("intervals")
        if not isinstance(data, list):
            raise ValueError("interval JSON must be a list of [a, b] pairs")
        out = []
        for item in data:
            if not isinstance(item, (list, tuple)) or len(item) != 2:
                raise ValueError(f"bad interval entry {item!r}")
            a, b = _parse_number(item[0]), _parse_number(item[1])
            if not a < b:
                raise ValueError(f"interval needs a < b, got {item!r}")
            out.append((a, b))
        return cls(tuple(out))


def _as_multipolygon(geom):
    if geom.is_empty:
        return MultiPolygon()
    if isinstance(geom, Polygon):
        return MultiPolygon([geom])
    if isinstance(geom, MultiPolygon):
        return geom
    polys = [g for g in getattr(geom, "geoms", []) if isinstance(g, Polygon) and g.area > 0]
    polys += [p for g in getattr(geom, "geoms", []) if isinstance(g, MultiPolygon) for p in g.geoms]
    return MultiPolygon(polys)


@dataclass(frozen=True, eq=False)
class PolySet:
    """Polygonal set in the plane, possibly with holes and several components."""
    geom: MultiPolygon = field(default_factory=MultiPolygon)

    def __post_init__(self):
        g = _as_multipolygon(self.geom)
        if not g.is_empty:
            if not g.is_valid:
                raise ValueError(f"polygon set is not simple: {shapely.is_valid_reason(g)}")
            g = MultiPolygon([orient(p, sign=1.0) for p in g.geoms])
        object.__setattr__(self, "geom", g)

    @property
    def n(self):
        return 2

    @property
    def is_empty(self):
        return self.geom.is_empty

    @property
    def area(self):
        return float(self.geom.area)

    @property
    def perimeter(self):
        return float(self.geom.length)

    @classmethod
    def from_polygons(cls, shells, holes=None):
        holes = holes or [[] for _ in shells]
        return cls(MultiPolygon([Polygon(s, h) for s, h in zip(shells, holes)]))

    @classmethod
    def square(cls, x0, y0, x1, y1):
        return cls(shapely.box(x0, y0, x1, y1))

    def edges(self):
        """(k, 2, 2) array of oriented edges with the set on the left."""
        segs = []
        for p in self.geom.geoms:
            for ring in [p.exterior, *p.interiors]:
                c = np.asarray(ring.coords)
                segs.append(np.stack([c[:-1], c[1:]], axis=1))
        if not segs:
            return np.zeros((0, 2, 2))
        return np.concatenate(segs)

    def contains(self, pts):
        pts = np.asarray(pts, dtype=float)
        return shapely.contains_xy(self.geom, pts[..., 0], pts[..., 1])

    def combine(self, other, op):
        g = getattr(self.geom, op)(other.geom)
        return PolySet(_as_multipolygon(shapely.make_valid(g) if not g.is_valid else g))

    def translate(self, tx, ty=0.0):
        return PolySet(shapely.affinity.translate(self.geom, tx, ty))

    def scale(self, lam, center=(0.0, 0.0)):
        return PolySet(shapely.affinity.scale(self.geom, lam, lam, origin=tuple(center)))

    def to_json(self):
        polys = []
        for p in self.geom.geoms:
            polys.append({"shell": [list(c) for c in p.exterior.coords[:-1]],
                          "holes": [[list(c) for c in r.coords[:-1]] for r in p.interiors]})
        return json.dumps({"polygons": polys})

    @classmethod
    def from_json(cls, text):
        data = _loads_exact(text) if isinstance(text, str) else text
        if isinstance(data, dict):
            data = data.get("polygons")
        if not isinstance(data, list):
            raise ValueError("polygon JSON must be a list of polygons")
        polys = []
        for item in data:
            if isinstance(item, dict):
                shell, holes = item.get("shell"), item.get("holes", [])
            else:
                shell, holes = item, []
            if shell is None or len(shell) < 3:
                raise ValueError("each polygon needs at least 3 vertices")
            conv = lambda ring: [(_parse_number(x), _parse_number(y)) for x, y in ring]
            poly = Polygon(conv(shell), [conv(h) for h in holes])
            if not poly.is_valid:
                raise ValueError(f"polygon is not simple: {shapely.is_valid_reason(poly)}")
            polys.append(poly)
        union = shapely.union_all(polys) if polys else MultiPolygon()
        return cls(_as_multipolygon(union))


def load_geometry(text):
    """Parse either kind of set from JSON text; the keys decide."""
    data = _loads_exact(text)
    if isinstance(data, dict) and "polygons" in data:
        return PolySet.from_json(data)
    if isinstance(data, dict) and "intervals" in data:
        return IntervalSet.from_json(data)
    raise ValueError("geometry JSON needs an 'intervals' or 'polygons' key")
