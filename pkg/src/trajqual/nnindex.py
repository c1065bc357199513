"""Nearest POI to a trajectory: exhaustive scan and R-tree search.

Both searches rank POIs by :func:`trajqual.geodesy.point_polyline_distance`
semantics, break ties on the smallest POI id, and evaluate candidate
distances through the same kernel, so their answers agree exactly.

Pruning relies on a spherical lower bound. In geodetic coordinates the
ellipsoid line element satisfies ``ds^2 = M^2 dphi^2 + N^2 cos^2(phi) dlam^2``
with ``M >= a(1 - e^2)`` and ``N >= a``, so every ellipsoidal path is at
least ``a(1 - e^2)`` times the great-circle angle between its endpoints.
"""

from __future__ import annotations

import heapq
import itertools
import math
import time
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyIndexError, EmptyTrajectoryError
from .geodesy import (
    WGS84,
    Ellipsoid,
    Mode,
    Trajectory,
    distance_array,
    geodesic_inverse,
    segment_min_distance,
)
from .ingest import Poi

__all__ = [
    "NnResult",
    "PoiIndex",
    "build_index",
    "nn_bruteforce",
    "nn_indexed",
    "point_lower_bound",
    "rect_lower_bound",
]

DEFAULT_LEAF_CAPACITY = 16

# Slack for floating point in the bounds, and for the sub-millimetre
# disagreement between computed distances and the triangle inequality.
_LB_REL_SLACK = 1e-8
_LB_ABS_SLACK = 1e-6
_TRIANGLE_SLACK = 1e-3

_CHUNK_ELEMENTS = 1 << 18


@dataclass(frozen=True)
class NnResult:
    poi_id: int
    distance_m: float
    mode: Mode
    elapsed_ns: int


def _lb_radius(e: Ellipsoid) -> float:
    return e.a * (1.0 - e.e2)


def _central_angle(lat1, lon1, lat2, lon2):
    """Great-circle angle (radians) between degree coordinates on the unit sphere."""
    p1, p2 = np.radians(lat1), np.radians(lat2)
    dl = np.radians(np.asarray(lon2) - np.asarray(lon1))
    h = np.sin((p2 - p1) * 0.5) ** 2 + np.cos(p1) * np.cos(p2) * np.sin(dl * 0.5) ** 2
    return 2.0 * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def _scale(angle, e: Ellipsoid):
    return np.maximum(angle * _lb_radius(e) * (1.0 - _LB_REL_SLACK) - _LB_ABS_SLACK, 0.0)


def point_lower_bound(lat1, lon1, lat2, lon2, e: Ellipsoid = WGS84):
    """A value never above the ellipsoidal geodesic distance between the points."""
    return _scale(_central_angle(lat1, lon1, lat2, lon2), e)


def _angle_to_rect(plat, plon, lat_lo, lat_hi, lon_lo, lon_hi):
    plat = np.asarray(plat, dtype=float)
    plon = np.asarray(plon, dtype=float)
    inside_lon = (plon >= lon_lo) & (plon <= lon_hi)
    # Within the longitude band the nearest point lies on the same meridian.
    band = np.radians(np.maximum(np.maximum(lat_lo - plat, plat - lat_hi), 0.0))

    best = None
    phi = np.radians(plat)
    for edge in (lon_lo, lon_hi):
        dlam = np.radians(plon - edge)
        # Foot of the perpendicular on the meridian's great circle; distance
        # grows monotonically away from it, so clamp to the edge or use a corner.
        foot = np.degrees(np.arctan2(np.sin(phi), np.cos(phi) * np.cos(dlam)))
        on_edge = (foot >= lat_lo) & (foot <= lat_hi)
        to_foot = _central_angle(plat, plon, np.clip(foot, lat_lo, lat_hi), edge)
        corners = np.minimum(
            _central_angle(plat, plon, lat_lo, edge), _central_angle(plat, plon, lat_hi, edge)
        )
        d = np.where(on_edge, to_foot, corners)
        best = d if best is None else np.minimum(best, d)
    return np.where(inside_lon, band, best)


def rect_lower_bound(plat, plon, rect: tuple[float, float, float, float], e: Ellipsoid = WGS84):
    """Lower bound on the geodesic distance from points to a lat/lon rectangle.

    ``rect`` is ``(lat_lo, lat_hi, lon_lo, lon_hi)`` in degrees and must not
    cross the antimeridian.
    """
    return _scale(_angle_to_rect(plat, plon, *rect), e)


class _Track:
    """Per-query geometry of a trajectory: vertex arrays and segment lengths."""

    def __init__(self, t: Trajectory, e: Ellipsoid):
        if len(t.points) == 0:
            raise EmptyTrajectoryError(f"trajectory {t.id!r} has no points")
        self.e = e
        self.lat = t.lat_array
        self.lon = t.lon_array
        self.n = len(self.lat)
        if self.n > 1:
            self.seg_len = distance_array(self.lat[:-1], self.lon[:-1], self.lat[1:], self.lon[1:], e)
        else:
            self.seg_len = np.zeros(0)
        self._segments: dict[int, tuple[float, float]] = {}

    def segment(self, i: int) -> tuple[float, float]:
        """(length, azimuth) of segment i, from vertex i to i + 1."""
        seg = self._segments.get(i)
        if seg is None:
            seg = geodesic_inverse(self.lat[i], self.lon[i], self.lat[i + 1], self.lon[i + 1], self.e)
            self._segments[i] = seg
        return seg

    def vertex_distances(self, plat: float, plon: float) -> np.ndarray:
        return distance_array(plat, plon, self.lat, self.lon, self.e)

    def segment_bounds(self, vertex_bound: np.ndarray) -> np.ndarray:
        """Lower bounds per segment from lower bounds at its endpoints."""
        return (vertex_bound[:-1] + vertex_bound[1:] - self.seg_len) * 0.5 - _TRIANGLE_SLACK

    def polyline_bound(self, vertex_bound: np.ndarray, mode: Mode) -> float:
        lb = float(vertex_bound.min())
        if mode is Mode.SEGMENTS and self.n > 1:
            lb = min(lb, float(self.segment_bounds(vertex_bound).min()))
        return max(lb, 0.0)

    def distance(self, plat: float, plon: float, mode: Mode, cutoff: float = math.inf,
                 vertex_d: np.ndarray | None = None) -> float:
        """Exact distance from a point, or some value >= ``cutoff`` when the
        point is farther than ``cutoff``."""
        if vertex_d is None:
            vertex_d = self.vertex_distances(plat, plon)
        best = float(vertex_d.min())
        if mode is Mode.VERTICES or self.n == 1:
            return best
        lb = self.segment_bounds(vertex_d)
        limit = min(best, cutoff)
        cand = np.flatnonzero(lb < limit)
        if cand.size == 0:
            return best
        for i in cand[np.argsort(lb[cand], kind="stable")]:
            if lb[i] >= min(best, cutoff):
                break
            length, azimuth = self.segment(int(i))
            if length == 0.0:
                continue
            d = segment_min_distance(
                plat, plon, self.lat[i], self.lon[i], azimuth, length,
                float(vertex_d[i]), float(vertex_d[i + 1]), self.e,
            )
            best = min(best, d)
        return best


def _better(d: float, pid: int, best_d: float, best_id: int | None) -> bool:
    return d < best_d or (d == best_d and (best_id is None or pid < best_id))


def nn_bruteforce(
    t: Trajectory, pois: Sequence[Poi], mode: Mode | str = Mode.SEGMENTS, e: Ellipsoid = WGS84
) -> NnResult:
    """Nearest POI by evaluating every POI against every vertex.

    The full POI x vertex distance matrix is computed. In segment mode,
    segment refinement is skipped only where the triangle inequality on
    those exact vertex distances proves it cannot win.
    """
    mode = Mode.parse(mode)
    if len(pois) == 0:
        raise EmptyIndexError("nearest-neighbor query against an empty POI set")
    start = time.perf_counter_ns()
    track = _Track(t, e)
    plat = np.fromiter((p.lat for p in pois), dtype=float, count=len(pois))
    plon = np.fromiter((p.lon for p in pois), dtype=float, count=len(pois))
    ids = np.fromiter((p.id for p in pois), dtype=np.int64, count=len(pois))

    rows = max(1, _CHUNK_ELEMENTS // track.n)
    matrix = np.empty((len(pois), track.n))
    for s in range(0, len(pois), rows):
        matrix[s:s + rows] = distance_array(
            plat[s:s + rows, None], plon[s:s + rows, None], track.lat[None, :], track.lon[None, :], e
        )
    vertex_min = matrix.min(axis=1)

    best_d, best_id = math.inf, None
    if mode is Mode.VERTICES or track.n == 1:
        best_d = float(vertex_min.min())
        best_id = int(ids[vertex_min == best_d].min())
    else:
        seg_lb = np.minimum(
            ((matrix[:, :-1] + matrix[:, 1:] - track.seg_len) * 0.5 - _TRIANGLE_SLACK).min(axis=1),
            vertex_min,
        )
        for j in np.lexsort((ids, seg_lb)):
            if seg_lb[j] > best_d:
                break
            d = track.distance(float(plat[j]), float(plon[j]), mode, cutoff=best_d, vertex_d=matrix[j])
            if _better(d, int(ids[j]), best_d, best_id):
                best_d, best_id = d, int(ids[j])
    elapsed = time.perf_counter_ns() - start
    return NnResult(best_id, best_d, mode, elapsed)


class _Node:
    __slots__ = ("rect", "children", "entries")

    def __init__(self, rect, children=None, entries=None):
        self.rect = rect
        self.children = children
        self.entries = entries

    @property
    def is_leaf(self) -> bool:
        return self.entries is not None


def _bbox(lats: np.ndarray, lons: np.ndarray) -> tuple[float, float, float, float]:
    return float(lats.min()), float(lats.max()), float(lons.min()), float(lons.max())


def _union(rects) -> tuple[float, float, float, float]:
    rects = list(rects)
    return (
        min(r[0] for r in rects), max(r[1] for r in rects),
        min(r[2] for r in rects), max(r[3] for r in rects),
    )


def _str_groups(keys_lon, keys_lat, tiebreak, capacity: int) -> list[np.ndarray]:
    """Sort-Tile-Recursive grouping of items into runs of at most ``capacity``."""
    n = len(keys_lon)
    n_groups = math.ceil(n / capacity)
    n_slices = math.ceil(math.sqrt(n_groups))
    per_slice = n_slices * capacity
    order = np.lexsort((tiebreak, keys_lat, keys_lon))
    groups = []
    for s in range(0, n, per_slice):
        part = order[s:s + per_slice]
        part = part[np.lexsort((tiebreak[part], keys_lon[part], keys_lat[part]))]
        groups.extend(part[i:i + capacity] for i in range(0, len(part), capacity))
    return groups


class PoiIndex:
    """Immutable R-tree over POI positions, packed with Sort-Tile-Recursive.

    Rectangles are ``(lat_lo, lat_hi, lon_lo, lon_hi)`` over plain longitudes,
    so a POI set straddling the antimeridian ends up in separate rectangles
    on either side of it. Safe for concurrent read-only queries.
    """

    def __init__(self, pois: Iterable[Poi], leaf_capacity: int = DEFAULT_LEAF_CAPACITY):
        if leaf_capacity < 2:
            raise ValueError(f"leaf capacity must be at least 2, got {leaf_capacity}")
        self.pois: tuple[Poi, ...] = tuple(pois)
        self.leaf_capacity = leaf_capacity
        n = len(self.pois)
        self.lat = np.fromiter((p.lat for p in self.pois), dtype=float, count=n)
        self.lon = np.fromiter((p.lon for p in self.pois), dtype=float, count=n)
        self.ids = np.fromiter((p.id for p in self.pois), dtype=np.int64, count=n)
        for arr in (self.lat, self.lon, self.ids):
            arr.flags.writeable = False
        if len(set(self.ids.tolist())) != n:
            raise ValueError("POI ids must be unique")
        self.root = self._build() if n else None

    def _build(self) -> _Node:
        cap = self.leaf_capacity
        level = [
            _Node(_bbox(self.lat[g], self.lon[g]), entries=tuple(int(i) for i in g))
            for g in _str_groups(self.lon, self.lat, self.ids, cap)
        ]
        while len(level) > 1:
            rects = np.array([n.rect for n in level])
            clat = (rects[:, 0] + rects[:, 1]) * 0.5
            clon = (rects[:, 2] + rects[:, 3]) * 0.5
            groups = _str_groups(clon, clat, np.arange(len(level)), cap)
            level = [
                _Node(_union(level[i].rect for i in g), children=tuple(level[int(i)] for i in g))
                for g in groups
            ]
        return level[0]

    def __len__(self) -> int:
        return len(self.pois)

    def nodes(self) -> Iterable[_Node]:
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.extend(node.children)

    def depth(self) -> int:
        d, node = 0, self.root
        while node is not None:
            d += 1
            node = None if node.is_leaf else node.children[0]
        return d

    def query_rect(self, lat_lo: float, lat_hi: float, lon_lo: float, lon_hi: float) -> list[Poi]:
        """POIs inside the closed rectangle, in input order."""
        hits = []
        stack = [self.root] if self.root is not None else []
        while stack:
            node = stack.pop()
            r = node.rect
            if r[0] > lat_hi or r[1] < lat_lo or r[2] > lon_hi or r[3] < lon_lo:
                continue
            if node.is_leaf:
                hits.extend(
                    i for i in node.entries
                    if lat_lo <= self.lat[i] <= lat_hi and lon_lo <= self.lon[i] <= lon_hi
                )
            else:
                stack.extend(node.children)
        return [self.pois[i] for i in sorted(hits)]


def build_index(pois: Iterable[Poi], leaf_capacity: int = DEFAULT_LEAF_CAPACITY) -> PoiIndex:
    """Bulk-load an R-tree; the layout depends only on the POIs, not on timing."""
    return PoiIndex(pois, leaf_capacity)


def nn_indexed(
    t: Trajectory, idx: PoiIndex, mode: Mode | str = Mode.SEGMENTS, e: Ellipsoid = WGS84
) -> NnResult:
    """Nearest POI by best-first traversal of ``idx``.

    Nodes and POIs are expanded in order of a lower bound on their distance
    to the trajectory; the search stops once that bound exceeds the best
    exact distance found.
    """
    mode = Mode.parse(mode)
    if idx.root is None:
        raise EmptyIndexError("nearest-neighbor query against an empty index")
    start = time.perf_counter_ns()
    track = _Track(t, e)

    counter = itertools.count()
    heap: list[tuple[float, int, int, object]] = []

    def push_node(node: _Node) -> None:
        lb = track.polyline_bound(rect_lower_bound(track.lat, track.lon, node.rect, e), mode)
        heapq.heappush(heap, (lb, 1, next(counter), node))

    push_node(idx.root)
    best_d, best_id = math.inf, None
    while heap:
        lb, kind, _, item = heapq.heappop(heap)
        if lb > best_d:
            break
        if kind == 0:
            j = item
            pid = int(idx.ids[j])
            d = track.distance(float(idx.lat[j]), float(idx.lon[j]), mode, cutoff=best_d)
            if _better(d, pid, best_d, best_id):
                best_d, best_id = d, pid
        elif item.is_leaf:
            for j in item.entries:
                vb = point_lower_bound(idx.lat[j], idx.lon[j], track.lat, track.lon, e)
                plb = track.polyline_bound(vb, mode)
                if plb <= best_d:
                    heapq.heappush(heap, (plb, 0, int(idx.ids[j]), j))
        else:
            for child in item.children:
                push_node(child)
    elapsed = time.perf_counter_ns() - start
    return NnResult(best_id, best_d, mode, elapsed)
