"""Distances on the WGS84 ellipsoid.

Point-to-point distances solve the inverse geodesic problem with Vincenty's
iteration (sub-millimetre at trajectory scales). Point-to-segment distances
minimise the point distance over the geodesic from ``a`` to ``b`` with a
golden-section search. Altitude and timestamps never enter a distance.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .errors import CoordinateError, EmptyTrajectoryError, GeodesicConvergenceError

__all__ = [
    "WGS84",
    "Ellipsoid",
    "GeoPoint",
    "Mode",
    "Trajectory",
    "geodesic_distance",
    "geodesic_inverse",
    "geodesic_direct",
    "distance_array",
    "point_segment_distance",
    "point_polyline_distance",
    "polyline_length",
    "format_km",
    "make_trajectory",
]

# Convergence of the longitude on the auxiliary sphere, radians.
_INVERSE_TOL = 1e-13
_DIRECT_TOL = 1e-13
_MAX_ITER = 200

#: Golden-section stops once the bracket is shorter than this, metres.
SEGMENT_TOL_M = 1e-3

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class Ellipsoid:
    """Oblate ellipsoid of revolution: equatorial radius ``a`` (m) and flattening ``f``."""

    a: float = 6378137.0
    f: float = 1.0 / 298.257223563

    def __post_init__(self):
        if not self.a > 0:
            raise ValueError(f"equatorial radius must be positive, got {self.a}")
        if not 0.0 <= self.f < 1.0:
            raise ValueError(f"flattening must be in [0, 1), got {self.f}")

    @property
    def b(self) -> float:
        """Polar radius."""
        return self.a * (1.0 - self.f)

    @property
    def e2(self) -> float:
        """First eccentricity squared."""
        return self.f * (2.0 - self.f)


WGS84 = Ellipsoid()


@dataclass(frozen=True)
class GeoPoint:
    """A WGS84 position in degrees, with optional altitude (m) and UTC epoch seconds."""

    lat: float
    lon: float
    alt_m: float | None = None
    t: int | None = None

    def __post_init__(self):
        # NaN fails both comparisons and is rejected as well.
        if not -90.0 <= self.lat <= 90.0:
            raise CoordinateError(f"latitude {self.lat!r} outside [-90, 90]")
        if not -180.0 <= self.lon <= 180.0:
            raise CoordinateError(f"longitude {self.lon!r} outside [-180, 180]")


class Mode(str, enum.Enum):
    """How a trajectory is measured against a point."""

    VERTICES = "vertices"
    SEGMENTS = "segments"

    @classmethod
    def parse(cls, value: str | "Mode") -> "Mode":
        if isinstance(value, Mode):
            return value
        aliases = {"vertices_only": cls.VERTICES, "vertices": cls.VERTICES, "segments": cls.SEGMENTS}
        try:
            return aliases[value]
        except KeyError:
            raise ValueError(f"unknown distance mode {value!r}") from None


@dataclass(frozen=True, eq=True)
class Trajectory:
    """An ordered, identified sequence of points.

    Point order is preserved exactly as given. An empty point list is
    allowed at construction; operations that need geometry reject it.
    """

    id: str
    points: tuple[GeoPoint, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not isinstance(self.points, tuple):
            object.__setattr__(self, "points", tuple(self.points))

    def __len__(self) -> int:
        return len(self.points)

    def reversed(self) -> "Trajectory":
        return Trajectory(self.id, self.points[::-1])

    @cached_property
    def lat_array(self) -> np.ndarray:
        return np.fromiter((p.lat for p in self.points), dtype=float, count=len(self.points))

    @cached_property
    def lon_array(self) -> np.ndarray:
        return np.fromiter((p.lon for p in self.points), dtype=float, count=len(self.points))


def _wrap_lon_rad(x):
    """Map a longitude difference into [-pi, pi]."""
    return (x + math.pi) % (2.0 * math.pi) - math.pi


def _reduced(lat_deg: float, f: float) -> tuple[float, float]:
    phi = math.radians(lat_deg)
    tan_u = (1.0 - f) * math.tan(phi)
    cos_u = 1.0 / math.sqrt(1.0 + tan_u * tan_u)
    sin_u = tan_u * cos_u
    if abs(lat_deg) == 90.0:
        sin_u, cos_u = math.copysign(1.0, lat_deg), 0.0
    return sin_u, cos_u


def _series_ab(cos2_alpha: float, e: Ellipsoid) -> tuple[float, float]:
    u2 = cos2_alpha * (e.a * e.a - e.b * e.b) / (e.b * e.b)
    big_a = 1.0 + u2 / 16384.0 * (4096.0 + u2 * (-768.0 + u2 * (320.0 - 175.0 * u2)))
    big_b = u2 / 1024.0 * (256.0 + u2 * (-128.0 + u2 * (74.0 - 47.0 * u2)))
    return big_a, big_b


def geodesic_inverse(
    lat1: float, lon1: float, lat2: float, lon2: float, e: Ellipsoid = WGS84
) -> tuple[float, float]:
    """Solve the inverse problem from point 1 to point 2.

    Returns ``(distance_m, forward_azimuth_rad)`` where the azimuth is the
    initial bearing at point 1, clockwise from north.

    Raises:
        GeodesicConvergenceError: if the iteration fails to converge, which
            happens only for nearly antipodal pairs.
    """
    f = e.f
    big_l = _wrap_lon_rad(math.radians(lon2 - lon1))
    sin_u1, cos_u1 = _reduced(lat1, f)
    sin_u2, cos_u2 = _reduced(lat2, f)

    lam = big_l
    for _ in range(_MAX_ITER):
        sin_lam, cos_lam = math.sin(lam), math.cos(lam)
        x = cos_u2 * sin_lam
        y = cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lam
        sin_sigma = math.hypot(x, y)
        if sin_sigma == 0.0:
            if sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_lam >= 0.0:
                return 0.0, 0.0
            raise GeodesicConvergenceError("antipodal points")
        cos_sigma = sin_u1 * sin_u2 + cos_u1 * cos_u2 * cos_lam
        sigma = math.atan2(sin_sigma, cos_sigma)
        sin_alpha = cos_u1 * cos_u2 * sin_lam / sin_sigma
        cos2_alpha = 1.0 - sin_alpha * sin_alpha
        cos_2sm = cos_sigma - 2.0 * sin_u1 * sin_u2 / cos2_alpha if cos2_alpha != 0.0 else 0.0
        c = f / 16.0 * cos2_alpha * (4.0 + f * (4.0 - 3.0 * cos2_alpha))
        lam_prev = lam
        lam = big_l + (1.0 - c) * f * sin_alpha * (
            sigma + c * sin_sigma * (cos_2sm + c * cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm))
        )
        if abs(lam) > math.pi:
            raise GeodesicConvergenceError(
                f"inverse geodesic diverged for ({lat1}, {lon1}) -> ({lat2}, {lon2})"
            )
        if abs(lam - lam_prev) < _INVERSE_TOL:
            break
    else:
        raise GeodesicConvergenceError(
            f"inverse geodesic did not converge for ({lat1}, {lon1}) -> ({lat2}, {lon2})"
        )

    big_a, big_b = _series_ab(cos2_alpha, e)
    d_sigma = big_b * sin_sigma * (
        cos_2sm
        + big_b / 4.0 * (
            cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)
            - big_b / 6.0 * cos_2sm * (-3.0 + 4.0 * sin_sigma * sin_sigma) * (-3.0 + 4.0 * cos_2sm * cos_2sm)
        )
    )
    s = e.b * big_a * (sigma - d_sigma)
    sin_lam, cos_lam = math.sin(lam), math.cos(lam)
    azi = math.atan2(cos_u2 * sin_lam, cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lam)
    return s, azi


def geodesic_direct(
    lat1: float, lon1: float, azimuth_rad: float, s: float, e: Ellipsoid = WGS84
) -> tuple[float, float]:
    """Point reached after travelling ``s`` metres from point 1 along ``azimuth_rad``.

    Returns ``(lat_deg, lon_deg)`` with the longitude wrapped into [-180, 180].
    """
    if s == 0.0:
        return lat1, lon1
    f = e.f
    sin_a1, cos_a1 = math.sin(azimuth_rad), math.cos(azimuth_rad)
    sin_u1, cos_u1 = _reduced(lat1, f)
    sigma1 = math.atan2(sin_u1, cos_u1 * cos_a1)
    sin_alpha = cos_u1 * sin_a1
    cos2_alpha = 1.0 - sin_alpha * sin_alpha
    big_a, big_b = _series_ab(cos2_alpha, e)

    sigma0 = s / (e.b * big_a)
    sigma = sigma0
    for _ in range(_MAX_ITER):
        cos_2sm = math.cos(2.0 * sigma1 + sigma)
        sin_sigma, cos_sigma = math.sin(sigma), math.cos(sigma)
        d_sigma = big_b * sin_sigma * (
            cos_2sm
            + big_b / 4.0 * (
                cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)
                - big_b / 6.0 * cos_2sm * (-3.0 + 4.0 * sin_sigma * sin_sigma) * (-3.0 + 4.0 * cos_2sm * cos_2sm)
            )
        )
        sigma_prev = sigma
        sigma = sigma0 + d_sigma
        if abs(sigma - sigma_prev) < _DIRECT_TOL:
            break
    cos_2sm = math.cos(2.0 * sigma1 + sigma)
    sin_sigma, cos_sigma = math.sin(sigma), math.cos(sigma)

    tmp = sin_u1 * sin_sigma - cos_u1 * cos_sigma * cos_a1
    lat2 = math.atan2(
        sin_u1 * cos_sigma + cos_u1 * sin_sigma * cos_a1,
        (1.0 - f) * math.hypot(sin_alpha, tmp),
    )
    lam = math.atan2(sin_sigma * sin_a1, cos_u1 * cos_sigma - sin_u1 * sin_sigma * cos_a1)
    c = f / 16.0 * cos2_alpha * (4.0 + f * (4.0 - 3.0 * cos2_alpha))
    big_l = lam - (1.0 - c) * f * sin_alpha * (
        sigma + c * sin_sigma * (cos_2sm + c * cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm))
    )
    lon2 = math.degrees(_wrap_lon_rad(math.radians(lon1) + big_l))
    return math.degrees(lat2), lon2


def _ordered(lat1, lon1, lat2, lon2):
    # Canonical argument order makes the distance bitwise symmetric.
    if (lat2, lon2) < (lat1, lon1):
        return lat2, lon2, lat1, lon1
    return lat1, lon1, lat2, lon2


def _distance(lat1: float, lon1: float, lat2: float, lon2: float, e: Ellipsoid = WGS84) -> float:
    return geodesic_inverse(*_ordered(lat1, lon1, lat2, lon2), e)[0]


def geodesic_distance(p: GeoPoint, q: GeoPoint, e: Ellipsoid = WGS84) -> float:
    """Length in metres of the shortest geodesic between ``p`` and ``q``.

    >>> round(geodesic_distance(GeoPoint(0, 0), GeoPoint(0, 1)), 4)
    111319.4908
    """
    return _distance(p.lat, p.lon, q.lat, q.lon, e)


def distance_array(lat1, lon1, lat2, lon2, e: Ellipsoid = WGS84) -> np.ndarray:
    """Vectorised :func:`geodesic_distance` over broadcastable degree arrays."""
    lat1, lon1, lat2, lon2 = np.broadcast_arrays(
        np.asarray(lat1, dtype=float), np.asarray(lon1, dtype=float),
        np.asarray(lat2, dtype=float), np.asarray(lon2, dtype=float),
    )
    swap = (lat2 < lat1) | ((lat2 == lat1) & (lon2 < lon1))
    lat1, lat2 = np.where(swap, lat2, lat1), np.where(swap, lat1, lat2)
    lon1, lon2 = np.where(swap, lon2, lon1), np.where(swap, lon1, lon2)

    f = e.f
    big_l = _wrap_lon_rad(np.radians(lon2 - lon1))

    def reduced(lat):
        tan_u = (1.0 - f) * np.tan(np.radians(lat))
        cos_u = 1.0 / np.sqrt(1.0 + tan_u * tan_u)
        sin_u = tan_u * cos_u
        pole = np.abs(lat) == 90.0
        return np.where(pole, np.sign(lat), sin_u), np.where(pole, 0.0, cos_u)

    sin_u1, cos_u1 = reduced(lat1)
    sin_u2, cos_u2 = reduced(lat2)
    su1su2 = sin_u1 * sin_u2
    cu1cu2 = cos_u1 * cos_u2

    lam = big_l.copy()
    done = np.zeros(lam.shape, dtype=bool)
    with np.errstate(invalid="ignore", divide="ignore"):
        for _ in range(_MAX_ITER):
            sin_lam, cos_lam = np.sin(lam), np.cos(lam)
            sin_sigma = np.hypot(cos_u2 * sin_lam, cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lam)
            cos_sigma = su1su2 + cu1cu2 * cos_lam
            sigma = np.arctan2(sin_sigma, cos_sigma)
            sin_alpha = np.where(sin_sigma == 0.0, 0.0, cu1cu2 * sin_lam / sin_sigma)
            cos2_alpha = 1.0 - sin_alpha * sin_alpha
            cos_2sm = np.where(cos2_alpha != 0.0, cos_sigma - 2.0 * su1su2 / cos2_alpha, 0.0)
            c = f / 16.0 * cos2_alpha * (4.0 + f * (4.0 - 3.0 * cos2_alpha))
            lam_new = big_l + (1.0 - c) * f * sin_alpha * (
                sigma + c * sin_sigma * (cos_2sm + c * cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm))
            )
            if np.any(np.abs(lam_new) > math.pi):
                raise GeodesicConvergenceError("inverse geodesic diverged (nearly antipodal points)")
            done = np.abs(lam_new - lam) < _INVERSE_TOL
            # Converged entries keep their final iterate, matching the scalar path.
            lam = np.where(done, lam, lam_new)
            if done.all():
                break
        else:
            raise GeodesicConvergenceError("inverse geodesic did not converge (nearly antipodal points)")

        # One more evaluation at the converged longitude, as the scalar path does.
        sin_lam, cos_lam = np.sin(lam), np.cos(lam)
        sin_sigma = np.hypot(cos_u2 * sin_lam, cos_u1 * sin_u2 - sin_u1 * cos_u2 * cos_lam)
        cos_sigma = su1su2 + cu1cu2 * cos_lam
        sigma = np.arctan2(sin_sigma, cos_sigma)
        sin_alpha = np.where(sin_sigma == 0.0, 0.0, cu1cu2 * sin_lam / sin_sigma)
        cos2_alpha = 1.0 - sin_alpha * sin_alpha
        cos_2sm = np.where(cos2_alpha != 0.0, cos_sigma - 2.0 * su1su2 / cos2_alpha, 0.0)

    if np.any((sin_sigma == 0.0) & (cos_sigma < 0.0)):
        raise GeodesicConvergenceError("antipodal points")
    u2 = cos2_alpha * (e.a * e.a - e.b * e.b) / (e.b * e.b)
    big_a = 1.0 + u2 / 16384.0 * (4096.0 + u2 * (-768.0 + u2 * (320.0 - 175.0 * u2)))
    big_b = u2 / 1024.0 * (256.0 + u2 * (-128.0 + u2 * (74.0 - 47.0 * u2)))
    d_sigma = big_b * sin_sigma * (
        cos_2sm
        + big_b / 4.0 * (
            cos_sigma * (-1.0 + 2.0 * cos_2sm * cos_2sm)
            - big_b / 6.0 * cos_2sm * (-3.0 + 4.0 * sin_sigma * sin_sigma) * (-3.0 + 4.0 * cos_2sm * cos_2sm)
        )
    )
    s = e.b * big_a * (sigma - d_sigma)
    return np.where(sin_sigma == 0.0, 0.0, s)


def segment_min_distance(
    plat: float,
    plon: float,
    alat: float,
    alon: float,
    azimuth: float,
    length: float,
    d_a: float,
    d_b: float,
    e: Ellipsoid = WGS84,
    tol: float = SEGMENT_TOL_M,
) -> float:
    """Minimum distance from a point to the geodesic starting at ``a``.

    The segment is described by its start, initial ``azimuth`` and
    ``length``; ``d_a``/``d_b`` are the already known endpoint distances.
    The result never exceeds ``min(d_a, d_b)``.
    """
    best = min(d_a, d_b)
    if length <= tol:
        return best

    def dist_at(t: float) -> float:
        lat, lon = geodesic_direct(alat, alon, azimuth, t * length, e)
        return _distance(plat, plon, lat, lon, e)

    lo, hi = 0.0, 1.0
    x1 = hi - _INV_PHI * (hi - lo)
    x2 = lo + _INV_PHI * (hi - lo)
    f1, f2 = dist_at(x1), dist_at(x2)
    best = min(best, f1, f2)
    # Distance along a geodesic has one interior minimum at most; when the
    # interior holds a maximum instead, the endpoints already win.
    while (hi - lo) * length > tol:
        if f1 <= f2:
            hi, x2, f2 = x2, x1, f1
            x1 = hi - _INV_PHI * (hi - lo)
            f1 = dist_at(x1)
            best = min(best, f1)
        else:
            lo, x1, f1 = x1, x2, f2
            x2 = lo + _INV_PHI * (hi - lo)
            f2 = dist_at(x2)
            best = min(best, f2)
    return best


def point_segment_distance(
    p: GeoPoint, a: GeoPoint, b: GeoPoint, e: Ellipsoid = WGS84
) -> float:
    """Minimum geodesic distance from ``p`` to the geodesic segment ``ab``, metres."""
    d_a = geodesic_distance(p, a, e)
    d_b = geodesic_distance(p, b, e)
    if (a.lat, a.lon) == (b.lat, b.lon):
        return d_a
    length, azimuth = geodesic_inverse(a.lat, a.lon, b.lat, b.lon, e)
    return segment_min_distance(p.lat, p.lon, a.lat, a.lon, azimuth, length, d_a, d_b, e)


def _require_points(t: Trajectory) -> None:
    if len(t.points) == 0:
        raise EmptyTrajectoryError(f"trajectory {t.id!r} has no points")


def point_polyline_distance(
    p: GeoPoint, t: Trajectory, e: Ellipsoid = WGS84, mode: Mode | str = Mode.SEGMENTS
) -> float:
    """Distance from ``p`` to trajectory ``t``.

    ``vertices`` takes the minimum over the recorded points only;
    ``segments`` also considers every point on the geodesics joining
    consecutive vertices, so it is never larger than ``vertices``.
    """
    _require_points(t)
    mode = Mode.parse(mode)
    pts = t.points
    d = [geodesic_distance(p, q, e) for q in pts]
    best = min(d)
    if mode is Mode.VERTICES:
        return best
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        if (a.lat, a.lon) == (b.lat, b.lon):
            continue
        length, azimuth = geodesic_inverse(a.lat, a.lon, b.lat, b.lon, e)
        best = min(best, segment_min_distance(p.lat, p.lon, a.lat, a.lon, azimuth, length, d[i], d[i + 1], e))
    return best


def polyline_length(t: Trajectory, e: Ellipsoid = WGS84) -> float:
    """Sum of the geodesic lengths of consecutive segments, metres."""
    _require_points(t)
    if len(t.points) == 1:
        return 0.0
    seg = distance_array(t.lat_array[:-1], t.lon_array[:-1], t.lat_array[1:], t.lon_array[1:], e)
    return math.fsum(seg.tolist())


def format_km(metres: float) -> str:
    """Kilometres with twelve fractional digits."""
    return f"{metres / 1000.0:.12f}"


def make_trajectory(id: str, coords: Sequence[tuple[float, float]]) -> Trajectory:
    """Build a trajectory from ``(lat, lon)`` pairs."""
    return Trajectory(id, tuple(GeoPoint(lat, lon) for lat, lon in coords))
