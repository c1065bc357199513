"""Seeded synthetic inputs: GPS-like trajectories, POI sets and assessment tables.

Trajectories are correlated random walks with a few metres between fixes,
which is how GeoLife logs look at 1-5 s sampling. Everything is driven by
``numpy.random.default_rng(seed)`` so a seed reproduces a corpus exactly.
"""

from __future__ import annotations

import datetime as dt
import math
from importlib import resources

import numpy as np

from .geodesy import GeoPoint, Trajectory
from .ingest import Kind, Poi, ReferenceRecord, parse_geonames, parse_reference

# Roughly Beijing, where most GeoLife traces were recorded.
DEFAULT_ORIGIN = (39.95, 116.35)
_R = 6371008.8


def random_walk(
    rng: np.random.Generator,
    traj_id: str,
    n_points: int,
    origin: tuple[float, float] = DEFAULT_ORIGIN,
    step_m: tuple[float, float] = (2.0, 12.0),
    turn_sd: float = 0.25,
    start_epoch: int = 1224816784,
) -> Trajectory:
    """A trajectory whose heading drifts by ``N(0, turn_sd)`` radians per fix."""
    steps = rng.uniform(*step_m, size=n_points - 1)
    heading = rng.uniform(0.0, 2.0 * math.pi) + np.cumsum(rng.normal(0.0, turn_sd, size=n_points - 1))
    lat0, lon0 = origin
    dlat = np.degrees(steps * np.cos(heading) / _R)
    lat = np.concatenate([[lat0], lat0 + np.cumsum(dlat)])
    dlon = np.degrees(steps * np.sin(heading) / (_R * np.cos(np.radians(lat[:-1]))))
    lon = np.concatenate([[lon0], lon0 + np.cumsum(dlon)])
    lon = (lon + 180.0) % 360.0 - 180.0
    alt = rng.normal(50.0, 5.0, size=n_points)
    pts = tuple(
        GeoPoint(round(float(a), 6), round(float(o), 6), round(float(h), 1), start_epoch + 2 * i)
        for i, (a, o, h) in enumerate(zip(lat, lon, alt))
    )
    return Trajectory(traj_id, pts)


def random_pois(
    rng: np.random.Generator,
    n: int,
    center: tuple[float, float] = DEFAULT_ORIGIN,
    half_span_deg: float = 0.25,
    first_id: int = 1,
) -> list[Poi]:
    """``n`` POIs uniform in a lat/lon box around ``center``."""
    lat = np.clip(center[0] + rng.uniform(-half_span_deg, half_span_deg, n), -90.0, 90.0)
    lon = center[1] + rng.uniform(-half_span_deg, half_span_deg, n)
    lon = (lon + 180.0) % 360.0 - 180.0
    classes = rng.choice(["P", "S", "H", "L", "T"], size=n)
    out = []
    for i in range(n):
        fc = str(classes[i])
        out.append(
            Poi(
                id=first_id + i,
                name=f"poi-{first_id + i}",
                location=GeoPoint(float(lat[i]), float(lon[i])),
                feature_class=fc,
                feature_code="PPL" if fc == "P" else "BLDG",
                country="CN",
            )
        )
    return out


SMALL_MAX = 1000
LARGE_MIN = 3000


def trajectory_sizes(rng: np.random.Generator, n_traj: int) -> list[int]:
    """Point counts split evenly across small (< 1000), medium and large (> 3000) classes."""
    sizes = []
    for i in range(n_traj):
        cls = i % 3
        if cls == 0:
            sizes.append(int(rng.integers(25, SMALL_MAX)))
        elif cls == 1:
            sizes.append(int(rng.integers(SMALL_MAX, LARGE_MIN + 1)))
        else:
            sizes.append(int(rng.integers(LARGE_MIN + 1, 4 * LARGE_MIN)))
    return sizes


def corpus(
    seed: int = 2014, n_traj: int = 36, n_pois: int = 400
) -> tuple[list[Trajectory], list[Poi]]:
    """A benchmark corpus of ``n_traj`` trajectories and ``n_pois`` POIs around one city."""
    rng = np.random.default_rng(seed)
    sizes = trajectory_sizes(rng, n_traj)
    trajs = []
    for i, n in enumerate(sizes):
        origin = (
            DEFAULT_ORIGIN[0] + rng.uniform(-0.15, 0.15),
            DEFAULT_ORIGIN[1] + rng.uniform(-0.15, 0.15),
        )
        trajs.append(random_walk(rng, f"traj{i:03d}", n, origin))
    pois = random_pois(rng, n_pois, half_span_deg=0.3)
    return trajs, pois


def assessment_table(
    seed: int,
    n: int = 120,
    acceptable_fraction: float = 0.75,
    center: tuple[float, float] = (32.65, 51.67),
) -> tuple[list[Poi], list[ReferenceRecord]]:
    """POIs with reference coordinates of which exactly ``round(n * fraction)`` are acceptable.

    Acceptable records are displaced by at most a quarter of their kind's
    default threshold, the rest by 2 to 20 times it. Modification dates
    spread over the previous decade.
    """
    rng = np.random.default_rng(seed)
    n_ok = round(n * acceptable_fraction)
    ok = np.zeros(n, dtype=bool)
    ok[rng.permutation(n)[:n_ok]] = True
    pois, refs = [], []
    base = dt.date(2014, 1, 1)
    for i in range(n):
        pid = 100000 + i
        is_city = bool(rng.random() < 0.5)
        kind = Kind.CITY if is_city else Kind.OTHER
        eps = 0.01 if is_city else 0.001
        lat = round(float(center[0] + rng.uniform(-3.0, 3.0)), 6)
        lon = round(float(center[1] + rng.uniform(-3.0, 3.0)), 6)
        scale = rng.uniform(0.0, 0.25) if ok[i] else rng.uniform(2.0, 20.0)
        angle = rng.uniform(0.0, 2.0 * math.pi)
        dlat = scale * eps * math.sin(angle)
        dlon = scale * eps * math.cos(angle)
        # An acceptable error stays below eps on both axes; an unacceptable
        # one must exceed it on at least one axis.
        if not ok[i] and max(abs(dlat), abs(dlon)) <= eps:
            dlon = math.copysign(2.0 * eps, dlon)
        modified = base - dt.timedelta(days=int(rng.integers(0, 3650)))
        pois.append(
            Poi(
                id=pid,
                name=f"{'city' if is_city else 'site'}-{pid}",
                location=GeoPoint(lat, lon),
                feature_class="P" if is_city else "S",
                feature_code="PPL" if is_city else "BLDG",
                country="IR",
                population=int(rng.integers(1000, 2_000_000)) if is_city else None,
                modified=modified,
            )
        )
        refs.append(ReferenceRecord(str(pid), round(lat + dlat, 7), round(lon + dlon, 7), kind))
    return pois, refs


# The shipped 120-record fixture is assessment_table(FIXTURE_SEED), written
# out by ``trajqual synth --assessment``.
FIXTURE_SEED = 120
FIXTURE_POIS = "assess_pois.tsv"
FIXTURE_REFS = "assess_refs.csv"


def load_assessment_fixture() -> tuple[list[Poi], list[ReferenceRecord]]:
    """The packaged 120-record POI table (75% acceptable) and its references."""
    data = resources.files("trajqual") / "data"
    pois = parse_geonames(data.joinpath(FIXTURE_POIS).read_bytes(), strict=True)
    refs = parse_reference(data.joinpath(FIXTURE_REFS).read_bytes())
    return pois, refs
