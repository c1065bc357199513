"""Readers for GeoLife PLT trajectories, GeoNames dumps and reference tables.

Also the internal trajectory CSV (``id,seq,lat,lon,alt_m,epoch_s``) used
for fixtures and for passing trajectories between CLI steps.
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

from .errors import CoordinateError, DataError, EmptyTrajectoryError, ParseError
from .geodesy import GeoPoint, Trajectory

logger = logging.getLogger(__name__)

FEET_TO_M = 0.3048
PLT_HEADER_LINES = 6
PLT_INVALID_ALTITUDE = -777

TRAJECTORY_CSV_HEADER = ("id", "seq", "lat", "lon", "alt_m", "epoch_s")
REFERENCE_CSV_HEADER = ("key", "lat", "lon", "kind")

# https://download.geonames.org/export/dump/readme.txt
GEONAMES_FIELDS = (
    "geonameid",
    "name",
    "asciiname",
    "alternatenames",
    "latitude",
    "longitude",
    "feature_class",
    "feature_code",
    "country_code",
    "cc2",
    "admin1_code",
    "admin2_code",
    "admin3_code",
    "admin4_code",
    "population",
    "elevation",
    "dem",
    "timezone",
    "modification_date",
)


@dataclass(frozen=True)
class Poi:
    """A gazetteer record."""

    id: int
    name: str
    location: GeoPoint
    feature_class: str
    feature_code: str
    country: str
    population: int | None = None
    modified: dt.date | None = None

    @property
    def lat(self) -> float:
        return self.location.lat

    @property
    def lon(self) -> float:
        return self.location.lon


class Kind(str, enum.Enum):
    CITY = "city"
    OTHER = "other"


@dataclass(frozen=True)
class ReferenceRecord:
    """A trusted coordinate for one POI, keyed by POI id or exact name."""

    key: str
    lat: float
    lon: float
    kind: Kind


def _text(data: bytes | str) -> str:
    if isinstance(data, bytes):
        try:
            return data.decode("utf-8-sig")
        except UnicodeDecodeError as exc:
            raise ParseError(f"input is not valid UTF-8: {exc}") from None
    return data


def _coord(text: str, what: str, line: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise ParseError(f"unparsable {what} {text!r}", line) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite {what} {text!r}", line)
    return value


def _point(lat: float, lon: float, line: int, **extra) -> GeoPoint:
    try:
        return GeoPoint(lat, lon, **extra)
    except CoordinateError as exc:
        raise CoordinateError(f"line {line}: {exc}") from None


def parse_plt(data: bytes | str, name: str = "trajectory") -> Trajectory:
    """Parse a GeoLife ``.plt`` file.

    Six header lines are skipped; each remaining line is
    ``lat,lon,0,alt_feet,serial_days,date,time``. Altitude is converted to
    metres and the ``-777`` marker becomes ``None``. Timestamps are UTC
    epoch seconds. The trajectory id is ``name`` stripped of its extension.
    """
    lines = _text(data).splitlines()
    body = lines[PLT_HEADER_LINES:]
    traj_id = Path(name).stem
    points = []
    for offset, raw in enumerate(body):
        lineno = PLT_HEADER_LINES + offset + 1
        if not raw.strip():
            continue
        fields = raw.strip().split(",")
        if len(fields) != 7:
            raise ParseError(f"expected 7 comma-separated fields, got {len(fields)}", lineno)
        lat = _coord(fields[0], "latitude", lineno)
        lon = _coord(fields[1], "longitude", lineno)
        alt_ft = _coord(fields[3], "altitude", lineno)
        alt_m = None if alt_ft == PLT_INVALID_ALTITUDE else alt_ft * FEET_TO_M
        try:
            stamp = dt.datetime.strptime(f"{fields[5].strip()} {fields[6].strip()}", "%Y-%m-%d %H:%M:%S")
        except ValueError:
            raise ParseError(f"bad date/time {fields[5]!r} {fields[6]!r}", lineno) from None
        epoch = int(stamp.replace(tzinfo=dt.timezone.utc).timestamp())
        points.append(_point(lat, lon, lineno, alt_m=alt_m, t=epoch))
    if not points:
        raise EmptyTrajectoryError(f"{name}: no data lines after the {PLT_HEADER_LINES}-line header")
    return Trajectory(traj_id, tuple(points))


def read_geolife_dir(root: str | os.PathLike) -> list[Trajectory]:
    """Parse every ``*.plt`` below ``root``, sorted by path.

    Ids are made unique by prefixing the user directory when the layout is
    ``<user>/Trajectory/<file>.plt``.
    """
    root = Path(root)
    out = []
    for path in sorted(root.rglob("*.plt")):
        traj = parse_plt(path.read_bytes(), path.name)
        rel = path.relative_to(root).parts
        if len(rel) >= 3 and rel[-2].lower() == "trajectory":
            traj = Trajectory(f"{rel[-3]}/{traj.id}", traj.points)
        out.append(traj)
    return out


def parse_geonames(
    data: bytes | str,
    strict: bool = False,
    diagnostics: list[str] | None = None,
) -> list[Poi]:
    """Parse a GeoNames tab-separated dump (19 columns, no header).

    Rows with the wrong number of fields are skipped with a diagnostic, or
    raise :class:`ParseError` when ``strict``. Unparsable ids or coordinates
    and duplicate ids always raise.
    """
    pois = []
    seen: set[int] = set()
    for lineno, raw in enumerate(_text(data).split("\n"), start=1):
        raw = raw.rstrip("\r")
        if not raw:
            continue
        fields = raw.split("\t")
        if len(fields) != len(GEONAMES_FIELDS):
            msg = f"line {lineno}: expected {len(GEONAMES_FIELDS)} fields, got {len(fields)}"
            if strict:
                raise ParseError(f"expected {len(GEONAMES_FIELDS)} fields, got {len(fields)}", lineno)
            logger.warning("skipping geonames row: %s", msg)
            if diagnostics is not None:
                diagnostics.append(msg)
            continue
        row = dict(zip(GEONAMES_FIELDS, fields))
        try:
            poi_id = int(row["geonameid"])
        except ValueError:
            raise ParseError(f"non-integer geonameid {row['geonameid']!r}", lineno) from None
        if poi_id in seen:
            raise ParseError(f"duplicate geonameid {poi_id}", lineno)
        seen.add(poi_id)
        location = _point(
            _coord(row["latitude"], "latitude", lineno),
            _coord(row["longitude"], "longitude", lineno),
            lineno,
        )
        population = None
        if row["population"].strip():
            try:
                population = int(row["population"])
            except ValueError:
                population = None
        modified = None
        if row["modification_date"].strip():
            try:
                modified = dt.date.fromisoformat(row["modification_date"].strip())
            except ValueError:
                modified = None
        pois.append(
            Poi(
                id=poi_id,
                name=row["name"],
                location=location,
                feature_class=row["feature_class"],
                feature_code=row["feature_code"],
                country=row["country_code"],
                population=population,
                modified=modified,
            )
        )
    return pois


def format_geonames(pois: Iterable[Poi]) -> str:
    """Render POIs back to GeoNames rows; unmodelled columns stay empty."""
    out = []
    for p in pois:
        row = dict.fromkeys(GEONAMES_FIELDS, "")
        row.update(
            geonameid=str(p.id),
            name=p.name,
            asciiname=p.name,
            latitude=repr(p.lat),
            longitude=repr(p.lon),
            feature_class=p.feature_class,
            feature_code=p.feature_code,
            country_code=p.country,
            population="" if p.population is None else str(p.population),
            modification_date="" if p.modified is None else p.modified.isoformat(),
        )
        out.append("\t".join(row[k] for k in GEONAMES_FIELDS) + "\n")
    return "".join(out)


def parse_reference(data: bytes | str) -> list[ReferenceRecord]:
    """Parse the reference CSV ``key,lat,lon,kind``."""
    reader = csv.reader(io.StringIO(_text(data)))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != REFERENCE_CSV_HEADER:
        raise ParseError(f"expected header {','.join(REFERENCE_CSV_HEADER)}, got {header!r}", 1)
    records = []
    seen: set[str] = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != 4:
            raise ParseError(f"expected 4 fields, got {len(row)}", lineno)
        key, lat_s, lon_s, kind_s = (c.strip() for c in row)
        if key in seen:
            raise ParseError(f"duplicate reference key {key!r}", lineno)
        seen.add(key)
        try:
            kind = Kind(kind_s)
        except ValueError:
            raise ParseError(f"unknown kind {kind_s!r} (expected city or other)", lineno) from None
        pt = _point(_coord(lat_s, "latitude", lineno), _coord(lon_s, "longitude", lineno), lineno)
        records.append(ReferenceRecord(key, pt.lat, pt.lon, kind))
    return records


def format_reference(records: Iterable[ReferenceRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(REFERENCE_CSV_HEADER)
    for r in records:
        w.writerow([r.key, repr(r.lat), repr(r.lon), r.kind.value])
    return buf.getvalue()


def _opt(text: str, cast):
    return None if text == "" else cast(text)


def write_trajectories_csv(trajectories: Iterable[Trajectory]) -> str:
    """Serialise trajectories to the internal CSV; floats round-trip exactly."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(TRAJECTORY_CSV_HEADER)
    for traj in trajectories:
        for seq, p in enumerate(traj.points):
            w.writerow([
                traj.id,
                seq,
                repr(p.lat),
                repr(p.lon),
                "" if p.alt_m is None else repr(p.alt_m),
                "" if p.t is None else p.t,
            ])
    return buf.getvalue()


def read_trajectories_csv(data: bytes | str) -> list[Trajectory]:
    """Parse the internal CSV. Trajectories keep first-appearance order; points keep ``seq`` order."""
    reader = csv.reader(io.StringIO(_text(data)))
    header = next(reader, None)
    if header is None or tuple(header) != TRAJECTORY_CSV_HEADER:
        raise ParseError(f"expected header {','.join(TRAJECTORY_CSV_HEADER)}, got {header!r}", 1)
    groups: dict[str, list[tuple[int, GeoPoint]]] = {}
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(TRAJECTORY_CSV_HEADER):
            raise ParseError(f"expected {len(TRAJECTORY_CSV_HEADER)} fields, got {len(row)}", lineno)
        tid, seq_s, lat_s, lon_s, alt_s, t_s = row
        try:
            seq = int(seq_s)
            alt = _opt(alt_s, float)
            t = _opt(t_s, int)
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
        pt = _point(_coord(lat_s, "latitude", lineno), _coord(lon_s, "longitude", lineno), lineno, alt_m=alt, t=t)
        groups.setdefault(tid, []).append((seq, pt))
    out = []
    for tid, rows in groups.items():
        seqs = [s for s, _ in rows]
        if len(set(seqs)) != len(seqs):
            raise DataError(f"trajectory {tid!r} repeats a seq number")
        rows.sort(key=lambda r: r[0])
        out.append(Trajectory(tid, tuple(p for _, p in rows)))
    return out
