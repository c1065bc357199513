"""Sampling-rate sweep: nearest-neighbor error and latency per trajectory."""

from __future__ import annotations

import csv
import io
import logging
import os
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Callable, Sequence

from . import charts
from .errors import EmptyIndexError, TrajqualError
from .geodesy import WGS84, Ellipsoid, Mode, Trajectory, format_km, polyline_length
from .ingest import Poi
from .nnindex import NnResult, PoiIndex, build_index, nn_bruteforce, nn_indexed
from .sampling import periodic_sample
from .synthetic import LARGE_MIN, SMALL_MAX

logger = logging.getLogger(__name__)

DEFAULT_RATES = (1, 2, 3, 5, 10, 15, 20, 30)

BENCH_CSV_HEADER = (
    "trajectory_id",
    "n_points_full",
    "n_points_sampled",
    "rate_k",
    "length_m",
    "nn_poi_id_full",
    "nn_poi_id_sampled",
    "nn_changed",
    "dist_full_m",
    "dist_sampled_m",
    "error_m",
    "rel_error",
    "elapsed_full_ns",
    "elapsed_sampled_ns",
    "mode",
    "method",
)

SUMMARY_CSV_HEADER = (
    "rate_k",
    "n_records",
    "mean_error_m",
    "max_error_m",
    "mean_rel_error",
    "mean_speedup",
    "mean_error_km",
)


@dataclass(frozen=True)
class BenchRecord:
    trajectory_id: str
    n_points_full: int
    n_points_sampled: int
    rate_k: int
    length_m: float
    nn_poi_id_full: int
    nn_poi_id_sampled: int
    nn_changed: bool
    dist_full_m: float
    dist_sampled_m: float
    error_m: float
    rel_error: float | None
    elapsed_full_ns: int
    elapsed_sampled_ns: int
    mode: str
    method: str


@dataclass(frozen=True)
class RateStats:
    rate_k: int
    n_records: int
    mean_error_m: float
    max_error_m: float
    mean_rel_error: float | None
    mean_speedup: float


@dataclass(frozen=True)
class BenchSummary:
    records: tuple[BenchRecord, ...]
    per_rate: dict[int, RateStats]
    per_trajectory: dict[str, tuple[BenchRecord, ...]]

    @property
    def rates(self) -> list[int]:
        return sorted(self.per_rate)

    def mean_rel_error_by_size(self) -> dict[str, float | None]:
        """Mean relative error over sampled records (k > 1) of small and large trajectories."""
        out: dict[str, float | None] = {}
        for name, pred in (("small", lambda n: n < SMALL_MAX), ("large", lambda n: n > LARGE_MIN)):
            vals = [
                r.rel_error for r in self.records
                if r.rate_k > 1 and r.rel_error is not None and pred(r.n_points_full)
            ]
            out[name] = statistics.fmean(vals) if vals else None
        return out


class _Searcher:
    """Runs the chosen NN method; the index is built once, outside timing."""

    def __init__(self, pois: Sequence[Poi], mode: Mode, method: str, e: Ellipsoid):
        if method not in ("brute", "indexed"):
            raise ValueError(f"unknown method {method!r}")
        if not pois:
            raise EmptyIndexError("benchmark needs at least one POI")
        self.pois = list(pois)
        self.mode = mode
        self.method = method
        self.e = e
        self.index: PoiIndex | None = build_index(self.pois) if method == "indexed" else None

    def __call__(self, t: Trajectory) -> NnResult:
        if self.index is not None:
            return nn_indexed(t, self.index, self.mode, self.e)
        return nn_bruteforce(t, self.pois, self.mode, self.e)


def timed_nn(search: Callable[[Trajectory], NnResult], t: Trajectory, warmup: int, repeats: int) -> NnResult:
    """Run ``warmup`` untimed searches, then report the median of ``repeats`` timings."""
    for _ in range(warmup):
        search(t)
    runs = [search(t) for _ in range(max(1, repeats))]
    first = runs[0]
    median = int(statistics.median(r.elapsed_ns for r in runs))
    return NnResult(first.poi_id, first.distance_m, first.mode, median)


def _bench_one(
    t: Trajectory, rates: Sequence[int], search: _Searcher, warmup: int, repeats: int
) -> list[BenchRecord]:
    length = polyline_length(t, search.e)
    full = timed_nn(search, t, warmup, repeats)
    out = []
    for k in rates:
        if k == 1:
            res = full
            n_sampled = len(t.points)
        else:
            sampled = periodic_sample(t, k)
            res = timed_nn(search, sampled, warmup, repeats)
            n_sampled = len(sampled.points)
        err = abs(res.distance_m - full.distance_m)
        out.append(
            BenchRecord(
                trajectory_id=t.id,
                n_points_full=len(t.points),
                n_points_sampled=n_sampled,
                rate_k=k,
                length_m=length,
                nn_poi_id_full=full.poi_id,
                nn_poi_id_sampled=res.poi_id,
                nn_changed=res.poi_id != full.poi_id,
                dist_full_m=full.distance_m,
                dist_sampled_m=res.distance_m,
                error_m=err,
                rel_error=err / length if length > 0 else None,
                elapsed_full_ns=full.elapsed_ns,
                elapsed_sampled_ns=res.elapsed_ns,
                mode=search.mode.value,
                method=search.method,
            )
        )
    return out


def normalize_rates(rates: Sequence[int]) -> list[int]:
    ks = sorted({int(k) for k in rates} | {1})
    if ks[0] < 1:
        raise ValueError(f"sampling rate denominators must be >= 1, got {ks[0]}")
    return ks


def run_bench(
    trajectories: Sequence[Trajectory],
    pois: Sequence[Poi],
    rates: Sequence[int] = DEFAULT_RATES,
    mode: Mode | str = Mode.SEGMENTS,
    method: str = "indexed",
    threads: int | None = None,
    warmup: int = 3,
    repeats: int = 5,
    e: Ellipsoid = WGS84,
    diagnostics: list[str] | None = None,
) -> list[BenchRecord]:
    """One record per (trajectory, k), always including the k = 1 baseline.

    A trajectory that fails (empty, or geodesic non-convergence) is logged
    and skipped; the others proceed. Records come back sorted by
    ``(trajectory_id, rate_k)`` whatever order the workers finish in.
    Timings are the median of ``repeats`` runs after ``warmup`` runs; pass
    ``threads=1`` for timings free of interference between workers.
    """
    if not trajectories:
        raise ValueError("benchmark needs at least one trajectory")
    ks = normalize_rates(rates)
    search = _Searcher(pois, Mode.parse(mode), method, e)
    workers = threads or os.cpu_count() or 1

    def job(t: Trajectory) -> list[BenchRecord]:
        try:
            return _bench_one(t, ks, search, warmup, repeats)
        except TrajqualError as exc:
            msg = f"trajectory {t.id!r} skipped: {exc}"
            logger.warning(msg)
            if diagnostics is not None:
                diagnostics.append(msg)
            return []

    if workers == 1:
        batches = [job(t) for t in trajectories]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            batches = list(pool.map(job, trajectories))
    records = [r for batch in batches for r in batch]
    records.sort(key=lambda r: (r.trajectory_id, r.rate_k))
    return records


def summarize(records: Sequence[BenchRecord]) -> BenchSummary:
    """Per-rate means and per-trajectory series, computed from the records alone."""
    by_rate: dict[int, list[BenchRecord]] = {}
    by_traj: dict[str, list[BenchRecord]] = {}
    for r in records:
        by_rate.setdefault(r.rate_k, []).append(r)
        by_traj.setdefault(r.trajectory_id, []).append(r)
    per_rate = {}
    for k in sorted(by_rate):
        rs = by_rate[k]
        rel = [r.rel_error for r in rs if r.rel_error is not None]
        per_rate[k] = RateStats(
            rate_k=k,
            n_records=len(rs),
            mean_error_m=statistics.fmean(r.error_m for r in rs),
            max_error_m=max(r.error_m for r in rs),
            mean_rel_error=statistics.fmean(rel) if rel else None,
            mean_speedup=statistics.fmean(
                r.elapsed_full_ns / max(r.elapsed_sampled_ns, 1) for r in rs
            ),
        )
    per_traj = {
        tid: tuple(sorted(rs, key=lambda r: r.rate_k)) for tid, rs in sorted(by_traj.items())
    }
    return BenchSummary(tuple(records), per_rate, per_traj)


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_bench_csv(records: Sequence[BenchRecord]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(BENCH_CSV_HEADER)
    for r in records:
        row = asdict(r)
        w.writerow([_cell(row[name]) for name in BENCH_CSV_HEADER])
    return buf.getvalue()


_CASTS = {f.name: f.type for f in fields(BenchRecord)}


def _parse_cell(name: str, text: str):
    kind = _CASTS[name]
    if kind == "bool":
        return text == "true"
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "float | None":
        return None if text == "" else float(text)
    return text


def read_bench_csv(data: str) -> list[BenchRecord]:
    reader = csv.reader(io.StringIO(data))
    header = next(reader, None)
    if header is None or tuple(header) != BENCH_CSV_HEADER:
        raise ValueError("not a benchmark CSV: header mismatch")
    return [
        BenchRecord(**{name: _parse_cell(name, cell) for name, cell in zip(BENCH_CSV_HEADER, row)})
        for row in reader
        if row
    ]


def write_summary_csv(summary: BenchSummary) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_CSV_HEADER)
    for k in summary.rates:
        s = summary.per_rate[k]
        w.writerow([
            k,
            s.n_records,
            repr(s.mean_error_m),
            repr(s.max_error_m),
            _cell(s.mean_rel_error),
            repr(s.mean_speedup),
            format_km(s.mean_error_m),
        ])
    return buf.getvalue()


def emit_report(
    summary: BenchSummary, out_dir: str | os.PathLike, formats: Sequence[str] = ("csv", "svg")
) -> list[Path]:
    """Write ``bench.csv``/``summary.csv`` and the SVG chart families into ``out_dir``.

    With no records only the header-only ``bench.csv`` is written.
    """
    unknown = set(formats) - {"csv", "svg"}
    if unknown:
        raise ValueError(f"unknown report format(s): {sorted(unknown)}")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    if "csv" in formats:
        path = out / "bench.csv"
        path.write_text(write_bench_csv(summary.records))
        written.append(path)
        if summary.records:
            path = out / "summary.csv"
            path.write_text(write_summary_csv(summary))
            written.append(path)
    if "svg" in formats and summary.records:
        for name, svg in charts.render_all(summary).items():
            path = out / name
            path.write_text(svg)
            written.append(path)
    return written


def format_summary(summary: BenchSummary) -> str:
    """Plain-text table of the per-rate statistics, errors in kilometres."""
    lines = [f"{'rate':>6} {'n':>4} {'mean error (km)':>18} {'max error (km)':>18} {'rel error':>12} {'speedup':>8}"]
    for k in summary.rates:
        s = summary.per_rate[k]
        rel = "n/a" if s.mean_rel_error is None else f"{s.mean_rel_error:.3e}"
        lines.append(
            f"{'1/' + str(k):>6} {s.n_records:>4} {format_km(s.mean_error_m):>18} "
            f"{format_km(s.max_error_m):>18} {rel:>12} {s.mean_speedup:>8.2f}"
        )
    return "\n".join(lines) + "\n"


def mean_error_is_nondecreasing(summary: BenchSummary) -> bool:
    means = [summary.per_rate[k].mean_error_m for k in summary.rates]
    return all(b >= a for a, b in zip(means, means[1:]))
