"""Command line entry point: ``trajqual <command> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import datetime as dt
import logging
import sys
from pathlib import Path
from typing import Sequence

from . import bench, synthetic
from .errors import DataError, TrajqualError
from .geodesy import Mode, format_km
from .ingest import (
    format_geonames,
    format_reference,
    parse_geonames,
    parse_reference,
    read_geolife_dir,
    read_trajectories_csv,
    write_trajectories_csv,
)
from .nnindex import build_index, nn_bruteforce, nn_indexed
from .quality import (
    AccuracyThresholds,
    DecisionThresholds,
    TableQuality,
    assess,
    combine_selection,
    combine_union,
    updateness_report,
)
from .sampling import SamplingRate, periodic_sample

logger = logging.getLogger("trajqual")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        value = 0
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return value


def _write(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _load_trajectories(args) -> list:
    if getattr(args, "geolife", None):
        return read_geolife_dir(args.geolife)
    if getattr(args, "trajectories", None):
        return read_trajectories_csv(Path(args.trajectories).read_bytes())
    raise UsageError("give --trajectories CSV or --geolife DIR")


def _load_pois(path: str, strict: bool = False) -> list:
    diags: list[str] = []
    pois = parse_geonames(Path(path).read_bytes(), strict=strict, diagnostics=diags)
    for d in diags:
        print(f"warning: {path}: {d}", file=sys.stderr)
    return pois


def cmd_ingest(args) -> int:
    if args.source == "geolife":
        trajs = read_geolife_dir(args.path)
        if not trajs:
            raise DataError(f"no .plt files under {args.path}")
        _write(write_trajectories_csv(trajs), args.out)
        print(f"{len(trajs)} trajectories, {sum(len(t) for t in trajs)} points", file=sys.stderr)
    else:
        pois = _load_pois(args.path, strict=args.strict)
        if args.out:
            _write(format_geonames(pois), args.out)
        print(f"{len(pois)} POIs", file=sys.stderr)
    return EXIT_OK


def cmd_sample(args) -> int:
    rate = SamplingRate(args.rate)
    trajs = read_trajectories_csv(Path(args.input).read_bytes())
    _write(write_trajectories_csv(periodic_sample(t, rate) for t in trajs), args.out)
    return EXIT_OK


def cmd_nn(args) -> int:
    trajs = _load_trajectories(args)
    pois = _load_pois(args.pois)
    mode = Mode.parse(args.mode)
    index = build_index(pois) if args.method == "indexed" else None
    lines = ["trajectory_id,poi_id,distance_m,distance_km,mode,method,elapsed_ns"]
    for t in trajs:
        res = nn_indexed(t, index, mode) if index is not None else nn_bruteforce(t, pois, mode)
        lines.append(
            f"{t.id},{res.poi_id},{res.distance_m!r},{format_km(res.distance_m)},"
            f"{mode.value},{args.method},{res.elapsed_ns}"
        )
    _write("\n".join(lines) + "\n", args.out)
    return EXIT_OK


def cmd_assess(args) -> int:
    if (args.pois is None) != (args.refs is None):
        raise UsageError("--pois and --refs go together (omit both for the bundled fixture)")
    if args.pois is None:
        pois, refs = synthetic.load_assessment_fixture()
    else:
        pois = _load_pois(args.pois)
        refs = parse_reference(Path(args.refs).read_bytes())
    try:
        accuracy = AccuracyThresholds(args.city_eps, args.other_eps)
        decide = DecisionThresholds(args.accept, args.reject)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    if args.n1 < 1 or args.n2 < 1:
        raise UsageError("--n1 and --n2 must be positive")
    report = assess(pois, refs, args.seed, accuracy, decide, n1=args.n1, n2=args.n2)
    _write(report.to_text(), args.out)
    if args.csv:
        Path(args.csv).write_text(report.to_csv())
    return EXIT_OK


def _table_quality(parts: Sequence[str]) -> TableQuality:
    n, p = parts
    try:
        return TableQuality(int(n), float(p))
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_combine(args) -> int:
    if args.union:
        # Accepts "n1,p1,n2,p2" as well as "n1,p1 n2,p2".
        parts = ",".join(args.union).split(",")
        if len(parts) != 4:
            raise UsageError("--union expects n1,p1,n2,p2")
        value = combine_union(_table_quality(parts[:2]), _table_quality(parts[2:]))
    else:
        parts = args.selection.split(",")
        if len(parts) != 2:
            raise UsageError("--selection expects n,p")
        value = combine_selection(_table_quality(parts))
    print(f"{value:.12g}")
    return EXIT_OK


def cmd_bench(args) -> int:
    if args.synthetic is not None:
        trajs, pois = synthetic.corpus(args.synthetic, n_traj=args.n_traj, n_pois=args.n_pois)
    else:
        trajs = _load_trajectories(args)
        if not args.pois:
            raise UsageError("--pois is required unless --synthetic is given")
        pois = _load_pois(args.pois)
    diags: list[str] = []
    records = bench.run_bench(
        trajs,
        pois,
        rates=args.rates,
        mode=args.mode,
        method=args.method,
        threads=args.threads,
        warmup=args.warmup,
        repeats=args.repeats,
        diagnostics=diags,
    )
    for d in diags:
        print(f"warning: {d}", file=sys.stderr)
    summary = bench.summarize(records)
    written = bench.emit_report(summary, args.out, formats=args.format)
    sys.stdout.write(bench.format_summary(summary))
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK if records else EXIT_DATA


def cmd_report(args) -> int:
    records = bench.read_bench_csv(Path(args.input).read_text())
    summary = bench.summarize(records)
    for path in bench.emit_report(summary, args.out, formats=args.format):
        print(f"wrote {path}", file=sys.stderr)
    if records:
        sys.stdout.write(bench.format_summary(summary))
    return EXIT_OK


def cmd_updateness(args) -> int:
    pois = _load_pois(args.pois)
    now = dt.date.fromisoformat(args.now) if args.now else dt.date.today()
    rep = updateness_report(pois, now)
    print(f"reference date: {now.isoformat()}")
    for year, count in rep.year_buckets.items():
        print(f"  {year:>3} year(s): {count}")
    print(f"  unknown: {rep.unknown}")
    if rep.future:
        print(f"  dated after reference: {len(rep.future)}")
    return EXIT_OK


def cmd_synth(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.assessment:
        pois, refs = synthetic.assessment_table(args.seed)
        (out / synthetic.FIXTURE_POIS).write_text(format_geonames(pois))
        (out / synthetic.FIXTURE_REFS).write_text(format_reference(refs))
        print(f"wrote {len(pois)} assessment records to {out}", file=sys.stderr)
        return EXIT_OK
    trajs, pois = synthetic.corpus(args.seed, n_traj=args.n_traj, n_pois=args.n_pois)
    (out / "trajectories.csv").write_text(write_trajectories_csv(trajs))
    (out / "pois.tsv").write_text(format_geonames(pois))
    print(f"wrote {len(trajs)} trajectories and {len(pois)} POIs to {out}", file=sys.stderr)
    return EXIT_OK


def _formats(text: str) -> list[str]:
    fmts = [f.strip() for f in text.split(",") if f.strip()]
    bad = [f for f in fmts if f not in ("csv", "svg")]
    if bad:
        raise argparse.ArgumentTypeError(f"unknown format(s): {', '.join(bad)}")
    return fmts


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="trajqual", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("ingest", help="parse GeoLife or GeoNames files")
    s.add_argument("source", choices=["geolife", "geonames"])
    s.add_argument("path")
    s.add_argument("--strict", action="store_true", help="fail on malformed GeoNames rows")
    s.add_argument("--out", help="output file (trajectory CSV, or cleaned GeoNames TSV)")
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("sample", help="periodically sample trajectories")
    s.add_argument("--rate", type=_positive_int, required=True, metavar="K", help="keep one point in K")
    s.add_argument("--input", required=True, help="trajectory CSV")
    s.add_argument("--out")
    s.set_defaults(func=cmd_sample)

    def traj_sources(s):
        s.add_argument("--trajectories", help="trajectory CSV")
        s.add_argument("--geolife", help="directory of .plt files")

    s = sub.add_parser("nn", help="nearest POI for each trajectory")
    traj_sources(s)
    s.add_argument("--pois", required=True, help="GeoNames TSV")
    s.add_argument("--mode", choices=["vertices", "vertices_only", "segments"], default="segments")
    s.add_argument("--method", choices=["brute", "indexed"], default="indexed")
    s.add_argument("--out")
    s.set_defaults(func=cmd_nn)

    s = sub.add_parser("assess", help="two-stage acceptance sampling of positional accuracy")
    s.add_argument("--pois", help="GeoNames TSV (default: bundled 120-record fixture)")
    s.add_argument("--refs", help="reference CSV key,lat,lon,kind")
    s.add_argument("--n1", type=int, default=20)
    s.add_argument("--n2", type=int, default=30)
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--city-eps", type=float, default=0.01)
    s.add_argument("--other-eps", type=float, default=0.001)
    s.add_argument("--accept", type=float, default=0.9)
    s.add_argument("--reject", type=float, default=0.1)
    s.add_argument("--csv", help="also write per-record CSV here")
    s.add_argument("--out")
    s.set_defaults(func=cmd_assess)

    s = sub.add_parser("combine", help="quality of a derived product")
    g = s.add_mutually_exclusive_group(required=True)
    g.add_argument("--union", nargs="+", metavar="N,P")
    g.add_argument("--selection", metavar="N,P")
    s.set_defaults(func=cmd_combine)

    s = sub.add_parser("bench", help="sampling-rate sweep")
    traj_sources(s)
    s.add_argument("--pois", help="GeoNames TSV")
    s.add_argument("--synthetic", type=int, metavar="SEED", help="use a generated corpus")
    s.add_argument("--n-traj", type=int, default=36)
    s.add_argument("--n-pois", type=int, default=400)
    s.add_argument("--rates", type=_int_list, default=list(bench.DEFAULT_RATES))
    s.add_argument("--mode", choices=["vertices", "vertices_only", "segments"], default="segments")
    s.add_argument("--method", choices=["brute", "indexed"], default="indexed")
    s.add_argument("--threads", type=int, default=None, help="worker count (default: CPU count)")
    s.add_argument("--warmup", type=int, default=3)
    s.add_argument("--repeats", type=int, default=5)
    s.add_argument("--format", type=_formats, default=["csv", "svg"])
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("report", help="summaries and charts from a bench CSV")
    s.add_argument("--input", required=True, help="bench.csv")
    s.add_argument("--format", type=_formats, default=["csv", "svg"])
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_report)

    s = sub.add_parser("updateness", help="age histogram of GeoNames records")
    s.add_argument("--pois", required=True)
    s.add_argument("--now", help="reference date YYYY-MM-DD (default: today)")
    s.set_defaults(func=cmd_updateness)

    s = sub.add_parser("synth", help="write a synthetic benchmark corpus")
    s.add_argument("--seed", type=int, default=2014)
    s.add_argument("--n-traj", type=int, default=36)
    s.add_argument("--n-pois", type=int, default=400)
    s.add_argument("--assessment", action="store_true", help="write a 120-record assessment table instead")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_synth)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"trajqual: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (TrajqualError, OSError, ValueError) as exc:
        print(f"trajqual: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception as exc:  # noqa: BLE001
        logger.exception("internal error")
        print(f"trajqual: internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
