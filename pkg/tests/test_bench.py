import csv
import io
import re
import statistics
from dataclasses import replace

import numpy as np
import pytest

from conftest import line
from trajqual.bench import (
    BENCH_CSV_HEADER,
    DEFAULT_RATES,
    BenchRecord,
    emit_report,
    format_summary,
    mean_error_is_nondecreasing,
    read_bench_csv,
    run_bench,
    summarize,
    timed_nn,
    write_bench_csv,
)
from trajqual.charts import line_chart
from trajqual.errors import EmptyIndexError
from trajqual.geodesy import GeoPoint, Mode, Trajectory, point_polyline_distance, polyline_length
from trajqual.ingest import Poi
from trajqual.nnindex import NnResult, nn_bruteforce
from trajqual.synthetic import corpus, random_pois, random_walk

FAST = dict(warmup=0, repeats=1, threads=1)


def poi(pid, lat, lon):
    return Poi(pid, f"p{pid}", GeoPoint(lat, lon), "S", "BLDG", "XX")


def record(k=1, err=0.0, tid="t", length=1000.0, **kw):
    base = dict(
        trajectory_id=tid, n_points_full=100, n_points_sampled=-(-100 // k), rate_k=k,
        length_m=length, nn_poi_id_full=1, nn_poi_id_sampled=1, nn_changed=False,
        dist_full_m=10.0, dist_sampled_m=10.0 + err, error_m=err,
        rel_error=err / length if length > 0 else None, elapsed_full_ns=1000,
        elapsed_sampled_ns=max(1, 1000 // k), mode="segments", method="indexed",
    )
    base.update(kw)
    return BenchRecord(**base)


@pytest.fixture(scope="module")
def small_corpus():
    return corpus(seed=7, n_traj=6, n_pois=150)


class TestRunBench:
    def test_single_rate_baseline(self):
        t = line([(0, 0), (0, 0.01), (0.01, 0.02)])
        (r,) = run_bench([t], [poi(1, 0.005, 0.005)], rates=[1], **FAST)
        assert r.rate_k == 1 and r.error_m == 0.0
        assert r.nn_poi_id_full == r.nn_poi_id_sampled and not r.nn_changed

    def test_distances_come_from_geodesy(self):
        t = line([(39.9, 116.3), (39.91, 116.31), (39.915, 116.33), (39.92, 116.35)])
        pois = [poi(1, 39.95, 116.30), poi(2, 39.912, 116.32), poi(3, 39.88, 116.36)]
        for mode in Mode:
            recs = run_bench([t], pois, rates=[1, 2, 3], mode=mode, **FAST)
            for r in recs:
                full = {p.id: point_polyline_distance(p.location, t, mode=mode) for p in pois}
                assert r.nn_poi_id_full == min(full, key=full.get)
                assert r.dist_full_m == pytest.approx(full[r.nn_poi_id_full], abs=1e-6)
                assert r.length_m == pytest.approx(polyline_length(t), abs=1e-9)
                assert r.error_m == abs(r.dist_sampled_m - r.dist_full_m)

    def test_record_count_36_trajectories(self):
        rng = np.random.default_rng(1)
        trajs = [random_walk(rng, f"t{i:02d}", int(rng.integers(5, 60))) for i in range(36)]
        pois = random_pois(rng, 50)
        recs = run_bench(trajs, pois, rates=[2, 3, 5, 10, 15, 20, 30], warmup=0, repeats=1)
        assert len(recs) == 36 * 7 + 36
        assert sum(r.rate_k == 1 for r in recs) == 36
        assert [(r.trajectory_id, r.rate_k) for r in recs] == sorted((r.trajectory_id, r.rate_k) for r in recs)

    def test_baseline_matches_bruteforce(self, small_corpus):
        trajs, pois = small_corpus
        recs = run_bench(trajs, pois, rates=DEFAULT_RATES, method="indexed", warmup=0, repeats=1)
        for t in trajs:
            base = next(r for r in recs if r.trajectory_id == t.id and r.rate_k == 1)
            assert base.nn_poi_id_full == nn_bruteforce(t, pois).poi_id

    def test_invariants(self, small_corpus):
        trajs, pois = small_corpus
        for mode in Mode:
            for r in run_bench(trajs, pois, rates=DEFAULT_RATES, mode=mode, **FAST):
                assert r.error_m >= 0.0
                assert r.n_points_sampled == -(-r.n_points_full // r.rate_k)
                assert r.nn_changed == (r.nn_poi_id_full != r.nn_poi_id_sampled)
                if mode is Mode.VERTICES:
                    assert r.dist_sampled_m >= r.dist_full_m

    def test_thread_count_does_not_change_results(self, small_corpus):
        trajs, pois = small_corpus

        def strip(recs):
            return [replace(r, elapsed_full_ns=0, elapsed_sampled_ns=0) for r in recs]

        one = run_bench(trajs, pois, warmup=0, repeats=1, threads=1)
        many = run_bench(list(reversed(trajs)), pois, warmup=0, repeats=1, threads=4)
        assert strip(one) == strip(many)

    def test_brute_and_indexed_agree(self, small_corpus):
        trajs, pois = small_corpus
        a = run_bench(trajs, pois, method="brute", **FAST)
        b = run_bench(trajs, pois, method="indexed", **FAST)
        for x, y in zip(a, b):
            assert (x.nn_poi_id_full, x.nn_poi_id_sampled) == (y.nn_poi_id_full, y.nn_poi_id_sampled)
            assert x.dist_sampled_m == pytest.approx(y.dist_sampled_m, abs=1e-6)

    def test_failing_trajectory_skipped_with_diagnostic(self):
        good = line([(0.0, 0.0), (0.0, 0.01)], "good")
        bad = Trajectory("bad", ())
        diags = []
        recs = run_bench([good, bad], [poi(1, 0.0, 0.005)], rates=[1, 2], diagnostics=diags, **FAST)
        assert {r.trajectory_id for r in recs} == {"good"}
        assert len(diags) == 1 and "bad" in diags[0]

    def test_bad_inputs(self):
        t = line([(0, 0)])
        with pytest.raises(ValueError):
            run_bench([], [poi(1, 0, 0)])
        with pytest.raises(EmptyIndexError):
            run_bench([t], [])
        with pytest.raises(ValueError):
            run_bench([t], [poi(1, 0, 0)], rates=[0])
        with pytest.raises(ValueError):
            run_bench([t], [poi(1, 0, 0)], method="fast")

    def test_single_point_trajectory_has_no_relative_error(self):
        (r,) = run_bench([line([(1, 1)])], [poi(1, 1.1, 1)], rates=[1], **FAST)
        assert r.length_m == 0.0 and r.rel_error is None


def test_timed_nn_reports_median():
    calls = iter([5, 1, 9, 3, 7, 100])

    def fake(t):
        return NnResult(1, 2.0, Mode.SEGMENTS, next(calls))

    r = timed_nn(fake, None, warmup=1, repeats=5)
    assert r.elapsed_ns == 7  # median of 1, 9, 3, 7, 100


class TestSummarize:
    def test_single_baseline(self):
        s = summarize([record()])
        assert s.per_rate[1].mean_error_m == 0.0

    def test_mean_of_two(self):
        s = summarize([record(k=5, err=1.0, tid="a"), record(k=5, err=3.0, tid="b")])
        assert s.per_rate[5].mean_error_m == 2.0
        assert s.per_rate[5].max_error_m == 3.0
        assert s.per_rate[5].mean_speedup == pytest.approx(5.0)

    def test_matches_independent_csv_aggregation(self, small_corpus):
        trajs, pois = small_corpus
        recs = run_bench(trajs, pois, **FAST)
        text = write_bench_csv(recs)
        rows = list(csv.DictReader(io.StringIO(text)))
        summary = summarize(recs)
        for k in summary.rates:
            sel = [r for r in rows if int(r["rate_k"]) == k]
            errs = [float(r["error_m"]) for r in sel]
            rels = [float(r["rel_error"]) for r in sel if r["rel_error"]]
            speed = [int(r["elapsed_full_ns"]) / max(1, int(r["elapsed_sampled_ns"])) for r in sel]
            s = summary.per_rate[k]
            assert s.n_records == len(sel)
            assert s.mean_error_m == pytest.approx(sum(errs) / len(errs), rel=1e-12, abs=1e-12)
            assert s.max_error_m == max(errs)
            assert s.mean_rel_error == pytest.approx(sum(rels) / len(rels), rel=1e-12, abs=1e-15)
            assert s.mean_speedup == pytest.approx(sum(speed) / len(speed), rel=1e-12)

    def test_csv_round_trip(self, small_corpus):
        trajs, pois = small_corpus
        recs = run_bench(trajs, pois, **FAST)
        back = read_bench_csv(write_bench_csv(recs))
        assert back == recs
        assert summarize(back) == summarize(recs)

    def test_mean_rel_error_by_size(self):
        recs = [
            record(k=2, err=1.0, tid="s", n_points_full=500, length=100.0),
            record(k=2, err=1.0, tid="l", n_points_full=5000, length=10_000.0),
            record(k=2, err=1.0, tid="m", n_points_full=2000, length=10.0),
        ]
        by = summarize(recs).mean_rel_error_by_size()
        assert by == {"small": 0.01, "large": 0.0001}

    def test_nondecreasing_helper(self):
        assert mean_error_is_nondecreasing(summarize([record(1), record(2, 1.0), record(3, 1.0)]))
        assert not mean_error_is_nondecreasing(summarize([record(1), record(2, 2.0), record(3, 1.0)]))

    def test_format_summary_kilometres(self):
        text = format_summary(summarize([record(1), record(2, err=1234.5)]))
        assert "1.234500000000" in text and "1/2" in text


class TestReport:
    def test_exact_header(self):
        assert ",".join(BENCH_CSV_HEADER) == (
            "trajectory_id,n_points_full,n_points_sampled,rate_k,length_m,nn_poi_id_full,"
            "nn_poi_id_sampled,nn_changed,dist_full_m,dist_sampled_m,error_m,rel_error,"
            "elapsed_full_ns,elapsed_sampled_ns,mode,method"
        )

    def test_empty_summary_header_only(self, tmp_path):
        written = emit_report(summarize([]), tmp_path)
        assert [p.name for p in written] == ["bench.csv"]
        assert (tmp_path / "bench.csv").read_text() == ",".join(BENCH_CSV_HEADER) + "\n"
        assert not list(tmp_path.glob("*.svg"))

    def test_two_rates_two_points_per_series(self, tmp_path):
        recs = [record(k, err=k - 1.0, tid=tid) for tid in ("a", "b", "c") for k in (1, 4)]
        emit_report(summarize(recs), tmp_path)
        svgs = sorted(p.name for p in tmp_path.glob("*.svg"))
        assert svgs == ["elapsed.svg", "error_by_trajectory.svg", "mean_error.svg", "rel_error.svg"]
        for name in svgs:
            text = (tmp_path / name).read_text()
            groups = re.findall(r'<g class="series".*?</g>', text, flags=re.S)
            assert groups
            for g in groups:
                assert g.count('<circle class="pt"') == 2
                assert len(re.search(r'points="([^"]*)"', g).group(1).split()) == 2

    def test_axis_labels_present(self, tmp_path):
        emit_report(summarize([record(1), record(2, 1.0)]), tmp_path, formats=["svg"])
        text = (tmp_path / "mean_error.svg").read_text()
        assert 'class="xlabel"' in text and 'class="ylabel"' in text
        assert not (tmp_path / "bench.csv").exists()

    def test_full_sweep_row_count(self, small_corpus, tmp_path):
        trajs, pois = small_corpus
        recs = run_bench(trajs, pois, **FAST)
        emit_report(summarize(recs), tmp_path)
        rows = (tmp_path / "bench.csv").read_text().splitlines()
        assert len(rows) - 1 == len(recs)
        summary_rows = (tmp_path / "summary.csv").read_text().splitlines()
        assert len(summary_rows) - 1 == len(DEFAULT_RATES)

    def test_deterministic_except_timing(self, small_corpus):
        trajs, pois = small_corpus

        def csv_without_timing(recs):
            rows = list(csv.reader(io.StringIO(write_bench_csv(recs))))
            drop = {BENCH_CSV_HEADER.index("elapsed_full_ns"), BENCH_CSV_HEADER.index("elapsed_sampled_ns")}
            return [[c for i, c in enumerate(r) if i not in drop] for r in rows]

        assert csv_without_timing(run_bench(trajs, pois, **FAST)) == csv_without_timing(run_bench(trajs, pois, **FAST))

    def test_unwritable_path(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        with pytest.raises(OSError):
            emit_report(summarize([record()]), blocker / "sub")

    def test_unknown_format(self, tmp_path):
        with pytest.raises(ValueError):
            emit_report(summarize([record()]), tmp_path, formats=["png"])


def test_line_chart_escapes_names():
    svg = line_chart("t<", "x", "y", [('a"&b', [(1, 1.0), (2, 2.0)])])
    assert "t&lt;" in svg and "a&quot;&amp;b" in svg


def test_summary_means_by_hand():
    recs = [record(k=3, err=e, tid=str(i)) for i, e in enumerate([0.5, 1.5, 4.0])]
    assert summarize(recs).per_rate[3].mean_error_m == statistics.fmean([0.5, 1.5, 4.0])
