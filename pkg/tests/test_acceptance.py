"""Exit criteria, each at its stated tolerance and runtime budget.

Every test records a PASS/FAIL line that is printed in the terminal summary.
"""
import math
import statistics
import time
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE
from geodesic_vectors import SUITE
from trajqual import cli
from trajqual.bench import DEFAULT_RATES, mean_error_is_nondecreasing, run_bench, summarize
from trajqual.geodesy import WGS84, Ellipsoid, geodesic_inverse
from trajqual.nnindex import build_index, nn_bruteforce, nn_indexed
from trajqual.quality import assess
from trajqual.sampling import required_sample_size
from trajqual.synthetic import (
    LARGE_MIN,
    assessment_table,
    corpus,
    load_assessment_fixture,
    random_pois,
    random_walk,
)
pytestmark = pytest.mark.acceptance

DATA = Path(__file__).parent / "data"


def verdict(n, title, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {n}: {title} ({detail})"
    ACCEPTANCE.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def bench_corpus():
    return corpus(seed=2014, n_traj=36)


def test_c1_union_combination(capsys):
    t0 = time.perf_counter()
    code = cli.main(["combine", "--union", "30,0.7334,30,0.866"])
    out = capsys.readouterr().out
    value = float(out)
    dt = time.perf_counter() - t0
    ok = code == 0 and abs(value - 0.7997) <= 1e-9 and dt < 1.0
    verdict(1, "union of two tables", ok, f"output {out.strip()}, {dt * 1e3:.1f} ms")


def test_c2_required_sample_size():
    t0 = time.perf_counter()
    ok = required_sample_size(0.9) == 20
    sizes = {}
    for p in (0.0, 0.5, 0.9, 0.99):
        n = required_sample_size(p)
        q = 1 - Fraction(str(p))
        sizes[p] = n
        ok &= (n - 1) * q < 2 <= n * q
    dt = time.perf_counter() - t0
    ok &= dt < 1.0
    verdict(2, "required sample size", ok, f"sizes {sizes}")


def test_c3_geodesic_suite():
    t0 = time.perf_counter()
    worst = 0.0
    for _, ell, lat1, lon1, lat2, lon2, expected in SUITE:
        e = WGS84 if ell is None else Ellipsoid(*ell)
        s, _ = geodesic_inverse(lat1, lon1, lat2, lon2, e)
        worst = max(worst, abs(s - expected))
    dt = time.perf_counter() - t0
    ok = len(SUITE) == 20 and worst <= 1e-3 and dt < 1.0
    verdict(3, "geodesic accuracy", ok, f"{len(SUITE)} vectors, worst {worst * 1e3:.4f} mm, {dt:.3f} s")


def nn_fixture(i):
    # Fixture 0 is the largest allowed; the rest are log-uniform in size,
    # anywhere between 75S and 75N and at any longitude.
    rng = np.random.default_rng([4, i])
    if i == 0:
        n_pois, n_pts = 10_000, 500
    else:
        n_pois = int(round(10 ** rng.uniform(0, 4)))
        n_pts = int(round(10 ** rng.uniform(0, math.log10(500))))
    c = (rng.uniform(-75, 75), rng.uniform(-180, 180))
    if i == 1:
        c = (c[0], 179.95)
    t = random_walk(rng, f"f{i}", n_pts, origin=c, step_m=(2.0, 200.0))
    pois = random_pois(rng, n_pois, center=c, half_span_deg=float(10 ** rng.uniform(-2, 0.5)))
    return t, pois


def test_c4_indexed_matches_bruteforce():
    t0 = time.perf_counter()
    mismatches = []
    worst = 0.0
    for i in range(1000):
        t, pois = nn_fixture(i)
        brute = nn_bruteforce(t, pois)
        fast = nn_indexed(t, build_index(pois))
        worst = max(worst, abs(brute.distance_m - fast.distance_m))
        if brute.poi_id != fast.poi_id or abs(brute.distance_m - fast.distance_m) > 1e-6:
            mismatches.append(i)
    dt = time.perf_counter() - t0
    ok = not mismatches and dt < 120
    verdict(4, "indexed search equals brute force", ok,
            f"1000 fixtures, mismatches {mismatches[:10]}, worst {worst:.2e} m, {dt:.1f} s")


def test_c5_vertex_mode_monotone(bench_corpus):
    trajs, pois = bench_corpus
    t0 = time.perf_counter()
    recs = run_bench(trajs, pois, rates=DEFAULT_RATES, mode="vertices_only",
                     warmup=0, repeats=1, threads=1)
    dt = time.perf_counter() - t0
    bad = [(r.trajectory_id, r.rate_k) for r in recs if r.dist_sampled_m < r.dist_full_m]
    ok = len(recs) == 36 * 8 and not bad and dt < 60
    verdict(5, "vertex-mode monotonicity", ok, f"{len(recs)} records, {len(bad)} violations, {dt:.1f} s")


def test_c6_error_trends(bench_corpus):
    trajs, pois = bench_corpus
    t0 = time.perf_counter()
    summary = summarize(run_bench(trajs, pois, rates=DEFAULT_RATES, warmup=0, repeats=1))
    dt = time.perf_counter() - t0
    means = [round(summary.per_rate[k].mean_error_m, 2) for k in summary.rates]
    rel = summary.mean_rel_error_by_size()
    ok = (
        summary.rates == [1, 2, 3, 5, 10, 15, 20, 30]
        and mean_error_is_nondecreasing(summary)
        and rel["large"] is not None and rel["small"] is not None
        and rel["large"] < rel["small"]
        and dt < 300
    )
    verdict(6, "error trends", ok,
            f"mean error m {means}, rel small {rel['small']:.2e} large {rel['large']:.2e}, {dt:.1f} s")


def test_c7_runtime_proportional(bench_corpus):
    trajs, pois = bench_corpus
    big = next(t for t in trajs if len(t) > LARGE_MIN)
    t0 = time.perf_counter()
    recs = run_bench([big], pois, rates=[10], method="brute", warmup=3, repeats=5, threads=1)
    dt = time.perf_counter() - t0
    r = next(r for r in recs if r.rate_k == 10)
    ratio = r.elapsed_sampled_ns / r.elapsed_full_ns
    ok = ratio <= 0.25 and dt < 120
    verdict(7, "runtime proportional to sample size", ok,
            f"{len(big)} points, k=10 / k=1 = {ratio:.3f}, {dt:.1f} s")


def test_c8_assessment_determinism_and_calibration():
    t0 = time.perf_counter()
    pois, refs = load_assessment_fixture()
    rep = assess(pois, refs, 2014)
    golden = (
        rep.to_text() == (DATA / "assess_fixture_seed2014.txt").read_text()
        and rep.to_csv() == (DATA / "assess_fixture_seed2014.csv").read_text()
        and assess(pois, refs, 2014) == rep
    )
    table, table_refs = assessment_table(seed=120)
    assert (table, table_refs) == (pois, refs)
    mean = statistics.fmean(assess(pois, refs, s).p_hat for s in range(1000))
    dt = time.perf_counter() - t0
    ok = golden and 0.70 <= mean <= 0.80 and dt < 60
    verdict(8, "assessment determinism and calibration", ok,
            f"golden {'identical' if golden else 'differs'}, mean p_hat {mean:.4f}, {dt:.1f} s")
