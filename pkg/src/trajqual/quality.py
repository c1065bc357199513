"""Sample-based quality assessment of a POI table.

Positional accuracy is judged record by record against trusted reference
coordinates; the fraction of acceptable records is estimated from a
random sample, with a second sample drawn when the first is inconclusive.
Quality estimates of base tables compose into estimates for derived
products (union, selection).
"""

from __future__ import annotations

import csv
import datetime as dt
import enum
import io
import random
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .errors import DataError
from .geodesy import Trajectory
from .ingest import Kind, Poi, ReferenceRecord
from .sampling import _draw

__all__ = [
    "AccuracyThresholds",
    "DecisionThresholds",
    "Decision",
    "RecordCheck",
    "QualityReport",
    "TableQuality",
    "UpdatenessReport",
    "record_error",
    "match_references",
    "assess",
    "combine_union",
    "combine_selection",
    "completeness",
    "updateness_report",
]


@dataclass(frozen=True)
class AccuracyThresholds:
    """Largest coordinate error (degrees) still acceptable, per record kind."""

    city_deg: float = 0.01
    other_deg: float = 0.001

    def __post_init__(self):
        if not (self.city_deg > 0 and self.other_deg > 0):
            raise ValueError("accuracy thresholds must be positive")

    def for_kind(self, kind: Kind) -> float:
        return self.city_deg if kind is Kind.CITY else self.other_deg


@dataclass(frozen=True)
class DecisionThresholds:
    accept_at: float = 0.9
    reject_at: float = 0.1

    def __post_init__(self):
        if not 0.0 <= self.reject_at < self.accept_at <= 1.0:
            raise ValueError(
                f"need 0 <= reject_at < accept_at <= 1, got {self.reject_at}, {self.accept_at}"
            )

    def decide(self, p: float) -> "Decision":
        if p >= self.accept_at:
            return Decision.ACCEPT
        if p <= self.reject_at:
            return Decision.REJECT
        return Decision.INCONCLUSIVE


class Decision(str, enum.Enum):
    ACCEPT = "accept"
    REJECT = "reject"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class RecordCheck:
    key: str
    error_deg: float | None
    kind: Kind
    acceptable: bool
    unmatched: bool
    stage: int


@dataclass(frozen=True)
class QualityReport:
    stage1: tuple[int, int]
    stage2: tuple[int, int] | None
    p_hat: float
    decision: Decision
    per_record: tuple[RecordCheck, ...] = field(default_factory=tuple)
    seed: int | None = None

    @property
    def n_sampled(self) -> int:
        return self.stage1[0] + (self.stage2[0] if self.stage2 else 0)

    @property
    def n_accepted(self) -> int:
        return self.stage1[1] + (self.stage2[1] if self.stage2 else 0)

    def to_text(self) -> str:
        """Self-describing plain-text rendering; byte-stable for a given report."""
        lines = ["quality assessment report"]
        if self.seed is not None:
            lines.append(f"seed: {self.seed}")
        n1, a1 = self.stage1
        lines.append(f"stage 1: sampled {n1}, acceptable {a1} ({_pct(a1, n1)})")
        if self.stage2 is not None:
            n2, a2 = self.stage2
            lines.append(f"stage 2: sampled {n2}, acceptable {a2} ({_pct(a2, n2)})")
        else:
            lines.append("stage 2: not required")
        lines.append(f"estimated acceptable fraction: {self.p_hat * 100:.2f}%")
        lines.append(f"decision: {self.decision.value}")
        unmatched = sum(r.unmatched for r in self.per_record)
        lines.append(f"unmatched records: {unmatched}")
        lines.append("records:")
        for r in self.per_record:
            err = "n/a" if r.error_deg is None else f"{r.error_deg:.7f}"
            flag = "unmatched" if r.unmatched else ("ok" if r.acceptable else "rejected")
            lines.append(f"  [{r.stage}] {r.key} {r.kind.value} error={err} {flag}")
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        """Per-record CSV ``key,error_deg,kind,acceptable,stage``."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key", "error_deg", "kind", "acceptable", "stage"])
        for r in self.per_record:
            w.writerow([
                r.key,
                "" if r.error_deg is None else repr(r.error_deg),
                r.kind.value,
                "true" if r.acceptable else "false",
                r.stage,
            ])
        return buf.getvalue()


def _pct(k: int, n: int) -> str:
    return f"{100.0 * k / n:.2f}%" if n else "n/a"


@dataclass(frozen=True)
class TableQuality:
    """Estimated acceptable fraction ``p`` of a table, from a sample of size ``n``."""

    n: int
    p: float

    def __post_init__(self):
        if isinstance(self.n, bool) or not isinstance(self.n, int) or self.n < 1:
            raise ValueError(f"sample size must be a positive integer, got {self.n!r}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"fraction must lie in [0, 1], got {self.p!r}")


def record_error(poi: Poi, ref: ReferenceRecord | None) -> float:
    """Largest absolute coordinate difference in degrees (L-infinity over lat, lon)."""
    if ref is None:
        raise DataError(f"POI {poi.id} has no matching reference record")
    return max(abs(poi.lat - ref.lat), abs(poi.lon - ref.lon))


def match_references(
    pois: Sequence[Poi], refs: Sequence[ReferenceRecord]
) -> dict[int, ReferenceRecord]:
    """Map POI ids to references keyed by the POI id or by its exact name.

    A key equal to some POI id matches that POI. Other keys match by name
    only when exactly one POI carries it; ambiguous keys stay unmatched.
    """
    by_id = {str(p.id): p for p in pois}
    by_name: dict[str, list[Poi]] = {}
    for p in pois:
        by_name.setdefault(p.name, []).append(p)
    matched: dict[int, ReferenceRecord] = {}
    for ref in refs:
        poi = by_id.get(ref.key)
        if poi is None:
            candidates = by_name.get(ref.key, [])
            poi = candidates[0] if len(candidates) == 1 else None
        if poi is not None and poi.id not in matched:
            matched[poi.id] = ref
    return matched


def _check(poi: Poi, ref: ReferenceRecord | None, thresholds: AccuracyThresholds, stage: int) -> RecordCheck:
    if ref is None:
        kind = Kind.CITY if poi.feature_class == "P" else Kind.OTHER
        return RecordCheck(str(poi.id), None, kind, False, True, stage)
    err = record_error(poi, ref)
    return RecordCheck(ref.key, err, ref.kind, err < thresholds.for_kind(ref.kind), False, stage)


def assess(
    pois: Sequence[Poi],
    refs: Sequence[ReferenceRecord],
    sampler_seed: int,
    thresholds: AccuracyThresholds = AccuracyThresholds(),
    decide: DecisionThresholds = DecisionThresholds(),
    n1: int = 20,
    n2: int = 30,
) -> QualityReport:
    """Two-stage acceptance sampling of positional accuracy.

    Stage 1 inspects ``n1`` records drawn uniformly without replacement. If
    its acceptable fraction is at least ``accept_at`` or at most
    ``reject_at`` the decision is final; otherwise ``n2`` further records,
    disjoint from the first, are inspected and the decision is taken on the
    pooled fraction ``(n1*p1 + n2*p2) / (n1 + n2)``. Records without a
    reference count as unacceptable and are flagged.
    """
    if n1 < 1 or n2 < 1:
        raise ValueError("stage sample sizes must be positive")
    if len(pois) < n1:
        raise DataError(f"population of {len(pois)} records is smaller than the stage-1 sample {n1}")
    matched = match_references(pois, refs)
    rng = random.Random(sampler_seed)

    order = _draw(rng, len(pois), n1)
    checks = [_check(pois[i], matched.get(pois[i].id), thresholds, 1) for i in order]
    a1 = sum(c.acceptable for c in checks)
    p1 = a1 / n1
    decision = decide.decide(p1)
    if decision is not Decision.INCONCLUSIVE:
        return QualityReport((n1, a1), None, p1, decision, tuple(checks), sampler_seed)

    taken = set(order)
    remaining = [i for i in range(len(pois)) if i not in taken]
    if len(remaining) < n2:
        raise DataError(
            f"stage 2 needs {n2} fresh records but only {len(remaining)} remain"
        )
    order2 = [remaining[i] for i in _draw(rng, len(remaining), n2)]
    checks2 = [_check(pois[i], matched.get(pois[i].id), thresholds, 2) for i in order2]
    a2 = sum(c.acceptable for c in checks2)
    # Pooled estimate; equal to combine_union over the two stages, but exact in counts.
    p_hat = (a1 + a2) / (n1 + n2)
    return QualityReport(
        (n1, a1), (n2, a2), p_hat, decide.decide(p_hat), tuple(checks + checks2), sampler_seed
    )


def combine_union(q1: TableQuality, q2: TableQuality) -> float:
    """Acceptable fraction of the union of two duplicate-free tables.

    >>> round(combine_union(TableQuality(30, 0.7334), TableQuality(30, 0.866)), 12)
    0.7997
    """
    return (q1.n * q1.p + q2.n * q2.p) / (q1.n + q2.n)


def combine_selection(q: TableQuality) -> float:
    """A selection inherits the estimate of its source table."""
    return q.p


def completeness(sampled: Trajectory, full: Trajectory) -> float:
    """Fraction of the full trajectory's points retained by ``sampled``."""
    base_id = sampled.id.split("@", 1)[0]
    if base_id != full.id:
        raise DataError(f"trajectory {sampled.id!r} was not derived from {full.id!r}")
    if len(full.points) == 0:
        raise DataError(f"trajectory {full.id!r} has no points")
    if len(sampled.points) > len(full.points):
        raise DataError("sample is larger than its source")
    return len(sampled.points) / len(full.points)


@dataclass(frozen=True)
class UpdatenessReport:
    now: dt.date
    age_days: dict[int, int]
    year_buckets: dict[int, int]
    unknown: int
    future: tuple[int, ...]


def updateness_report(pois: Sequence[Poi], now: dt.date) -> UpdatenessReport:
    """Age in days of each record's last modification, bucketed by whole years.

    Records without a date are counted as unknown; records dated after
    ``now`` are listed in ``future`` and left out of the histogram.
    """
    ages: dict[int, int] = {}
    buckets: Counter[int] = Counter()
    unknown = 0
    future = []
    for p in pois:
        if p.modified is None:
            unknown += 1
            continue
        age = (now - p.modified).days
        if age < 0:
            future.append(p.id)
            continue
        ages[p.id] = age
        buckets[age // 365] += 1
    return UpdatenessReport(now, ages, dict(sorted(buckets.items())), unknown, tuple(future))
