"""Periodic trajectory sampling, seeded record sampling and the sample-size rule.

Record samples come from :class:`random.Random` (MT19937) seeded with the
caller's integer, drawn with :meth:`random.Random.sample` over
``range(n_total)``. The same seed gives the same indices on every platform
running CPython.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from fractions import Fraction

from .errors import EmptyTrajectoryError
from .geodesy import Trajectory


@dataclass(frozen=True)
class SamplingRate:
    """Keep one point in ``k``."""

    k: int

    def __post_init__(self):
        if isinstance(self.k, bool) or not isinstance(self.k, int) or self.k < 1:
            raise ValueError(f"sampling rate denominator must be a positive integer, got {self.k!r}")

    @property
    def tag(self) -> str:
        return f"1/{self.k}"

    def __float__(self) -> float:
        return 1.0 / self.k


def _as_rate(r: SamplingRate | int) -> SamplingRate:
    return r if isinstance(r, SamplingRate) else SamplingRate(r)


def sampled_indices(n: int, r: SamplingRate | int) -> range:
    """Indices kept by :func:`periodic_sample` for an ``n``-point trajectory."""
    return range(0, n, _as_rate(r).k)


def periodic_sample(t: Trajectory, r: SamplingRate | int) -> Trajectory:
    """Keep points 0, k, 2k, ... of ``t``.

    The result has ``ceil(len(t) / k)`` points and id ``"<id>@1/k"``;
    ``k == 1`` returns ``t`` itself.
    """
    rate = _as_rate(r)
    if len(t.points) == 0:
        raise EmptyTrajectoryError(f"trajectory {t.id!r} has no points")
    if rate.k == 1:
        return t
    return Trajectory(f"{t.id}@{rate.tag}", t.points[:: rate.k])


def _draw(rng: random.Random, n_total: int, n_sample: int) -> list[int]:
    if n_sample < 0 or n_total < 0:
        raise ValueError("sample sizes must be non-negative")
    if n_sample > n_total:
        raise ValueError(f"cannot draw {n_sample} records from a population of {n_total}")
    return rng.sample(range(n_total), n_sample)


def uniform_sample(n_total: int, n_sample: int, seed: int) -> list[int]:
    """``n_sample`` distinct indices from ``range(n_total)``, without replacement."""
    if n_sample < 1:
        raise ValueError(f"sample size must be at least 1, got {n_sample}")
    return _draw(random.Random(seed), n_total, n_sample)


def required_sample_size(p_acceptable: float) -> int:
    """Smallest sample size expected to contain at least two defective records.

    That is the least integer ``n`` with ``n >= 2 / (1 - p)``. ``p`` is
    interpreted as the decimal it prints as, so 0.9 gives 20 rather than
    the 21 that binary rounding of ``1 - 0.9`` would produce.

    >>> required_sample_size(0.9)
    20
    """
    p = Fraction(repr(float(p_acceptable))) if not isinstance(p_acceptable, Fraction) else p_acceptable
    if not 0 <= p < 1:
        raise ValueError(f"acceptable fraction must lie in [0, 1), got {p_acceptable}")
    return math.ceil(Fraction(2) / (1 - p))
