"""Constrained search for the latent-code split across the three feature levels.

Finds the cheapest assignment (n1, n2, n3), n1 + n2 + n3 = total, whose
quality stays within a relative ``epsilon`` of the best achievable: first
the smallest deep count n1 treating (n2, n3) as a pooled remainder, then
the smallest n2 given n1. Deep codes are the expensive ones (their head has
the largest fully connected layer), so minimizing n1 first minimizes size.

Each phase is a bisection over an achievability predicate ("some count
<= m reaches the quality budget"), which is monotone by construction, with
quality probes memoized. Probes may be expensive (short proxy trainings in
real use), so the caller's quality_fn should cache if called repeatedly.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable, NamedTuple

from .errors import ValidationError


class SplitResult(NamedTuple):
    n1: int
    n2: int
    n3: int


@dataclass(frozen=True)
class SplitSearchConfig:
    total_codes: int = 18
    epsilon: float = 0.01
    tradeoff_lambda: float = 0.0
    quality_fn: Callable[[int, int, int], float] = None
    size_fn: Callable[[int, int, int], float] | None = None

    def __post_init__(self):
        if self.total_codes < 3:
            raise ValidationError(f"total_codes must be >= 3, got {self.total_codes}")
        if self.epsilon < 0:
            raise ValidationError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.quality_fn is None:
            raise ValidationError("quality_fn is required")


class NonMonotoneQualityWarning(UserWarning):
    """The measured quality landscape is not unimodal along a search axis."""


def _is_unimodal(values: list[float]) -> bool:
    rising = True
    for prev, cur in zip(values, values[1:]):
        if cur > prev and not rising:
            return False
        if cur < prev:
            rising = False
    return True


def search_latent_split(cfg: SplitSearchConfig) -> SplitResult:
    """Two staged bisections; returns the (n1, n2, n3) assignment.

    Warns with NonMonotoneQualityWarning when the probed quality profile is
    not unimodal (the regime where a plain binary search over raw quality
    would be unreliable); the returned answer still honors the epsilon
    budget against the probed global best.
    """
    total = cfg.total_codes
    memo: dict[tuple[int, int, int], float] = {}

    def q(n1: int, n2: int, n3: int) -> float:
        key = (n1, n2, n3)
        if key not in memo:
            memo[key] = float(cfg.quality_fn(n1, n2, n3))
        return memo[key]

    def best_given_n1(n1: int) -> float:
        return max(q(n1, n2, total - n1 - n2) for n2 in range(total - n1 + 1))

    profile_n1 = [best_given_n1(n1) for n1 in range(total + 1)]
    q_best = max(profile_n1)
    threshold = q_best - cfg.epsilon * abs(q_best)

    def first_true(limit: int, achievable: Callable[[int], bool]) -> int:
        lo, hi = 0, limit  # invariant: achievable(hi) is true
        while lo < hi:
            mid = (lo + hi) // 2
            if achievable(mid):
                hi = mid
            else:
                lo = mid + 1
        return lo

    n1 = first_true(total, lambda m: any(v >= threshold for v in profile_n1[: m + 1]))

    profile_n2 = [q(n1, n2, total - n1 - n2) for n2 in range(total - n1 + 1)]
    n2 = first_true(
        total - n1, lambda m: any(v >= threshold for v in profile_n2[: m + 1])
    )
    n3 = total - n1 - n2

    if not (_is_unimodal(profile_n1) and _is_unimodal(profile_n2)):
        warnings.warn(
            "quality profile is not unimodal along the search axes; the split "
            "search result may not be meaningful for this quality function",
            NonMonotoneQualityWarning,
            stacklevel=2,
        )
    return SplitResult(n1, n2, n3)
