"""Random-value function families and their analysis.

Two families are supported:

* logarithmic -- ``r_min - ln(1 - H(.)) / lam``; the part above the floor is
  Exponential(lam), so the expected winner/runner-up gap is ``1/lam`` for any
  report count (memorylessness).
* polarized -- ``r_max`` with probability ``p``, else ``r_min``; the expected
  gap with N reports is ``N * p * (1-p)**(N-1) * (r_max - r_min)``.

Property verdicts (reward monotonicity, skipping resistance) come from the
closed forms, never from sampling: both properties are strict inequalities
and Monte Carlo noise must not flip them.  Monte Carlo estimators exist only
to cross-validate the closed forms.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .core import DUMMY_ID, Money, RandomString, ReportOrDummy, entry_id, oracle_uniform


@dataclass(frozen=True)
class LogarithmicSpec:
    lam: float
    r_min: Money

    def __post_init__(self) -> None:
        if not self.lam > 0:
            raise ValueError("logarithmic spec requires lam > 0")
        if self.r_min < 0:
            raise ValueError("r_min must be non-negative")


@dataclass(frozen=True)
class PolarizedSpec:
    p: float
    r_min: Money
    r_max: Money

    def __post_init__(self) -> None:
        if not 0 < self.p <= 1:
            raise ValueError("polarized spec requires 0 < p <= 1")
        if self.r_min < 0:
            raise ValueError("r_min must be non-negative")
        if not self.r_max > self.r_min:
            raise ValueError("polarized spec requires r_max > r_min")

    @property
    def spread(self) -> Money:
        return self.r_max - self.r_min


RandomValueSpec = Union[LogarithmicSpec, PolarizedSpec]


@dataclass(frozen=True)
class PropertyCheckConfig:
    """Knobs for the property checkers and their Monte Carlo cross-checks."""

    n_max: int = 100
    mc_trials: int = 100_000
    tolerance: float = 0.05
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_max < 1:
            raise ValueError("n_max must be >= 1")
        if self.mc_trials < 1:
            raise ValueError("mc_trials must be >= 1")
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")


def rv_eval(spec: RandomValueSpec, report: ReportOrDummy, s: RandomString) -> Money:
    """Value of a report under the realized random string.

    The dummy sentinel bypasses the oracle and is worth exactly ``r_min``.
    """
    if entry_id(report) == DUMMY_ID:
        return spec.r_min
    u = oracle_uniform(report.payload_digest + s.value)
    if isinstance(spec, LogarithmicSpec):
        # u < 1 by construction, so log1p(-u) is always finite.
        return spec.r_min - math.log1p(-u) / spec.lam
    return spec.r_max if u <= spec.p else spec.r_min


def rallpub_closed_form(spec: RandomValueSpec, n: int) -> Money:
    """Expected total publisher payout with ``n`` published reports.

    For ``n == 1`` this is the expected surplus of the single report over the
    floor, matching the succinct settlement case.
    """
    if n < 1:
        raise ValueError("report count must be >= 1")
    if isinstance(spec, LogarithmicSpec):
        return 1.0 / spec.lam
    return n * spec.p * (1.0 - spec.p) ** (n - 1) * spec.spread


def harmonic(n: int) -> float:
    """H_n by direct summation."""
    return math.fsum(1.0 / i for i in range(1, n + 1))


def expected_contract_cost(spec: RandomValueSpec, n: int) -> Money:
    """Expected highest value among ``n`` reports (floored at ``r_min``)."""
    if n < 1:
        raise ValueError("report count must be >= 1")
    if isinstance(spec, LogarithmicSpec):
        return spec.r_min + harmonic(n) / spec.lam
    return spec.r_min + (1.0 - (1.0 - spec.p) ** n) * spec.spread


@dataclass(frozen=True)
class MonteCarloEstimate:
    mean: float
    std_error: float
    trials: int

    def within(self, reference: float, n_sigma: float = 3.0) -> bool:
        return abs(self.mean - reference) <= n_sigma * self.std_error


_CHUNK = 100_000


def _sample_values(spec: RandomValueSpec, rng: np.random.Generator, rows: int, n: int) -> np.ndarray:
    u = rng.random((rows, n))
    if isinstance(spec, LogarithmicSpec):
        return spec.r_min - np.log1p(-u) / spec.lam
    return np.where(u <= spec.p, spec.r_max, spec.r_min)


def _mc_accumulate(spec, n, trials, seed, per_trial) -> MonteCarloEstimate:
    """Chunked Monte Carlo with fixed chunk boundaries for seed stability."""
    rng = np.random.default_rng(np.random.PCG64(seed & 0xFFFFFFFFFFFFFFFF))
    sums: list[float] = []
    sumsqs: list[float] = []
    done = 0
    while done < trials:
        rows = min(_CHUNK, trials - done)
        stat = per_trial(_sample_values(spec, rng, rows, n))
        sums.append(float(np.sum(stat)))
        sumsqs.append(float(np.sum(stat * stat)))
        done += rows
    total = math.fsum(sums)
    total_sq = math.fsum(sumsqs)
    mean = total / trials
    var = max(total_sq / trials - mean * mean, 0.0)
    se = math.sqrt(var / trials) if trials > 1 else float("inf")
    return MonteCarloEstimate(mean=mean, std_error=se, trials=trials)


def rallpub_monte_carlo_stats(
    spec: RandomValueSpec, n: int, trials: int, seed: int
) -> MonteCarloEstimate:
    """Empirical gap between the two highest values among ``n`` fresh reports.

    With a single report the runner-up slot is the dummy, i.e. ``r_min``.
    """
    if n < 1:
        raise ValueError("report count must be >= 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")

    if n == 1:
        def per_trial(values: np.ndarray) -> np.ndarray:
            return values[:, 0] - spec.r_min
    else:
        def per_trial(values: np.ndarray) -> np.ndarray:
            # After partitioning at n-2, that index holds the second-largest
            # and the last index holds the largest.
            top2 = np.partition(values, n - 2, axis=1)
            return top2[:, n - 1] - top2[:, n - 2]

    return _mc_accumulate(spec, n, trials, seed, per_trial)


def rallpub_monte_carlo(spec: RandomValueSpec, n: int, trials: int, seed: int) -> Money:
    return rallpub_monte_carlo_stats(spec, n, trials, seed).mean


def contract_cost_monte_carlo_stats(
    spec: RandomValueSpec, n: int, trials: int, seed: int
) -> MonteCarloEstimate:
    """Empirical E[max(highest value, r_min)] among ``n`` fresh reports."""
    if n < 1:
        raise ValueError("report count must be >= 1")
    if trials < 1:
        raise ValueError("trials must be >= 1")

    def per_trial(values: np.ndarray) -> np.ndarray:
        return np.maximum(values.max(axis=1), spec.r_min)

    return _mc_accumulate(spec, n, trials, seed, per_trial)


def contract_cost_monte_carlo(spec: RandomValueSpec, n: int, trials: int, seed: int) -> Money:
    return contract_cost_monte_carlo_stats(spec, n, trials, seed).mean


@dataclass(frozen=True)
class MonotonicityResult:
    holds: bool
    witness: Optional[tuple[int, int]]
    curve: tuple[float, ...]


@dataclass(frozen=True)
class SkippingResistanceResult:
    holds: bool
    witness: Optional[int]
    curve: tuple[float, ...]


def check_reward_monotonicity(
    spec: RandomValueSpec, cfg: PropertyCheckConfig
) -> MonotonicityResult:
    """Total payout must be non-decreasing in the report count (closed form).

    A pair only counts as a violation beyond 1e-9 relative slack: at the
    polarized boundary p == 1/N_max the last two curve points are equal in
    exact arithmetic and must not flip the verdict through float rounding.
    """
    curve = tuple(rallpub_closed_form(spec, n) for n in range(1, cfg.n_max + 1))
    for n in range(1, len(curve)):
        if curve[n] < curve[n - 1] and not math.isclose(
            curve[n], curve[n - 1], rel_tol=1e-9, abs_tol=1e-15
        ):
            return MonotonicityResult(holds=False, witness=(n, n + 1), curve=curve)
    return MonotonicityResult(holds=True, witness=None, curve=curve)


def check_skipping_resistance(
    spec: RandomValueSpec, cfg: PropertyCheckConfig
) -> SkippingResistanceResult:
    """Total payout must stay strictly below the floor ``r_min`` (closed form)."""
    curve = tuple(rallpub_closed_form(spec, n) for n in range(1, cfg.n_max + 1))
    for n, value in enumerate(curve, start=1):
        if not value < spec.r_min:
            return SkippingResistanceResult(holds=False, witness=n, curve=curve)
    return SkippingResistanceResult(holds=True, witness=None, curve=curve)


@dataclass(frozen=True)
class CrossCheckRow:
    n: int
    closed_form: float
    estimate: MonteCarloEstimate
    agrees: bool


def crosscheck_closed_forms(
    spec: RandomValueSpec,
    cfg: PropertyCheckConfig,
    grid: tuple[int, ...] = (1, 2, 3, 5, 10, 50),
    n_sigma: float = 3.0,
) -> list[CrossCheckRow]:
    """Validate the closed-form payout curve against sampling on a small grid."""
    rows = []
    for n in grid:
        est = rallpub_monte_carlo_stats(spec, n, cfg.mc_trials, cfg.seed + n)
        ref = rallpub_closed_form(spec, n)
        rows.append(CrossCheckRow(n, ref, est, est.within(ref, n_sigma)))
    return rows
