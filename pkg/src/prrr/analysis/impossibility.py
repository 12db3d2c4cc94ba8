"""Constructive demonstration that symmetric rewards are bribeable.

The baseline here is the common winner-takes-all design: a fixed bounty to
the publisher of the single included report and a fixed payment to the
validator, identical whichever report is included (symmetric rewards), with
one report per block.  Against it, an excluded publisher can capture a
winner's revenue: she offers, on the swapped inclusion vector under the
winning string, both original bribes plus a third of the winner's revenue,
and spreads another third over the remaining strings to pin the validator's
choices there.  The validator's unique best response flips to the swapped
vector and the deviator nets a strictly positive expected gain.

With ``n_strings == 1`` the spread term is vacuous and the gain is two
thirds of the seized revenue; otherwise it is that revenue divided by three
times the number of strings.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from typing import Optional

from ..bribes import VectorKey
from ..core import RandomString, Report, oracle_digest, oracle_uniform, report_payload_digest


@dataclass(frozen=True)
class FixedBountyBaseline:
    """Symmetric reference mechanism: one included report, fixed payouts."""

    r_fix: float
    v: float

    def __post_init__(self) -> None:
        if self.r_fix < 0:
            raise ValueError("bounty must be non-negative")
        if self.v <= 0:
            raise ValueError(
                "the baseline validator payment must be positive, otherwise the "
                "mechanism already violates progress"
            )


@dataclass
class ImpossibilityReport:
    n_publishers: int
    baseline: FixedBountyBaseline
    n_strings: int
    verdict: str
    winner: Optional[int]
    deviator: Optional[int]
    seized_revenue: float
    expected_gain: float
    predicted_gain: float
    swap_uniquely_optimal: bool
    per_string_choice_unchanged: bool
    bribe_table: dict

    def to_obj(self) -> dict:
        return {
            "n_publishers": self.n_publishers,
            "baseline": {"r_fix": self.baseline.r_fix, "v": self.baseline.v},
            "n_strings": self.n_strings,
            "verdict": self.verdict,
            "winner": self.winner,
            "deviator": self.deviator,
            "seized_revenue": self.seized_revenue,
            "expected_gain": self.expected_gain,
            "predicted_gain": self.predicted_gain,
            "swap_uniquely_optimal": self.swap_uniquely_optimal,
            "per_string_choice_unchanged": self.per_string_choice_unchanged,
            "bribe_table": self.bribe_table,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), indent=2)


def _string_space(n_strings: int) -> list[RandomString]:
    return [
        RandomString(value=oracle_digest(b"demo-string" + i.to_bytes(8, "big")), proof=b"")
        for i in range(n_strings)
    ]


def _baseline_candidates(reports: list[Report]) -> list[tuple[Report, ...]]:
    out: list[tuple[Report, ...]] = [()]
    out.extend((r,) for r in reports)
    out.extend(itertools.permutations(reports, 2))
    return out


def _baseline_validator_reward(vec: tuple[Report, ...], baseline: FixedBountyBaseline) -> float:
    return baseline.v if len(vec) == 1 else 0.0


def _baseline_publisher_reward(
    vec: tuple[Report, ...], owner: int, baseline: FixedBountyBaseline
) -> float:
    if len(vec) == 1 and vec[0].owner == owner:
        return baseline.r_fix
    return 0.0


def _honest_choice(
    reports: list[Report], s: RandomString, baseline: FixedBountyBaseline
) -> tuple[Report, ...]:
    """Best response to zero bribes; ties broken by ascending report-string hash."""
    best = max(
        _baseline_candidates(reports),
        key=lambda vec: (
            _baseline_validator_reward(vec, baseline),
            tuple(-oracle_uniform(r.payload_digest + s.value) for r in vec),
        ),
    )
    return best


def impossibility_demo(
    n_publishers: int,
    baseline: FixedBountyBaseline,
    s_space_size: int,
) -> ImpossibilityReport:
    """Build and verify the bribery deviation against the symmetric baseline."""
    if n_publishers < 2:
        raise ValueError("need at least two publishers so someone is excluded")
    if not 1 <= s_space_size <= 8:
        raise ValueError("string space must have between 1 and 8 explicit strings")

    reports = [Report(i, i, report_payload_digest(i)) for i in range(n_publishers)]
    strings = _string_space(s_space_size)

    honest_choice = {
        i: _honest_choice(reports, s, baseline) for i, s in enumerate(strings)
    }
    if any(len(vec) != 1 for vec in honest_choice.values()):
        raise RuntimeError("baseline violates progress: empty honest inclusion")

    if baseline.r_fix == 0:
        return ImpossibilityReport(
            n_publishers=n_publishers,
            baseline=baseline,
            n_strings=s_space_size,
            verdict="zero_revenue_consistent",
            winner=None,
            deviator=None,
            seized_revenue=0.0,
            expected_gain=0.0,
            predicted_gain=0.0,
            swap_uniquely_optimal=False,
            per_string_choice_unchanged=True,
            bribe_table={},
        )

    star = 0
    s_star = strings[star]
    winner = honest_choice[star][0]
    seized = baseline.r_fix  # the winner's revenue under zero bribes
    deviator = next(r for r in reports if r.owner != winner.owner)
    swapped = (deviator,)

    # Deviation bribes: both original bribes (zero here) plus a third of the
    # seized revenue on the swapped vector at the winning string; the same
    # third spread evenly over the original choices at all other strings.
    bribe: dict[tuple[VectorKey, int], float] = {(vector_ids(swapped), star): seized / 3.0}
    if s_space_size > 1:
        spread = seized / (3.0 * (s_space_size - 1))
        for i in range(s_space_size):
            if i == star:
                continue
            bribe[(vector_ids(honest_choice[i]), i)] = spread

    def bribe_on(vec: tuple[Report, ...], i: int) -> float:
        return bribe.get((vector_ids(vec), i), 0.0)

    def validator_revenue(vec: tuple[Report, ...], i: int) -> float:
        return _baseline_validator_reward(vec, baseline) + bribe_on(vec, i)

    # (a) At the winning string the swap must be the unique best response.
    at_star = {
        vector_ids(vec): validator_revenue(vec, star) for vec in _baseline_candidates(reports)
    }
    swap_utility = at_star.pop(vector_ids(swapped))
    swap_unique = all(swap_utility > u for u in at_star.values())

    # (b) At every other string the original choice must stay uniquely best.
    others_unchanged = True
    for i in range(s_space_size):
        if i == star:
            continue
        utilities = {
            vector_ids(vec): validator_revenue(vec, i)
            for vec in _baseline_candidates(reports)
        }
        chosen = vector_ids(honest_choice[i])
        u_chosen = utilities.pop(chosen)
        if not all(u_chosen > u for u in utilities.values()):
            others_unchanged = False

    # (c) Expected revenue gain of the deviator over the string space.
    def deviator_revenue(vec: tuple[Report, ...], i: int) -> float:
        return _baseline_publisher_reward(vec, deviator.owner, baseline) - bribe_on(vec, i)

    honest_revenue = [
        _baseline_publisher_reward(honest_choice[i], deviator.owner, baseline)
        for i in range(s_space_size)
    ]
    deviated_choice = {
        i: (swapped if i == star else honest_choice[i]) for i in range(s_space_size)
    }
    deviated_revenue = [deviator_revenue(deviated_choice[i], i) for i in range(s_space_size)]
    gain = math.fsum(deviated_revenue) / s_space_size - math.fsum(honest_revenue) / s_space_size

    if s_space_size == 1:
        predicted = 2.0 * seized / 3.0
    else:
        predicted = seized / (3.0 * s_space_size)

    ok = swap_unique and others_unchanged and gain > 0
    return ImpossibilityReport(
        n_publishers=n_publishers,
        baseline=baseline,
        n_strings=s_space_size,
        verdict="profitable_deviation_found" if ok else "construction_failed",
        winner=winner.owner,
        deviator=deviator.owner,
        seized_revenue=seized,
        expected_gain=gain,
        predicted_gain=predicted,
        swap_uniquely_optimal=swap_unique,
        per_string_choice_unchanged=others_unchanged,
        bribe_table={
            f"string{i}:{'+'.join(map(str, key))}": amount
            for (key, i), amount in sorted(bribe.items(), key=lambda kv: kv[0][1])
        },
    )


def vector_ids(vec: tuple[Report, ...]) -> VectorKey:
    return tuple(r.id for r in vec)
