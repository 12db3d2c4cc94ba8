"""Coalition, Sybil, and publisher-validator collusion checks.

The coalition transform replaces a set of publishers with one merged
publisher owning the union of their reports; member actions map to the
merged action (union of published sets, pointwise sum of bribe schedules).
Report identities (ids, digests) are preserved, so a seeded trace of the
transformed game realizes the same values as the original and the revenue
identities hold exactly, not just in expectation.

The Sybil check runs the deviation sweep on a split configuration: if the
fresh identities had a jointly profitable deviation, the original publisher
would have had one too.

The publisher-validator collusion check grants the coalition the strongest
threat model: the members see the step-1 random string before acting and
optimize jointly with the step-1 validator over every published subset and
every candidate inclusion vector, with side payments internal.  Skipping is
valued at the members' closed-form continuation share.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Optional, Sequence

from ..bribes import BribeSchedule
from ..core import PublisherId, Report, derive_seed, is_dummy
from ..game import (
    EpochRandomness,
    GameConfig,
    PublisherAction,
    PublisherStrategy,
    StepContext,
    _table_value_fn,
    honest_profile,
    play_epoch,
    reformulate_inclusion,
    step_value_table,
)
from ..rvalue import rallpub_closed_form
from .bestresponse import ActionGrid, honest_inclusion_vector, pivotal_grid
from .spne import (
    DeviationEstimate,
    deviation_entries,
    enforce_desk_scale,
    sweep_publisher_deviations,
)


@dataclass(frozen=True)
class CoalitionMapping:
    """How identities and actions of the original game map into the merged one."""

    members: tuple[PublisherId, ...]
    merged_pid: PublisherId
    pid_map: dict[PublisherId, PublisherId]

    def map_actions(
        self, actions: Mapping[PublisherId, PublisherAction]
    ) -> dict[PublisherId, PublisherAction]:
        merged_published: set[Report] = set()
        merged_bribe = BribeSchedule()
        out: dict[PublisherId, PublisherAction] = {}
        for pid in sorted(actions):
            action = actions[pid]
            if pid in self.members:
                merged_published.update(action.published)
                merged_bribe = merged_bribe + action.bribe
            else:
                out[self.pid_map[pid]] = action
        out[self.merged_pid] = PublisherAction(
            published=frozenset(merged_published), bribe=merged_bribe
        )
        return out


class MergedStrategy:
    """Runs the member strategies and merges their actions."""

    def __init__(
        self,
        mapping: CoalitionMapping,
        member_reports: dict[PublisherId, frozenset[Report]],
        member_strategies: Mapping[PublisherId, PublisherStrategy],
    ) -> None:
        self.mapping = mapping
        self.member_reports = member_reports
        self.member_strategies = member_strategies

    def act(self, step, own_reports, history):
        by_id = {r.id: r for r in own_reports}
        merged_published: set[Report] = set()
        merged_bribe = BribeSchedule()
        for pid in self.mapping.members:
            mine = frozenset(
                by_id[r.id] for r in self.member_reports[pid] if r.id in by_id
            )
            action = self.member_strategies[pid].act(step, mine, history)
            merged_published.update(action.published)
            merged_bribe = merged_bribe + action.bribe
        return PublisherAction(frozenset(merged_published), merged_bribe)


def coalition_transform(
    cfg: GameConfig, members: Sequence[PublisherId]
) -> tuple[GameConfig, CoalitionMapping]:
    """Merged-game config plus the identity/action mapping."""
    members = tuple(sorted(set(members)))
    if not members:
        raise ValueError("coalition needs at least one member")
    known = {pid for pid, _ in cfg.publishers}
    if not set(members) <= known:
        raise ValueError("coalition members outside the publisher set")

    ordered: list[tuple[PublisherId, int]] = []
    pid_map: dict[PublisherId, PublisherId] = {}
    merged_count = sum(dict(cfg.publishers)[pid] for pid in members)
    next_pid = 0
    merged_pid: Optional[PublisherId] = None
    for pid, count in cfg.publishers:
        if pid in members:
            if merged_pid is None:
                merged_pid = next_pid
                ordered.append((next_pid, merged_count))
                next_pid += 1
            pid_map[pid] = merged_pid
        else:
            ordered.append((next_pid, count))
            pid_map[pid] = next_pid
            next_pid += 1
    assert merged_pid is not None

    roster = tuple(r.with_owner(pid_map[r.owner]) for r in cfg.roster())
    merged_cfg = replace(
        cfg, publishers=tuple(ordered), roster_override=roster
    )
    return merged_cfg, CoalitionMapping(
        members=members, merged_pid=merged_pid, pid_map=pid_map
    )


@dataclass
class TraceComparison:
    traces: int
    max_member_sum_error: float
    max_other_error: float
    max_validator_error: float

    @property
    def exact(self) -> bool:
        return (
            self.max_member_sum_error == 0.0
            and self.max_other_error == 0.0
            and self.max_validator_error == 0.0
        )


def compare_coalition_traces(
    cfg: GameConfig,
    members: Sequence[PublisherId],
    strategies: Mapping[PublisherId, PublisherStrategy],
    traces: int,
    seed: int,
    validator_strategy=None,
) -> TraceComparison:
    """Replay seeded traces in both games and diff the revenue identities."""
    merged_cfg, mapping = coalition_transform(cfg, members)
    member_reports = {pid: cfg.reports_of(pid) for pid in mapping.members}
    merged_strategies: dict[PublisherId, PublisherStrategy] = {}
    for pid, _ in cfg.publishers:
        if pid in mapping.members:
            merged_strategies[mapping.merged_pid] = MergedStrategy(
                mapping, member_reports, strategies
            )
        else:
            merged_strategies[mapping.pid_map[pid]] = strategies[pid]

    worst_members = 0.0
    worst_others = 0.0
    worst_validator = 0.0
    for trace in range(traces):
        trial_seed = derive_seed(seed, "merged-trace", trace)
        a = play_epoch(cfg.with_seed(trial_seed), strategies, validator_strategy)
        b = play_epoch(
            merged_cfg.with_seed(trial_seed), merged_strategies, validator_strategy
        )
        member_sum = sum(a.publisher_revenue[pid] for pid in mapping.members)
        worst_members = max(
            worst_members, abs(member_sum - b.publisher_revenue[mapping.merged_pid])
        )
        for pid, _ in cfg.publishers:
            if pid in mapping.members:
                continue
            worst_others = max(
                worst_others,
                abs(a.publisher_revenue[pid] - b.publisher_revenue[mapping.pid_map[pid]]),
            )
        for step, revenue in a.validator_revenue.items():
            worst_validator = max(
                worst_validator, abs(revenue - b.validator_revenue.get(step, math.nan))
            )
        if a.termination_step != b.termination_step:
            worst_validator = math.inf
    return TraceComparison(
        traces=traces,
        max_member_sum_error=worst_members,
        max_other_error=worst_others,
        max_validator_error=worst_validator,
    )


def sybil_split_config(
    cfg: GameConfig, j: PublisherId, partition: Sequence[int]
) -> tuple[GameConfig, tuple[PublisherId, ...]]:
    """Split publisher ``j``'s reports across fresh identities.

    Report ids and digests are untouched; only ownership labels move, so a
    seeded trace realizes identical values.
    """
    partition = tuple(int(x) for x in partition)
    counts = dict(cfg.publishers)
    if j not in counts:
        raise ValueError(f"unknown publisher {j}")
    if any(x < 0 for x in partition) or sum(partition) != counts[j]:
        raise ValueError(
            f"partition {partition} does not sum to publisher {j}'s {counts[j]} reports"
        )

    ordered: list[tuple[PublisherId, int]] = []
    pid_map: dict[PublisherId, PublisherId] = {}
    identities: list[PublisherId] = []
    next_pid = 0
    for pid, count in cfg.publishers:
        if pid == j:
            for share in partition:
                ordered.append((next_pid, share))
                identities.append(next_pid)
                next_pid += 1
        else:
            ordered.append((next_pid, count))
            pid_map[pid] = next_pid
            next_pid += 1

    roster: list[Report] = []
    remaining = list(partition)
    identity_iter = 0
    for report in cfg.roster():
        if report.owner == j:
            while identity_iter < len(remaining) and remaining[identity_iter] == 0:
                identity_iter += 1
            roster.append(report.with_owner(identities[identity_iter]))
            remaining[identity_iter] -= 1
        else:
            roster.append(report.with_owner(pid_map[report.owner]))
    split_cfg = replace(
        cfg, publishers=tuple(ordered), roster_override=tuple(roster)
    )
    return split_cfg, tuple(identities)


@dataclass
class SybilReport:
    holds: bool
    honest_exact: bool
    baseline: float
    best_deviation: Optional[DeviationEstimate]

    def to_obj(self) -> dict:
        return {
            "holds": self.holds,
            "honest_split_exactly_equal": self.honest_exact,
            "honest_baseline": self.baseline,
            "best_deviation": self.best_deviation.to_obj() if self.best_deviation else None,
        }


def check_sybil_proofness(
    cfg: GameConfig,
    j: PublisherId,
    partition: Sequence[int],
    trials: int,
    seed: int,
    grid: Optional[ActionGrid] = None,
    eps_sigma: float = 3.0,
) -> SybilReport:
    """No joint deviation of the split identities may beat ``j``'s honest play."""
    grid = grid or pivotal_grid(cfg.spec)
    enforce_desk_scale(cfg, grid)
    split_cfg, identities = sybil_split_config(cfg, j, partition)

    # Relabeling identities must not change a single trace.
    honest_exact = True
    for trace in range(min(200, trials)):
        trial_seed = derive_seed(seed, "sybil", trace)
        a = play_epoch(cfg.with_seed(trial_seed), honest_profile(cfg))
        b = play_epoch(split_cfg.with_seed(trial_seed), honest_profile(split_cfg))
        combined = sum(b.publisher_revenue[p] for p in identities)
        if combined != a.publisher_revenue[j]:
            honest_exact = False
            break

    family = tuple(p for p in identities if dict(split_cfg.publishers)[p] > 0)
    groups = {family} | {(p,) for p in family if len(family) > 1}
    entries = [
        e
        for e in deviation_entries(split_cfg, grid, include_coalitions=True)
        if e.participants in groups
    ]
    results = sweep_publisher_deviations(split_cfg, grid, entries, trials, seed)
    estimates = [r.estimate(eps_sigma) for r in results]
    violations = [e for e in estimates if e.profitable]
    best = max(violations, key=lambda e: e.delta, default=None)
    if best is None and estimates:
        best = max(estimates, key=lambda e: e.delta)

    baseline = rallpub_closed_form(cfg.spec, cfg.total_reports) * (
        dict(cfg.publishers)[j] / cfg.total_reports
    )
    return SybilReport(
        holds=honest_exact and not violations,
        honest_exact=honest_exact,
        baseline=baseline,
        best_deviation=best,
    )


@dataclass
class CollusionReport:
    holds: bool
    trials: int
    honest_mean: float
    best_deviation_mean: float
    pointwise_violations: int
    grid_actions: int

    def to_obj(self) -> dict:
        return {
            "holds": self.holds,
            "trials": self.trials,
            "honest_combined_mean": self.honest_mean,
            "best_deviation_combined_mean": self.best_deviation_mean,
            "pointwise_violations": self.pointwise_violations,
            "grid_actions": self.grid_actions,
        }


def check_pub_val_collusion(
    cfg: GameConfig,
    members: Sequence[PublisherId],
    trials: int,
    seed: int,
    grid: Optional[ActionGrid] = None,
    tolerance: float = 1e-9,
) -> CollusionReport:
    """Members plus the step-1 validator, with the string revealed up front.

    Per realized string the coalition's best joint action (published subset
    of member reports, any candidate inclusion vector over what is then
    published, or an empty block cashing the members' continuation share)
    must not beat the honest combined revenue.
    """
    grid = grid or pivotal_grid(cfg.spec)
    enforce_desk_scale(cfg, grid)
    members = tuple(sorted(set(members)))
    member_reports: set[Report] = set()
    for pid in members:
        member_reports |= cfg.reports_of(pid)
    other_reports = [r for r in cfg.roster() if r.owner not in members]
    member_ids = {r.id for r in member_reports}
    spec = cfg.spec

    continuation = 0.0
    if cfg.steps > 1 and cfg.total_reports > 0:
        continuation = (len(member_ids) / cfg.total_reports) * rallpub_closed_form(
            spec, cfg.total_reports
        )

    member_subsets: list[tuple[Report, ...]] = []
    members_sorted = sorted(member_reports, key=lambda r: r.id)
    for bits in range(1 << len(members_sorted)):
        member_subsets.append(
            tuple(r for i, r in enumerate(members_sorted) if bits >> i & 1)
        )

    honest_sum = 0.0
    best_sum = 0.0
    pointwise_violations = 0
    grid_actions = 0

    for trial in range(trials):
        trial_cfg = cfg.with_seed(derive_seed(seed, "pubval", trial))
        randomness = EpochRandomness.of(trial_cfg)
        values = step_value_table(trial_cfg, randomness)[0]
        s = randomness.strings[0]
        value_fn = _table_value_fn(values, spec.r_min)
        ctx = StepContext(spec=spec, value_of=value_fn, s=s)

        pool = sorted(member_reports | set(other_reports), key=lambda r: r.id)
        honest_vec = honest_inclusion_vector(pool, ctx)
        honest = _combined_revenue(honest_vec, member_ids, values, spec.r_min)

        best = -math.inf
        count = 0
        for subset in member_subsets:
            published = sorted(set(subset) | set(other_reports), key=lambda r: r.id)
            count += 1  # the empty inclusion vector
            skip_value = continuation
            if skip_value > best:
                best = skip_value
            for raw in grid.candidate_vectors(published):
                if not raw:
                    continue
                vec = reformulate_inclusion(raw, s, spec, value_fn=value_fn)
                count += 1
                combined = _combined_revenue(vec, member_ids, values, spec.r_min)
                if combined > best:
                    best = combined
        grid_actions = count
        honest_sum += honest
        best_sum += best
        if best > honest + tolerance:
            pointwise_violations += 1

    honest_mean = honest_sum / trials
    best_mean = best_sum / trials
    return CollusionReport(
        holds=pointwise_violations == 0 and best_mean <= honest_mean + tolerance,
        trials=trials,
        honest_mean=honest_mean,
        best_deviation_mean=best_mean,
        pointwise_violations=pointwise_violations,
        grid_actions=grid_actions,
    )


def _combined_revenue(
    vec, member_ids: set[int], values: dict[int, float], r_min: float
) -> float:
    """Member step revenue plus validator contract reward, bribes internal."""
    vec = tuple(vec)
    if not vec:
        return 0.0
    first = vec[0]
    total = 0.0
    if not is_dummy(first) and first.id in member_ids:
        second_value = values[vec[1].id] if len(vec) > 1 and not is_dummy(vec[1]) else r_min
        total += values[first.id] - second_value
    if len(vec) == 2:
        total += values[vec[1].id] if not is_dummy(vec[1]) else r_min
    return total
