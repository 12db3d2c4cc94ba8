"""Sequential reporting game: strategies, utilities, epoch play-out.

Each step has two phases.  Publishers move first (a published subset of
their reports plus a bribe schedule), then the step's validator picks an
ordered inclusion vector.  The epoch ends at the first non-empty block.

Validator actions are analyzed in *reformulated* form: whenever a non-empty
vector is not a well-ordered pair above the floor, a dummy report worth
exactly ``r_min`` is inserted at the second position.  Under that encoding
the validator is paid the second entry's value iff the vector has exactly
two entries, and the first entry's owner is paid the gap between the first
two entries; both match the settlement branches of the protocol exactly.

Utilities:

* validator --  second entry's value (if exactly two entries) plus all
  bribes evaluated at the realized vector;
* publisher -- the gap (first minus second entry value) when her report
  leads the vector, minus her own bribe at the realized vector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Mapping, Optional, Protocol, Sequence

from .bribes import ZERO_BRIBE, BribeSchedule, VectorKey, vector_key
from .core import (
    DUMMY,
    Block,
    Money,
    PublisherId,
    RandomString,
    Report,
    ReportOrDummy,
    ValidatorKeys,
    derive_beacon,
    derive_seed,
    derive_validator_keys,
    is_dummy,
    oracle_digest,
    report_payload_digest,
    vrf_generate,
)
from .protocol import EpochConfig, RewardLedger, ValueFn, process_block
from .rvalue import MonteCarloEstimate, RandomValueSpec, rv_eval


@dataclass(frozen=True)
class PublisherAction:
    """One step's move: the published subset plus a bribe schedule."""

    published: frozenset[Report]
    bribe: BribeSchedule


def honest_action(reports: frozenset[Report]) -> PublisherAction:
    return PublisherAction(published=reports, bribe=ZERO_BRIBE)


@dataclass(frozen=True)
class StepContext:
    """Per-step valuation handed to validator strategies."""

    spec: RandomValueSpec
    value_of: ValueFn
    s: RandomString

    def value(self, entry: ReportOrDummy) -> Money:
        return self.value_of(entry, self.s)


class PublisherStrategy(Protocol):
    def act(
        self, step: int, own_reports: frozenset[Report], history: tuple["StepRecord", ...]
    ) -> PublisherAction: ...


class ValidatorStrategy(Protocol):
    def include(
        self,
        step: int,
        actions: Mapping[PublisherId, PublisherAction],
        ctx: StepContext,
    ) -> Sequence[ReportOrDummy]: ...


class HonestPublisher:
    """Publishes everything, never bribes."""

    def act(self, step, own_reports, history):
        return honest_action(own_reports)


class HonestValidator:
    """Implements the protocol inclusion rule."""

    def include(self, step, actions, ctx):
        published = published_union(actions)
        ranked = sorted(
            published,
            key=lambda r: (-ctx.value(r), _tie_digest(r), r.id),
        )
        if not ranked:
            return ()
        chosen = [ranked[0]]
        if len(ranked) > 1 and ctx.value(ranked[1]) > ctx.spec.r_min:
            chosen.append(ranked[1])
        return tuple(chosen)


class SilentValidator:
    """Includes nothing, ever; used to probe non-progress play."""

    def include(self, step, actions, ctx):
        return ()


@lru_cache(maxsize=4096)
def _tie_digest(report: Report) -> bytes:
    return oracle_digest(report.payload_digest)


def published_union(actions: Mapping[PublisherId, PublisherAction]) -> list[Report]:
    merged: set[Report] = set()
    for action in actions.values():
        merged.update(action.published)
    return sorted(merged, key=lambda r: r.id)


def reformulate_inclusion(
    raw: Sequence[ReportOrDummy],
    s: RandomString,
    spec: RandomValueSpec,
    value_fn: Optional[ValueFn] = None,
) -> tuple[ReportOrDummy, ...]:
    """Canonical action encoding; idempotent.

    Empty stays empty; a well-ordered real pair above the floor stays as is;
    a vector whose second entry is already the dummy is already canonical;
    anything else gets the dummy inserted at the second position.
    """
    vec = tuple(raw)
    if not vec:
        return ()
    for i, entry in enumerate(vec):
        if is_dummy(entry) and i != 1:
            raise ValueError("dummy sentinel may only appear at position 2")
    if len(vec) >= 2 and is_dummy(vec[1]):
        return vec
    if len(vec) == 2:
        value_of = value_fn or (lambda entry, ss: rv_eval(spec, entry, ss))
        v0, v1 = value_of(vec[0], s), value_of(vec[1], s)
        if v0 >= v1 and v1 > spec.r_min:
            return vec
    return (vec[0], DUMMY) + vec[1:]


def deformulate_inclusion(vec: Sequence[ReportOrDummy]) -> tuple[ReportOrDummy, ...]:
    """Strip the inserted dummy back out, recovering the literal block action."""
    vec = tuple(vec)
    if len(vec) >= 2 and is_dummy(vec[1]):
        return (vec[0],) + vec[2:]
    return vec


def validator_utility(
    inc: Sequence[ReportOrDummy],
    bribes: Sequence[BribeSchedule],
    s: RandomString,
    spec: RandomValueSpec,
    value_fn: Optional[ValueFn] = None,
) -> Money:
    """Contract reward (second entry value iff exactly two entries) plus bribes."""
    vec = tuple(inc)
    value_of = value_fn or (lambda entry, ss: rv_eval(spec, entry, ss))
    contract = value_of(vec[1], s) if len(vec) == 2 else 0.0
    key = vector_key(vec)
    return contract + math.fsum(schedule.amount(key, s) for schedule in bribes)


def publisher_step_revenue(
    j: PublisherId,
    action: PublisherAction,
    inc: Sequence[ReportOrDummy],
    s: RandomString,
    spec: RandomValueSpec,
    value_fn: Optional[ValueFn] = None,
) -> Money:
    """Winner's gap if j's report leads the vector, minus her bribe."""
    vec = tuple(inc)
    value_of = value_fn or (lambda entry, ss: rv_eval(spec, entry, ss))
    reward = 0.0
    if vec and not is_dummy(vec[0]) and vec[0] in action.published:
        runner_up = value_of(vec[1], s) if len(vec) > 1 else spec.r_min
        reward = value_of(vec[0], s) - runner_up
    return reward - action.bribe.amount(vector_key(vec), s)


@lru_cache(maxsize=256)
def _ownership_for(
    publishers: tuple[tuple[PublisherId, int], ...],
    roster: tuple[Report, ...],
) -> dict[PublisherId, frozenset[Report]]:
    out = {pid: set() for pid, _ in publishers}
    for report in roster:
        out[report.owner].add(report)
    return {pid: frozenset(reports) for pid, reports in out.items()}


@lru_cache(maxsize=256)
def _roster_for(publishers: tuple[tuple[PublisherId, int], ...]) -> tuple[Report, ...]:
    roster: list[Report] = []
    next_id = 0
    for owner, count in publishers:
        for _ in range(count):
            roster.append(Report(next_id, owner, report_payload_digest(next_id)))
            next_id += 1
    return tuple(roster)


@dataclass(frozen=True)
class GameConfig:
    """Static description of one game instance.

    Report budgets are fixed before play starts; the per-step beacons and
    validator keys all derive from the single seed, so a replay is
    bit-identical.  ``roster`` may be overridden with explicit reports (used
    by the coalition/Sybil transforms, which re-own reports while keeping
    their identities).
    """

    epoch: EpochConfig
    publishers: tuple[tuple[PublisherId, int], ...]
    seed: int
    roster_override: Optional[tuple[Report, ...]] = None

    def __post_init__(self) -> None:
        ids = [pid for pid, _ in self.publishers]
        if ids != list(range(len(ids))):
            raise ValueError("publisher ids must be dense 0..n-1")
        if any(count < 0 for _, count in self.publishers):
            raise ValueError("report counts must be >= 0")
        if self.roster_override is not None:
            counts = {pid: 0 for pid, _ in self.publishers}
            for report in self.roster_override:
                if report.owner not in counts:
                    raise ValueError("roster owner outside publisher set")
                counts[report.owner] += 1
            if counts != dict(self.publishers):
                raise ValueError("roster does not match declared report counts")

    @property
    def spec(self) -> RandomValueSpec:
        return self.epoch.spec

    @property
    def n_publishers(self) -> int:
        return len(self.publishers)

    @property
    def steps(self) -> int:
        return self.epoch.window_length

    @property
    def total_reports(self) -> int:
        return sum(count for _, count in self.publishers)

    def roster(self) -> tuple[Report, ...]:
        if self.roster_override is not None:
            return self.roster_override
        return _roster_for(self.publishers)

    def reports_of(self, j: PublisherId) -> frozenset[Report]:
        return _ownership_for(self.publishers, self.roster())[j]

    def beacon(self, step: int) -> bytes:
        return derive_beacon(self.seed, step)

    def validator_keys(self, step: int) -> ValidatorKeys:
        return derive_validator_keys(self.seed, step)

    def with_seed(self, seed: int) -> "GameConfig":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class EpochRandomness:
    """All beacon/VRF material of one epoch, precomputed once per trial."""

    beacons: tuple[bytes, ...]
    keys: tuple[ValidatorKeys, ...]
    strings: tuple[RandomString, ...]

    @classmethod
    def of(cls, cfg: GameConfig) -> "EpochRandomness":
        beacons, keys, strings = [], [], []
        for step in range(1, cfg.steps + 1):
            beacon = cfg.beacon(step)
            kp = cfg.validator_keys(step)
            beacons.append(beacon)
            keys.append(kp)
            strings.append(vrf_generate(beacon, kp))
        return cls(tuple(beacons), tuple(keys), tuple(strings))


def step_value_table(cfg: GameConfig, randomness: EpochRandomness) -> tuple[dict[int, float], ...]:
    """Realized value of every report at every step (id -> value)."""
    roster = cfg.roster()
    spec = cfg.spec
    return tuple(
        {r.id: rv_eval(spec, r, s) for r in roster} for s in randomness.strings
    )


def _table_value_fn(table: dict[int, float], r_min: float) -> ValueFn:
    def value_of(entry: ReportOrDummy, s: RandomString) -> float:
        if is_dummy(entry):
            return r_min
        return table[entry.id]

    return value_of


@dataclass
class StepRecord:
    step: int
    block: Block
    ledger: RewardLedger
    actions: dict[PublisherId, PublisherAction]
    reformulated: VectorKey
    validator_utility: Money
    publisher_revenues: dict[PublisherId, Money]


@dataclass
class EpochOutcome:
    steps: list[StepRecord]
    publisher_revenue: dict[PublisherId, Money]
    validator_revenue: dict[int, Money]
    termination_step: Optional[int]

    @property
    def included_report_count(self) -> int:
        return sum(
            sum(1 for entry, _bid in record.block.inclusions if not is_dummy(entry))
            for record in self.steps
        )


def play_epoch(
    cfg: GameConfig,
    publisher_strategies: Mapping[PublisherId, PublisherStrategy],
    validator_strategy: Optional[ValidatorStrategy] = None,
    *,
    start_step: int = 1,
    stop_after: Optional[int] = None,
    randomness: Optional[EpochRandomness] = None,
    values: Optional[tuple[dict[int, float], ...]] = None,
    keep_steps: bool = True,
    track_history: bool = True,
) -> EpochOutcome:
    """Run the window from ``start_step``; stop at the first non-empty block.

    ``stop_after`` truncates the run after that step even if no block slot
    was filled (the deviation sweep evaluates single steps and values the
    rest of the window in closed form).  A strategy publishing outside its
    budget, or placing the dummy anywhere but the second slot, is a harness
    bug and raises immediately.
    """
    validator = validator_strategy or HonestValidator()
    missing = [pid for pid, _ in cfg.publishers if pid not in publisher_strategies]
    if missing:
        raise ValueError(f"no strategy for publishers {missing}")

    spec = cfg.spec
    roster = cfg.roster()
    own = _ownership_for(cfg.publishers, roster)
    totals = {pid: 0.0 for pid, _ in cfg.publishers}
    validator_revenue: dict[int, Money] = {}
    records: list[StepRecord] = []
    history: tuple[StepRecord, ...] = ()
    termination: Optional[int] = None

    for step in range(start_step, cfg.steps + 1):
        # Randomness and values are derived lazily so an epoch that ends at
        # step 1 (the honest norm) never pays for the rest of the window.
        if randomness is not None:
            beacon = randomness.beacons[step - 1]
            keys = randomness.keys[step - 1]
            s = randomness.strings[step - 1]
        else:
            beacon = cfg.beacon(step)
            keys = cfg.validator_keys(step)
            s = vrf_generate(beacon, keys)
        if values is not None:
            table = values[step - 1]
        else:
            table = {r.id: rv_eval(spec, r, s) for r in roster}
        value_fn = _table_value_fn(table, spec.r_min)
        ctx = StepContext(spec=spec, value_of=value_fn, s=s)

        actions: dict[PublisherId, PublisherAction] = {}
        for pid, _count in cfg.publishers:
            action = publisher_strategies[pid].act(step, own[pid], history)
            if not action.published <= own[pid]:
                raise ValueError(f"publisher {pid} published reports outside her budget")
            actions[pid] = action

        raw = tuple(validator.include(step, actions, ctx))
        pool = set(published_union(actions))
        seen: set[int] = set()
        for entry in raw:
            if is_dummy(entry):
                continue
            if entry not in pool:
                raise ValueError("validator included an unpublished report")
            if entry.id in seen:
                raise ValueError("validator included a report twice")
            seen.add(entry.id)

        reform = reformulate_inclusion(raw, s, spec, value_fn=value_fn)
        literal = deformulate_inclusion(reform)
        block = Block(
            index=step,
            beacon=beacon,
            random_string=s,
            inclusions=tuple((entry, 0.0) for entry in literal),
        )
        ledger = process_block(block, keys.pk, spec, value_fn=value_fn)

        bribes = [
            actions[pid].bribe for pid, _ in cfg.publishers if not actions[pid].bribe.is_zero
        ]
        v_util = validator_utility(reform, bribes, s, spec, value_fn=value_fn)
        revenues = {
            pid: publisher_step_revenue(pid, actions[pid], reform, s, spec, value_fn=value_fn)
            for pid, _ in cfg.publishers
        }
        for pid, revenue in revenues.items():
            totals[pid] += revenue
        validator_revenue[step] = v_util

        if keep_steps or track_history:
            record = StepRecord(
                step=step,
                block=block,
                ledger=ledger,
                actions=actions,
                reformulated=vector_key(reform),
                validator_utility=v_util,
                publisher_revenues=revenues,
            )
            if keep_steps:
                records.append(record)
            if track_history:
                history = history + (record,)

        if literal:
            termination = step
            break
        if stop_after is not None and step >= stop_after:
            break

    return EpochOutcome(
        steps=records,
        publisher_revenue=totals,
        validator_revenue=validator_revenue,
        termination_step=termination,
    )


@dataclass
class SimulationSummary:
    trials: int
    publisher: dict[PublisherId, MonteCarloEstimate]
    validator_step1: MonteCarloEstimate
    progress_failures: int
    efficiency_failures: int
    termination_histogram: dict[str, int]

    def fairness_ratios(self) -> dict[PublisherId, float]:
        total = math.fsum(est.mean for est in self.publisher.values())
        if total == 0:
            return {pid: 0.0 for pid in self.publisher}
        return {pid: est.mean / total for pid, est in self.publisher.items()}


def simulate_epochs(
    cfg: GameConfig,
    publisher_strategies: Mapping[PublisherId, PublisherStrategy],
    validator_strategy: Optional[ValidatorStrategy] = None,
    *,
    trials: int,
    seed: int,
) -> SimulationSummary:
    """Monte Carlo over epoch randomness with per-trial derived sub-seeds."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    pids = [pid for pid, _ in cfg.publishers]
    sums = {pid: [] for pid in pids}
    sumsqs = {pid: [] for pid in pids}
    v_sums: list[float] = []
    v_sumsqs: list[float] = []
    progress_failures = 0
    efficiency_failures = 0
    histogram: dict[str, int] = {}

    for trial in range(trials):
        trial_cfg = cfg.with_seed(derive_seed(seed, "trial", trial))
        outcome = play_epoch(
            trial_cfg, publisher_strategies, validator_strategy, keep_steps=False
        )
        for pid in pids:
            x = outcome.publisher_revenue[pid]
            sums[pid].append(x)
            sumsqs[pid].append(x * x)
        v = outcome.validator_revenue.get(1, 0.0)
        v_sums.append(v)
        v_sumsqs.append(v * v)
        if outcome.termination_step != 1:
            progress_failures += 1
        if outcome.included_report_count > 2:
            efficiency_failures += 1
        key = str(outcome.termination_step)
        histogram[key] = histogram.get(key, 0) + 1

    def estimate(xs: list[float], x2s: list[float]) -> MonteCarloEstimate:
        mean = math.fsum(xs) / trials
        var = max(math.fsum(x2s) / trials - mean * mean, 0.0)
        se = math.sqrt(var / trials) if trials > 1 else float("inf")
        return MonteCarloEstimate(mean=mean, std_error=se, trials=trials)

    return SimulationSummary(
        trials=trials,
        publisher={pid: estimate(sums[pid], sumsqs[pid]) for pid in pids},
        validator_step1=estimate(v_sums, v_sumsqs),
        progress_failures=progress_failures,
        efficiency_failures=efficiency_failures,
        termination_histogram=dict(sorted(histogram.items())),
    )


def honest_profile(cfg: GameConfig) -> dict[PublisherId, PublisherStrategy]:
    return {pid: HonestPublisher() for pid, _ in cfg.publishers}


def expected_publisher_utility(
    cfg: GameConfig,
    publisher_strategies: Mapping[PublisherId, PublisherStrategy],
    j: PublisherId,
    trials: int,
    seed: int,
    validator_strategy: Optional[ValidatorStrategy] = None,
) -> Money:
    """Monte Carlo mean of publisher ``j``'s whole-epoch revenue."""
    summary = simulate_epochs(
        cfg, publisher_strategies, validator_strategy, trials=trials, seed=seed
    )
    return summary.publisher[j].mean


def winner_histogram(
    cfg: GameConfig, trials: int, seed: int, start_step: int = 1
) -> dict[int, int]:
    """How often each report wins under all-honest play (id -> count)."""
    counts = {r.id: 0 for r in cfg.roster()}
    strategies = honest_profile(cfg)
    for trial in range(trials):
        trial_cfg = cfg.with_seed(derive_seed(seed, "trial", trial))
        outcome = play_epoch(
            trial_cfg, strategies, start_step=start_step, keep_steps=True
        )
        if outcome.termination_step is None:
            continue
        record = outcome.steps[-1]
        first = record.block.inclusions[0][0]
        if not is_dummy(first):
            counts[first.id] += 1
    return counts
