"""Grid-based equilibrium verification by exhaustive deviation sweep.

For every publisher (and optionally every publisher coalition acting as one
merged agent), for every step, the sweep plays one-shot deviations drawn
from the deviation library against otherwise-honest opponents, with the
step validator playing its grid best response.  Utility deltas come from
matched-seed pairs: the deviated run and the honest baseline share the
epoch randomness trial by trial, so the comparison is exact per seed and
only the expectation over strings is sampled.

The verdict is grid-relative: clearing the pivotal grid does not certify
the continuous-strategy equilibrium, and reports say so.  A violation, on
the other hand, is a genuine counterexample (or an implementation bug) and
is reported with its witness.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from ..bribes import vector_key
from ..core import DUMMY_ID, derive_seed
from ..game import (
    EpochRandomness,
    GameConfig,
    StepContext,
    _table_value_fn,
    honest_profile,
    play_epoch,
    reformulate_inclusion,
    step_value_table,
    validator_utility,
)
from ..rvalue import (
    PropertyCheckConfig,
    check_reward_monotonicity,
    check_skipping_resistance,
    rallpub_closed_form,
)
from .bestresponse import (
    ActionGrid,
    BestResponseValidator,
    honest_inclusion_vector,
    pivotal_grid,
)
from .deviations import (
    BribeToReorder,
    BribeToSkip,
    DeviationKind,
    WithholdSubset,
    describe,
    strategy_for_group,
)

EXACT_TOLERANCE = 1e-12

DESK_MAX_STEPS = 3
DESK_MAX_REPORTS = 6
DESK_MAX_BRIBE_LEVELS = 5


@dataclass(frozen=True)
class SweepEntry:
    participants: tuple[int, ...]
    step: int
    kind: DeviationKind


@dataclass
class DeviationEstimate:
    participants: tuple[int, ...]
    step: int
    kind: dict
    delta: float
    std_error: float
    trials: int
    profitable: bool
    impacted_others: Optional[bool] = None

    def to_obj(self) -> dict:
        return {
            "participants": list(self.participants),
            "step": self.step,
            "deviation": self.kind,
            "delta": self.delta,
            "std_error": self.std_error,
            "trials": self.trials,
            "profitable": self.profitable,
            "impacted_others": self.impacted_others,
        }


@dataclass
class EquilibriumReport:
    instance: dict
    scope: str
    epsilon_sigma: float
    monotonicity_holds: bool
    skipping_resistance_holds: bool
    verdict: str
    best_deviation: Optional[DeviationEstimate]
    publisher_deviations: list[DeviationEstimate] = field(default_factory=list)
    validator_deviations: list[DeviationEstimate] = field(default_factory=list)

    @property
    def no_profitable_deviation(self) -> bool:
        return self.verdict == "no_profitable_deviation"

    def to_obj(self) -> dict:
        return {
            "instance": self.instance,
            "scope": self.scope,
            "conventions": {
                "validator_tie_break": (
                    "when protocol-following inclusion is a best response the "
                    "validator plays it; remaining ties resolve lexicographically "
                    "on the canonical vector key"
                ),
            },
            "epsilon_sigma": self.epsilon_sigma,
            "property_checks": {
                "reward_monotonicity": self.monotonicity_holds,
                "skipping_resistance": self.skipping_resistance_holds,
            },
            "verdict": self.verdict,
            "best_deviation": self.best_deviation.to_obj() if self.best_deviation else None,
            "publisher_deviations": [d.to_obj() for d in self.publisher_deviations],
            "validator_deviations": [d.to_obj() for d in self.validator_deviations],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_obj(), indent=2)


def instance_obj(cfg: GameConfig) -> dict:
    spec = cfg.spec
    spec_obj = {"family": type(spec).__name__, **{k: getattr(spec, k) for k in spec.__dataclass_fields__}}
    return {
        "spec": spec_obj,
        "publishers": [list(p) for p in cfg.publishers],
        "t_total": cfg.epoch.t_total,
        "t_pub": cfg.epoch.t_pub,
        "steps": cfg.steps,
        "seed": cfg.seed,
    }


def enforce_desk_scale(cfg: GameConfig, grid: ActionGrid) -> None:
    if cfg.steps > DESK_MAX_STEPS:
        raise ValueError(
            f"window of {cfg.steps} steps exceeds the desk-scale bound of {DESK_MAX_STEPS}; "
            "the deviation sweep is exponential in the instance size"
        )
    if cfg.total_reports > DESK_MAX_REPORTS:
        raise ValueError(
            f"{cfg.total_reports} reports exceed the desk-scale bound of {DESK_MAX_REPORTS}; "
            "the deviation sweep is exponential in the instance size"
        )
    if len(grid.bribe_levels) > DESK_MAX_BRIBE_LEVELS:
        raise ValueError(
            f"{len(grid.bribe_levels)} bribe levels exceed the desk-scale bound of "
            f"{DESK_MAX_BRIBE_LEVELS}"
        )


def deviation_entries(
    cfg: GameConfig, grid: ActionGrid, include_coalitions: bool
) -> list[SweepEntry]:
    """The grid of one-shot deviations checked per participant and step."""
    groups: list[tuple[int, ...]] = [(pid,) for pid, _ in cfg.publishers]
    if include_coalitions:
        pids = [pid for pid, _ in cfg.publishers]
        for size in range(2, len(pids) + 1):
            groups.extend(itertools.combinations(pids, size))

    top_level = max(grid.bribe_levels)
    entries: list[SweepEntry] = []
    for group in groups:
        ids = sorted(
            r.id for r in cfg.roster() if r.owner in group
        )
        for step in range(1, cfg.steps + 1):
            if len(group) == 1:
                withholds = [
                    kept
                    for size in range(0, len(ids))
                    for kept in itertools.combinations(ids, size)
                ]
            else:
                # Report values are exchangeable, so a coalition withhold's
                # expected delta depends only on how many reports it keeps;
                # one representative subset per size suffices.
                withholds = [tuple(ids[:size]) for size in range(0, len(ids))]
            for kept in withholds:
                entries.append(SweepEntry(group, step, WithholdSubset(kept=kept)))
            entries.append(SweepEntry(group, step, BribeToSkip(amount=None)))
            for level in grid.positive_levels:
                entries.append(SweepEntry(group, step, BribeToSkip(amount=level)))
            entries.append(SweepEntry(group, step, BribeToReorder()))
            if top_level > 0:
                for rid in ids:
                    entries.append(
                        SweepEntry(
                            group,
                            step,
                            BribeToReorder(target=(rid, DUMMY_ID), amount=top_level),
                        )
                    )
    return entries


@dataclass
class SweepResult:
    entry: SweepEntry
    delta: float
    std_error: float
    trials: int
    impacted_others: bool

    def estimate(self, eps_sigma: float) -> DeviationEstimate:
        eps = max(eps_sigma * self.std_error, EXACT_TOLERANCE)
        return DeviationEstimate(
            participants=self.entry.participants,
            step=self.entry.step,
            kind=describe(self.entry.kind),
            delta=self.delta,
            std_error=self.std_error,
            trials=self.trials,
            profitable=self.delta > eps,
            impacted_others=self.impacted_others,
        )


def _continuation_value(cfg: GameConfig, participants: tuple[int, ...], step: int) -> float:
    """Expected honest-play revenue of a group in the subgame after ``step``.

    With everyone honest the next step settles almost surely, each report
    wins with equal probability, and the total payout is the closed-form
    expected gap; so the group is worth its report share of that gap.
    """
    if step >= cfg.steps or cfg.total_reports == 0:
        return 0.0
    count = sum(dict(cfg.publishers)[p] for p in participants)
    return (count / cfg.total_reports) * rallpub_closed_form(cfg.spec, cfg.total_reports)


def sweep_publisher_deviations(
    cfg: GameConfig,
    grid: ActionGrid,
    entries: Sequence[SweepEntry],
    trials: int,
    seed: int,
) -> list[SweepResult]:
    """Matched-seed deltas for every deviation entry.

    Each entry is evaluated on its deviation step only; if the step's block
    stays empty, the rest of the window is valued by the closed-form honest
    continuation rather than sampled.  The expectation is unchanged (the
    continuation draw is independent of the deviation step) and the paired
    variance drops by orders of magnitude.
    """
    validator = BestResponseValidator(grid)
    honest = honest_profile(cfg)
    steps_needed = sorted({e.step for e in entries})
    strategies_of = [
        {**honest, **strategy_for_group(cfg, e.participants, e.kind, e.step)}
        for e in entries
    ]
    continuation = [_continuation_value(cfg, e.participants, e.step) for e in entries]
    # All deviation views read realized values from one shared per-trial
    # table instead of re-hashing them per bribe evaluation.
    shared_tables: dict[bytes, dict[int, float]] = {}
    for strategies in strategies_of:
        for strategy in strategies.values():
            view = getattr(strategy, "view", None)
            if view is not None:
                view.table_cache = shared_tables

    sums = [0.0] * len(entries)
    sumsqs = [0.0] * len(entries)
    impacted = [False] * len(entries)

    for trial in range(trials):
        trial_cfg = cfg.with_seed(derive_seed(seed, "trial", trial))
        randomness = EpochRandomness.of(trial_cfg)
        values = step_value_table(trial_cfg, randomness)
        shared_tables.clear()
        for s, table in zip(randomness.strings, values):
            shared_tables[s.value] = table
        baselines = {
            k: play_epoch(
                trial_cfg,
                honest,
                start_step=k,
                stop_after=k,
                randomness=randomness,
                values=values,
                keep_steps=False,
                track_history=False,
            )
            for k in steps_needed
        }
        for i, entry in enumerate(entries):
            base = baselines[entry.step]
            out = play_epoch(
                trial_cfg,
                strategies_of[i],
                validator,
                start_step=entry.step,
                stop_after=entry.step,
                randomness=randomness,
                values=values,
                keep_steps=False,
                track_history=False,
            )
            delta = sum(
                out.publisher_revenue[p] - base.publisher_revenue[p]
                for p in entry.participants
            )
            if out.termination_step is None:
                delta += continuation[i]
            if base.termination_step is None:
                delta -= continuation[i]
            sums[i] += delta
            sumsqs[i] += delta * delta
            if not impacted[i]:
                others = [
                    pid for pid, _ in cfg.publishers if pid not in entry.participants
                ]
                if (
                    any(
                        out.publisher_revenue[p] != base.publisher_revenue[p]
                        for p in others
                    )
                    or out.validator_revenue != base.validator_revenue
                    or out.termination_step != base.termination_step
                ):
                    impacted[i] = True

    results = []
    for i, entry in enumerate(entries):
        mean = sums[i] / trials
        var = max(sumsqs[i] / trials - mean * mean, 0.0)
        se = math.sqrt(var / trials) if trials > 1 else float("inf")
        results.append(SweepResult(entry, mean, se, trials, impacted[i]))
    return results


def sweep_validator_deviations(
    cfg: GameConfig, grid: ActionGrid, trials: int, seed: int
) -> list[DeviationEstimate]:
    """Max inclusion-deviation gain per step under honest publishers.

    With no bribes on the table the comparison is deterministic given the
    string, so the sweep reports the worst case over sampled strings
    exactly (standard error zero).
    """
    spec = cfg.spec
    roster = list(cfg.roster())
    candidates = None
    worst: dict[int, tuple[float, dict]] = {
        step: (-math.inf, {}) for step in range(1, cfg.steps + 1)
    }
    for trial in range(trials):
        trial_cfg = cfg.with_seed(derive_seed(seed, "trial", trial))
        randomness = EpochRandomness.of(trial_cfg)
        values = step_value_table(trial_cfg, randomness)
        if candidates is None:
            candidates = grid.candidate_vectors(roster)
        for step in range(1, cfg.steps + 1):
            s = randomness.strings[step - 1]
            value_fn = _table_value_fn(values[step - 1], spec.r_min)
            ctx = StepContext(spec=spec, value_of=value_fn, s=s)
            honest_vec = honest_inclusion_vector(roster, ctx)
            honest_key = vector_key(honest_vec)
            honest_utility = validator_utility(honest_vec, [], s, spec, value_fn=value_fn)
            seen = set()
            for raw in candidates:
                vec = reformulate_inclusion(raw, s, spec, value_fn=value_fn)
                key = vector_key(vec)
                if key == honest_key or key in seen:
                    continue
                seen.add(key)
                gain = (
                    validator_utility(vec, [], s, spec, value_fn=value_fn)
                    - honest_utility
                )
                if gain > worst[step][0]:
                    worst[step] = (gain, {"trial": trial, "vector": list(key)})

    estimates = []
    for step in range(1, cfg.steps + 1):
        worst_gain, witness = worst[step]
        estimates.append(
            DeviationEstimate(
                participants=(),
                step=step,
                kind={"kind": "InclusionDeviation", **witness},
                delta=worst_gain if worst_gain != -math.inf else 0.0,
                std_error=0.0,
                trials=trials,
                profitable=worst_gain > EXACT_TOLERANCE,
            )
        )
    return estimates


def verify_spne(
    cfg: GameConfig,
    grid: Optional[ActionGrid] = None,
    *,
    trials: int = 25_000,
    seed: int = 0,
    eps_sigma: float = 3.0,
    include_coalitions: bool = True,
    validator_trials: int = 1_000,
) -> EquilibriumReport:
    """Sweep the deviation grid and report the best deviation found.

    ``NoProfitableDeviation`` means no entry beat its honest baseline by
    more than ``eps_sigma`` paired standard errors -- within the pivotal
    grid, not over the continuum.
    """
    grid = grid or pivotal_grid(cfg.spec)
    enforce_desk_scale(cfg, grid)

    prop_cfg = PropertyCheckConfig(n_max=max(cfg.total_reports, 1))
    monotonic = check_reward_monotonicity(cfg.spec, prop_cfg).holds
    skipping = check_skipping_resistance(cfg.spec, prop_cfg).holds

    entries = deviation_entries(cfg, grid, include_coalitions)
    results = sweep_publisher_deviations(cfg, grid, entries, trials, seed)
    publisher_estimates = [r.estimate(eps_sigma) for r in results]
    validator_estimates = sweep_validator_deviations(
        cfg, grid, min(trials, validator_trials), seed
    )

    everything = publisher_estimates + validator_estimates
    violations = [e for e in everything if e.profitable]
    best = max(violations, key=lambda e: e.delta, default=None)
    if best is None and everything:
        best = max(everything, key=lambda e: e.delta)

    return EquilibriumReport(
        instance=instance_obj(cfg),
        scope="pivotal-grid (verdict is grid-relative, not continuum)",
        epsilon_sigma=eps_sigma,
        monotonicity_holds=monotonic,
        skipping_resistance_holds=skipping,
        verdict="violation" if violations else "no_profitable_deviation",
        best_deviation=best,
        publisher_deviations=publisher_estimates,
        validator_deviations=validator_estimates,
    )
