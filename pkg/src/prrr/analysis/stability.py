"""Stability probes around the honest equilibrium.

* Single-step bribery bound: a publisher's step revenue under any action
  with a best-responding validator never beats the same report set with no
  bribe and an honest validator.
* Validator strictness: under the continuous-value family, every
  non-protocol inclusion vector is strictly worse for the validator.
* Publisher-impact probe: any grid deviation that changes someone else's
  realized revenue must strictly cost the deviator.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional

from ..bribes import BribeSchedule, vector_key
from ..core import DUMMY_ID, PublisherId, RandomString, derive_seed
from ..game import (
    EpochRandomness,
    GameConfig,
    PublisherAction,
    StepContext,
    _table_value_fn,
    honest_action,
    publisher_step_revenue,
    reformulate_inclusion,
    validator_utility,
)
from ..rvalue import LogarithmicSpec, rv_eval
from .bestresponse import (
    ActionGrid,
    honest_inclusion_vector,
    pivotal_grid,
    validator_best_response,
)
from .deviations import BribeToReorder, BribeToSkip, WithholdSubset
from .spne import (
    DeviationEstimate,
    deviation_entries,
    sweep_publisher_deviations,
)

EXACT_TOLERANCE = 1e-12


def check_single_step_bribery_bound(
    cfg: GameConfig,
    j: PublisherId,
    action: PublisherAction,
    s: RandomString,
    grid: Optional[ActionGrid] = None,
) -> bool:
    """Step revenue under (action, best response) <= (same reports, no bribe, honest).

    All other publishers are honest.  The comparison is per realized string.
    """
    grid = grid or pivotal_grid(cfg.spec)
    spec = cfg.spec
    values = {r.id: rv_eval(spec, r, s) for r in cfg.roster()}
    value_fn = _table_value_fn(values, spec.r_min)
    ctx = StepContext(spec=spec, value_of=value_fn, s=s)

    actions = {
        pid: honest_action(cfg.reports_of(pid)) for pid, _ in cfg.publishers
    }
    actions[j] = action
    br = validator_best_response(actions, s, spec, grid, value_fn=value_fn)
    deviated = publisher_step_revenue(j, action, br.vector, s, spec, value_fn=value_fn)

    published = set()
    for a in actions.values():
        published |= a.published
    honest_vec = honest_inclusion_vector(sorted(published, key=lambda r: r.id), ctx)
    no_bribe = PublisherAction(published=action.published, bribe=BribeSchedule())
    reference = publisher_step_revenue(j, no_bribe, honest_vec, s, spec, value_fn=value_fn)
    return deviated <= reference + EXACT_TOLERANCE


def bribery_bound_sweep(
    cfg: GameConfig,
    j: PublisherId,
    n_actions: int,
    n_seeds: int,
    seed: int,
    grid: Optional[ActionGrid] = None,
) -> bool:
    """Randomized grid actions x strings; True iff the bound never breaks."""
    grid = grid or pivotal_grid(cfg.spec)
    rng = random.Random(seed)
    own = sorted(cfg.reports_of(j), key=lambda r: r.id)
    other_ids = [r.id for r in cfg.roster()]

    for trial in range(n_seeds):
        trial_cfg = cfg.with_seed(derive_seed(seed, "bound-sweep", trial))
        s = EpochRandomness.of(trial_cfg).strings[0]
        for _ in range(n_actions):
            published = frozenset(r for r in own if rng.random() < 0.7)
            entries = {}
            for _k in range(rng.randrange(0, 3)):
                shape = rng.choice(["empty", "succinct", "pair"])
                if shape == "empty":
                    key = ()
                elif shape == "succinct":
                    key = (rng.choice(other_ids), DUMMY_ID)
                else:
                    a, b = rng.sample(other_ids, 2)
                    key = (a, b)
                entries[key] = entries.get(key, 0.0) + rng.choice(grid.bribe_levels)
            action = PublisherAction(published=published, bribe=BribeSchedule(entries))
            if not check_single_step_bribery_bound(trial_cfg, j, action, s, grid):
                return False
    return True


def check_validator_strictness(
    cfg: GameConfig, s: RandomString, grid: Optional[ActionGrid] = None
) -> bool:
    """Every non-protocol vector strictly hurts the validator.

    Valid for the continuous family where realized values are distinct with
    probability one; all publishers honest, no bribes.
    """
    if not isinstance(cfg.spec, LogarithmicSpec):
        raise ValueError("strictness holds for the continuous (logarithmic) family")
    grid = grid or pivotal_grid(cfg.spec)
    spec = cfg.spec
    roster = list(cfg.roster())
    values = {r.id: rv_eval(spec, r, s) for r in roster}
    value_fn = _table_value_fn(values, spec.r_min)
    ctx = StepContext(spec=spec, value_of=value_fn, s=s)
    honest_vec = honest_inclusion_vector(roster, ctx)
    honest_key = vector_key(honest_vec)
    honest_utility = validator_utility(honest_vec, [], s, spec, value_fn=value_fn)

    seen = set()
    for raw in grid.candidate_vectors(roster):
        vec = reformulate_inclusion(raw, s, spec, value_fn=value_fn)
        key = vector_key(vec)
        if key == honest_key or key in seen:
            continue
        seen.add(key)
        if validator_utility(vec, [], s, spec, value_fn=value_fn) >= honest_utility:
            return False
    return True


def validator_strictness_sweep(
    cfg_template: GameConfig, instances: int, seed: int
) -> bool:
    """Random instances (roster sizes 2..6, fresh strings); all must be strict."""
    rng = random.Random(seed)
    for i in range(instances):
        n0 = rng.randrange(1, 4)
        n1 = rng.randrange(1, 3)
        cfg = GameConfig(
            epoch=cfg_template.epoch,
            publishers=((0, n0), (1, n1)),
            seed=derive_seed(seed, "strict", i),
        )
        s = EpochRandomness.of(cfg).strings[0]
        if not check_validator_strictness(cfg, s):
            return False
    return True


@dataclass
class StabilityProbe:
    impacted: list[DeviationEstimate]
    all_strictly_negative: bool
    worst_margin_sigma: float

    def to_obj(self) -> dict:
        return {
            "impacted_deviations": [d.to_obj() for d in self.impacted],
            "all_strictly_negative": self.all_strictly_negative,
            "worst_margin_sigma": self.worst_margin_sigma,
        }


def publisher_impact_probe(
    cfg: GameConfig,
    trials: int,
    seed: int,
    grid: Optional[ActionGrid] = None,
) -> StabilityProbe:
    """Deviations that move anyone else's realized revenue must cost the deviator.

    A deviation counts as impacting when any other participant's realized
    revenue (or the termination step) differs from the honest baseline on
    at least one sampled string.  For those, the paired mean delta must sit
    strictly below zero; the margin is reported in standard errors.
    """
    grid = grid or pivotal_grid(cfg.spec)
    entries = [
        e
        for e in deviation_entries(cfg, grid, include_coalitions=False)
        if isinstance(e.kind, (WithholdSubset, BribeToSkip, BribeToReorder))
    ]
    results = sweep_publisher_deviations(cfg, grid, entries, trials, seed)
    impacted = [r.estimate(3.0) for r in results if r.impacted_others]
    margins = []
    for est in impacted:
        if est.std_error > 0:
            margins.append(-est.delta / est.std_error)
        else:
            margins.append(math.inf if est.delta < 0 else -math.inf)
    return StabilityProbe(
        impacted=impacted,
        all_strictly_negative=all(
            est.delta < 0 and margin > 3.0 for est, margin in zip(impacted, margins)
        ),
        worst_margin_sigma=min(margins, default=math.inf),
    )
