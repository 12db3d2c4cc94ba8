"""Brute-force validator best response over a discretized action grid.

Candidate inclusion vectors are every ordered selection of at most
``max_vector_len`` published reports, plus the empty vector.  Settlement
treats all vectors of length three or more identically, so capping at three
loses nothing.  Ties are resolved in favor of the protocol-following vector
and then lexicographically on the canonical key, matching the tie-breaking
convention the equilibrium analysis assumes.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from ..bribes import PIVOT_DELTA, BribeSchedule, VectorKey, vector_key
from ..core import DUMMY, DUMMY_ID, Money, PublisherId, RandomString, Report, ReportOrDummy
from ..game import (
    HonestValidator,
    PublisherAction,
    StepContext,
    deformulate_inclusion,
    published_union,
    reformulate_inclusion,
    validator_utility,
)
from ..protocol import ValueFn
from ..rvalue import RandomValueSpec, rv_eval


@dataclass(frozen=True)
class ActionGrid:
    """Bribe levels and inclusion-vector enumeration bounds."""

    bribe_levels: tuple[float, ...] = (0.0,)
    max_vector_len: int = 3

    def __post_init__(self) -> None:
        if 0.0 not in self.bribe_levels:
            raise ValueError("bribe grid must contain 0")
        if any(level < 0 for level in self.bribe_levels):
            raise ValueError("bribe levels must be non-negative")
        if tuple(sorted(self.bribe_levels)) != self.bribe_levels:
            raise ValueError("bribe levels must be sorted ascending")
        if self.max_vector_len < 1:
            raise ValueError("max_vector_len must be >= 1")

    @property
    def positive_levels(self) -> tuple[float, ...]:
        return tuple(level for level in self.bribe_levels if level > 0)

    def candidate_vectors(
        self, published: Sequence[Report]
    ) -> list[tuple[Report, ...]]:
        """All ordered selections up to the cap, plus the empty vector."""
        pool = sorted(published, key=lambda r: r.id)
        out: list[tuple[Report, ...]] = [()]
        for length in range(1, min(self.max_vector_len, len(pool)) + 1):
            out.extend(itertools.permutations(pool, length))
        return out


def pivotal_grid(spec: RandomValueSpec, extra_levels: Iterable[float] = ()) -> ActionGrid:
    """Grid anchored where best responses pivot: zero and the floor +- delta.

    The other analytic pivot, the realized second-highest value, depends on
    the random string and is handled by the adaptive deviation schedules
    rather than by static levels.
    """
    levels = {0.0, max(spec.r_min - PIVOT_DELTA, 0.0), float(spec.r_min), spec.r_min + PIVOT_DELTA}
    levels.update(float(x) for x in extra_levels)
    return ActionGrid(bribe_levels=tuple(sorted(levels)))


@dataclass(frozen=True)
class BestResponse:
    vector: tuple[ReportOrDummy, ...]
    key: VectorKey
    utility: Money


def honest_inclusion_vector(
    published: Sequence[Report], ctx: StepContext
) -> tuple[ReportOrDummy, ...]:
    """The protocol-following (reformulated) vector for a published pool."""
    raw = HonestValidator().include(
        0, {0: PublisherAction(frozenset(published), BribeSchedule())}, ctx
    )
    return reformulate_inclusion(raw, ctx.s, ctx.spec, value_fn=ctx.value_of)


def _utility_of(
    vec: tuple[ReportOrDummy, ...],
    bribes: Sequence[BribeSchedule],
    ctx: StepContext,
) -> Money:
    return validator_utility(vec, bribes, ctx.s, ctx.spec, value_fn=ctx.value_of)


def _argmax(
    scored: dict[VectorKey, tuple[tuple[ReportOrDummy, ...], Money]],
    honest_key: VectorKey,
) -> BestResponse:
    best_utility = max(utility for _vec, utility in scored.values())
    winners = [key for key, (_vec, utility) in scored.items() if utility == best_utility]
    if honest_key in winners:
        choice = honest_key
    else:
        choice = min(winners)
    vec, utility = scored[choice]
    return BestResponse(vector=vec, key=choice, utility=utility)


def validator_best_response(
    actions: Mapping[PublisherId, PublisherAction],
    s: RandomString,
    spec: RandomValueSpec,
    grid: ActionGrid,
    value_fn: Optional[ValueFn] = None,
) -> BestResponse:
    """Exhaustive argmax of the validator's utility over the candidate grid."""
    value_of = value_fn or (lambda entry, ss: rv_eval(spec, entry, ss))
    ctx = StepContext(spec=spec, value_of=value_of, s=s)
    published = published_union(actions)
    bribes = [actions[pid].bribe for pid in sorted(actions)]
    honest_key = vector_key(honest_inclusion_vector(published, ctx))

    scored: dict[VectorKey, tuple[tuple[ReportOrDummy, ...], Money]] = {}
    for raw in grid.candidate_vectors(published):
        vec = reformulate_inclusion(raw, s, spec, value_fn=value_of)
        key = vector_key(vec)
        if key in scored:
            continue
        scored[key] = (vec, _utility_of(vec, bribes, ctx))
    return _argmax(scored, honest_key)


def validator_best_response_pruned(
    actions: Mapping[PublisherId, PublisherAction],
    ctx: StepContext,
    grid: ActionGrid,
) -> BestResponse:
    """Same argmax as the exhaustive search, skipping dominated vectors.

    With no bribe attached, a vector's utility never exceeds the honest
    vector's (the contract pays at most the realized second-highest value),
    and ties resolve to the honest vector anyway.  So only the honest
    vector, the empty vector, and vectors carrying a positive bribe can win.
    """
    published = published_union(actions)
    ids = {r.id: r for r in published}
    bribes = [actions[pid].bribe for pid in sorted(actions)]
    honest_vec = honest_inclusion_vector(published, ctx)
    honest_key = vector_key(honest_vec)

    scored: dict[VectorKey, tuple[tuple[ReportOrDummy, ...], Money]] = {
        honest_key: (honest_vec, _utility_of(honest_vec, bribes, ctx)),
        (): ((), _utility_of((), bribes, ctx)),
    }
    for schedule in bribes:
        for key, amount in schedule.table_for(ctx.s).items():
            if amount <= 0 or key in scored:
                continue
            vec = _vector_from_key(key, ids, grid)
            if vec is None:
                continue
            # A key is reachable only if some raw action encodes to it under
            # the realized values: round-trip through the literal action.
            # (A dummy-bearing key can be a fixed point of the encoding yet
            # unreachable, e.g. (a, dummy, b) when (a, b) is a valid pair.)
            raw = deformulate_inclusion(vec)
            canonical = reformulate_inclusion(raw, ctx.s, ctx.spec, value_fn=ctx.value_of)
            if vector_key(canonical) != key:
                continue
            scored[key] = (canonical, _utility_of(canonical, bribes, ctx))
    return _argmax(scored, honest_key)


def _vector_from_key(
    key: VectorKey, ids: Mapping[int, Report], grid: ActionGrid
) -> Optional[tuple[ReportOrDummy, ...]]:
    real = [x for x in key if x != DUMMY_ID]
    if len(real) > grid.max_vector_len or len(set(real)) != len(real):
        return None
    out: list[ReportOrDummy] = []
    for pos, x in enumerate(key):
        if x == DUMMY_ID:
            if pos != 1:
                return None
            out.append(DUMMY)
        elif x in ids:
            out.append(ids[x])
        else:
            return None
    return tuple(out)


class BestResponseValidator:
    """Validator strategy that plays the grid argmax each step."""

    def __init__(self, grid: ActionGrid, exhaustive: bool = False) -> None:
        self.grid = grid
        self.exhaustive = exhaustive
        self._honest = HonestValidator()

    def include(self, step, actions, ctx):
        if not self.exhaustive and all(a.bribe.is_zero for a in actions.values()):
            # No bribes on the table: the protocol vector attains the
            # maximum and wins the tie-break.
            return self._honest.include(step, actions, ctx)
        if self.exhaustive:
            br = validator_best_response(actions, ctx.s, ctx.spec, self.grid, value_fn=ctx.value_of)
        else:
            br = validator_best_response_pruned(actions, ctx, self.grid)
        return br.vector
