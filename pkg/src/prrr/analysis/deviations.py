"""Deviation library: parametrized departures from the honest strategy.

Each deviation is a one-shot departure at a chosen step (honest before and
after), built either for a single publisher or for a coordinated group of
publishers acting like one merged publisher.  The adaptive bribe amounts
resolve per realized random string at the analytically pivotal points: a
skip offer is worth taking for the validator just above the realized
second-highest value, and a reorder offer just above the utility she gives
up by deviating from the protocol inclusion.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Union

from ..bribes import PIVOT_DELTA, BribeSchedule, VectorKey, ZERO_BRIBE
from ..core import DUMMY_ID, PublisherId, RandomString, Report
from ..game import GameConfig, PublisherAction, honest_action
from ..rvalue import rallpub_closed_form, rv_eval


@dataclass(frozen=True)
class WithholdSubset:
    """Publish only the named report ids (possibly none)."""

    kept: tuple[int, ...]


@dataclass(frozen=True)
class BribeToSkip:
    """Offer a payment on the empty vector.

    ``amount=None`` means the adaptive pivotal offer: just above the realized
    second-highest value, and only on strings where skipping beats the
    deviator's current-step prospects, which is the strongest offer in this
    class.  A fixed amount is offered unconditionally.
    """

    amount: Optional[float] = None


@dataclass(frozen=True)
class BribeToReorder:
    """Pay the validator to realize a chosen inclusion vector.

    ``target=None`` resolves per string to the deviator's most lucrative
    self-serving vector (her best report settled against the floor), priced
    just above the validator's forgone utility.
    """

    target: Optional[VectorKey] = None
    amount: Optional[float] = None


@dataclass(frozen=True)
class CoalitionMerge:
    """Publishers coordinating as one merged agent."""

    members: tuple[PublisherId, ...]


@dataclass(frozen=True)
class SybilSplit:
    """Partition of one publisher's reports across fresh identities."""

    partition: tuple[int, ...]


DeviationKind = Union[WithholdSubset, BribeToSkip, BribeToReorder, CoalitionMerge, SybilSplit]


def describe(kind: DeviationKind) -> dict:
    name = type(kind).__name__
    fields = {k: getattr(kind, k) for k in kind.__dataclass_fields__}
    return {"kind": name, **{k: (list(v) if isinstance(v, tuple) else v) for k, v in fields.items()}}


class _GroupView:
    """Shared knowledge a deviating group uses to price its offers.

    ``table_cache`` may be pointed at an externally maintained
    string -> value-table map (the sweep shares its per-trial tables this
    way); anything absent is evaluated from scratch.
    """

    def __init__(self, cfg: GameConfig, members: tuple[PublisherId, ...]) -> None:
        self.cfg = cfg
        self.members = members
        self.roster = cfg.roster()
        self.member_ids = frozenset(
            r.id for r in self.roster if r.owner in members
        )
        self.total = cfg.total_reports
        self.table_cache: dict[bytes, dict[int, float]] = {}

    def future_value(self, step: int) -> float:
        """Expected group revenue of the honest continuation subgame."""
        if step >= self.cfg.steps or self.total == 0:
            return 0.0
        share = len(self.member_ids) / self.total
        return share * rallpub_closed_form(self.cfg.spec, self.total)

    def realized_values(self, s: RandomString) -> dict[int, float]:
        cached = self.table_cache.get(s.value)
        if cached is not None:
            return cached
        return {r.id: rv_eval(self.cfg.spec, r, s) for r in self.roster}


def _top_two(values: dict[int, float], r_min: float) -> tuple[int, float, float]:
    """Winning id, top value, and runner-up value (floor when alone)."""
    ranked = sorted(values.items(), key=lambda kv: (-kv[1], kv[0]))
    top_id, top = ranked[0]
    second = ranked[1][1] if len(ranked) > 1 else r_min
    return top_id, top, second


def skip_schedule(view: _GroupView, step: int, amount: Optional[float]) -> BribeSchedule:
    if amount is not None:
        return BribeSchedule({(): amount})
    future = view.future_value(step)

    def per_string(s: RandomString) -> dict[VectorKey, float]:
        values = view.realized_values(s)
        if not values:
            return {}
        top_id, top, second = _top_two(values, view.cfg.spec.r_min)
        offer = second + PIVOT_DELTA
        forgone = (top - second) if top_id in view.member_ids else 0.0
        if future > offer + forgone:
            return {(): offer}
        return {}

    return BribeSchedule(per_string=per_string)


def reorder_schedule(
    view: _GroupView, target: Optional[VectorKey], amount: Optional[float]
) -> BribeSchedule:
    if target is not None:
        if amount is None:
            raise ValueError("an explicit reorder target needs an explicit amount")
        return BribeSchedule({target: amount})

    def per_string(s: RandomString) -> dict[VectorKey, float]:
        values = view.realized_values(s)
        own = {rid: values[rid] for rid in view.member_ids if rid in values}
        if not own:
            return {}
        top_id, _top, second = _top_two(values, view.cfg.spec.r_min)
        if top_id in view.member_ids:
            return {}
        best_own = sorted(own, key=lambda rid: (-own[rid], rid))[0]
        # Forcing a succinct block with the group's best report: the
        # validator gives up the realized second-highest for the floor.
        offer = max(second - view.cfg.spec.r_min, 0.0) + PIVOT_DELTA
        return {(best_own, DUMMY_ID): offer}

    return BribeSchedule(per_string=per_string)


class GroupDeviationStrategy:
    """Publisher strategy: one-shot deviation at a step, honest elsewhere.

    For a coordinated group the bribe schedule rides on a single designated
    member (the lowest id); summing schedules across members would be
    equivalent.
    """

    def __init__(
        self,
        cfg: GameConfig,
        members: tuple[PublisherId, ...],
        kind: DeviationKind,
        at_step: int,
        pid: PublisherId,
    ) -> None:
        if isinstance(kind, (CoalitionMerge, SybilSplit)):
            raise ValueError("structural transforms are not step deviations")
        self.kind = kind
        self.at_step = at_step
        self.pid = pid
        self.is_leader = pid == min(members)
        self.view = _GroupView(cfg, members)

    def act(self, step: int, own_reports: frozenset[Report], history) -> PublisherAction:
        if step != self.at_step:
            return honest_action(own_reports)
        kind = self.kind
        if isinstance(kind, WithholdSubset):
            kept = frozenset(r for r in own_reports if r.id in kind.kept)
            return PublisherAction(published=kept, bribe=ZERO_BRIBE)
        if isinstance(kind, BribeToSkip):
            bribe = skip_schedule(self.view, step, kind.amount) if self.is_leader else ZERO_BRIBE
            return PublisherAction(published=own_reports, bribe=bribe)
        if isinstance(kind, BribeToReorder):
            bribe = (
                reorder_schedule(self.view, kind.target, kind.amount)
                if self.is_leader
                else ZERO_BRIBE
            )
            return PublisherAction(published=own_reports, bribe=bribe)
        raise TypeError(f"unsupported deviation {kind!r}")


def strategy_for_group(
    cfg: GameConfig,
    members: tuple[PublisherId, ...],
    kind: DeviationKind,
    at_step: int,
) -> dict[PublisherId, GroupDeviationStrategy]:
    return {
        pid: GroupDeviationStrategy(cfg, members, kind, at_step, pid) for pid in members
    }


KNOWN_STRATEGIES = ("honest", "withhold", "bribe-to-skip", "bribe-to-reorder")


class EveryStepDeviation(GroupDeviationStrategy):
    """Applies its deviation at every step instead of one-shot."""

    def act(self, step, own_reports, history):
        self.at_step = step
        return super().act(step, own_reports, history)


def named_strategy(cfg: GameConfig, name: str, params: dict[str, str]):
    """Publisher-strategy factory (pid -> strategy) from a CLI-style name.

    Known names: honest, withhold (keep=id+id+...), bribe-to-skip
    (amount=X or adaptive), bribe-to-reorder (amount=X or adaptive).
    """
    from ..game import HonestPublisher

    if name == "honest":
        return lambda pid: HonestPublisher()
    if name == "withhold":
        kept = tuple(int(x) for x in params.get("keep", "").split("+") if x != "")
        kind: DeviationKind = WithholdSubset(kept=kept)
    elif name == "bribe-to-skip":
        raw = params.get("amount")
        kind = BribeToSkip(amount=None if raw in (None, "adaptive") else float(raw))
    elif name == "bribe-to-reorder":
        raw = params.get("amount")
        kind = BribeToReorder(amount=None if raw in (None, "adaptive") else float(raw))
    else:
        raise ValueError(
            f"unknown strategy {name!r}; known strategies: {', '.join(KNOWN_STRATEGIES)}"
        )
    return lambda pid: EveryStepDeviation(cfg, (pid,), kind, at_step=1, pid=pid)
