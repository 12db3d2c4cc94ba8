"""The reporting protocol itself: publication, inclusion, settlement.

Publication submits every report with a zero fee bid and a zero bribe.
Inclusion sorts published reports by realized value (ties by ascending
report hash) and takes the top one, plus the runner-up only when its value
strictly exceeds the floor ``r_min``.  Settlement verifies the random
string and pays out along one of four branches:

* rejected -- bad VRF witness or empty block: nobody is paid.
* succinct -- one report: validator gets ``r_min``, owner gets ``r1 - r_min``.
* standard -- two reports, ordered, runner-up above the floor: validator
  gets ``r2``, the winner's owner gets ``r1 - r2``.
* deviation -- anything else: validator gets nothing, the first report's
  owner gets ``r1 - r_min``.

All functions take an optional ``value_fn`` override so tests and the golden
reward-matrix replay can pin exact values; the default evaluates the
configured random-value function.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Iterable, Optional

from .bribes import ZERO_BRIBE, BribeSchedule
from .core import (
    Block,
    Money,
    PublisherId,
    RandomString,
    Report,
    ReportOrDummy,
    entry_id,
    is_dummy,
    oracle_digest,
    vrf_verify,
)
from .rvalue import RandomValueSpec, rv_eval

ValueFn = Callable[[ReportOrDummy, RandomString], Money]


@dataclass(frozen=True)
class EpochConfig:
    """Epoch shape: ``t_total`` steps, publication open from ``t_pub``."""

    t_total: int
    t_pub: int
    spec: RandomValueSpec

    def __post_init__(self) -> None:
        if self.t_total < 1:
            raise ValueError("t_total must be >= 1")
        if not 1 <= self.t_pub <= self.t_total:
            raise ValueError("t_pub must lie in [1, t_total]")

    @property
    def window_length(self) -> int:
        return self.t_total - self.t_pub + 1


@dataclass(frozen=True)
class PublicationBundle:
    transactions: tuple[tuple[Report, Money], ...]
    bribe: BribeSchedule


class SettlementCase(str, enum.Enum):
    STANDARD = "standard"
    SUCCINCT = "succinct"
    DEVIATION = "deviation"
    REJECTED = "rejected"


@dataclass
class RewardLedger:
    publisher_rewards: dict[PublisherId, Money]
    validator_reward: Money
    case: SettlementCase

    @property
    def total_publisher_reward(self) -> Money:
        return sum(self.publisher_rewards.values())

    @property
    def contract_payout(self) -> Money:
        return self.total_publisher_reward + self.validator_reward


def _default_value_fn(spec: RandomValueSpec) -> ValueFn:
    return lambda report, s: rv_eval(spec, report, s)


@lru_cache(maxsize=8192)
def _vrf_ok(beacon: bytes, s: RandomString, pk: bytes) -> bool:
    return vrf_verify(beacon, s, pk)


def honest_publish(reports: Iterable[Report]) -> PublicationBundle:
    """Publish every report with a zero bid and a zero bribe."""
    return PublicationBundle(
        transactions=tuple((report, 0.0) for report in sorted(reports, key=lambda r: r.id)),
        bribe=ZERO_BRIBE,
    )


def _tie_key(report: Report) -> bytes:
    return oracle_digest(report.payload_digest)


def sort_reports(
    published: Iterable[tuple[Report, Money]],
    s: RandomString,
    spec: RandomValueSpec,
    value_fn: Optional[ValueFn] = None,
) -> list[tuple[Report, Money]]:
    """Descending by realized value; ties by ascending report hash, then id."""
    value_of = value_fn or _default_value_fn(spec)
    return sorted(
        published,
        key=lambda tx: (-value_of(tx[0], s), _tie_key(tx[0]), tx[0].id),
    )


def honest_include(
    published: Iterable[tuple[Report, Money]],
    s: RandomString,
    spec: RandomValueSpec,
    value_fn: Optional[ValueFn] = None,
) -> tuple[tuple[Report, Money], ...]:
    """Top report, plus the runner-up only if strictly above the floor."""
    value_of = value_fn or _default_value_fn(spec)
    ranked = sort_reports(published, s, spec, value_fn=value_of)
    if not ranked:
        return ()
    chosen = [ranked[0]]
    if len(ranked) > 1 and value_of(ranked[1][0], s) > spec.r_min:
        chosen.append(ranked[1])
    return tuple(chosen)


def process_block(
    block: Block,
    pk: bytes,
    spec: RandomValueSpec,
    value_fn: Optional[ValueFn] = None,
) -> RewardLedger:
    """Settle a block.  Total over all inputs; malformed blocks are rejected.

    A dummy entry counts as a report worth exactly ``r_min``, so any block
    carrying one as its second entry lands in the deviation branch.
    """
    value_of = value_fn or _default_value_fn(spec)
    s = block.random_string

    if not block.inclusions or not _vrf_ok(block.beacon, s, pk):
        return RewardLedger({}, 0.0, SettlementCase.REJECTED)

    entries = [entry for entry, _bid in block.inclusions]
    first = entries[0]
    r1 = value_of(first, s)
    rewards: dict[PublisherId, Money] = {}

    def pay_first(amount: Money) -> None:
        if not is_dummy(first):
            rewards[first.owner] = rewards.get(first.owner, 0.0) + amount

    if len(entries) == 1:
        pay_first(r1 - spec.r_min)
        return RewardLedger(rewards, spec.r_min, SettlementCase.SUCCINCT)

    if len(entries) == 2:
        r2 = value_of(entries[1], s)
        if r1 >= r2 and r2 > spec.r_min:
            pay_first(r1 - r2)
            if not is_dummy(entries[1]):
                rewards.setdefault(entries[1].owner, 0.0)
            return RewardLedger(rewards, r2, SettlementCase.STANDARD)

    pay_first(r1 - spec.r_min)
    return RewardLedger(rewards, 0.0, SettlementCase.DEVIATION)


def _entry_obj(entry: ReportOrDummy) -> dict:
    if is_dummy(entry):
        return {"dummy": True, "id": entry_id(entry)}
    return {
        "dummy": False,
        "id": entry.id,
        "owner": entry.owner,
        "payload_digest": entry.payload_digest.hex(),
    }


def block_to_obj(block: Block) -> dict:
    """Canonical JSON object for a block; field order fixed as declared."""
    return {
        "index": block.index,
        "beacon": block.beacon.hex(),
        "random_string": {
            "value": block.random_string.value.hex(),
            "proof": block.random_string.proof.hex(),
        },
        "inclusions": [
            {"entry": _entry_obj(entry), "bid": bid} for entry, bid in block.inclusions
        ],
    }


def ledger_to_obj(ledger: RewardLedger) -> dict:
    """Canonical JSON object for a settlement ledger."""
    return {
        "publisher_rewards": {
            str(pid): ledger.publisher_rewards[pid] for pid in sorted(ledger.publisher_rewards)
        },
        "validator_reward": ledger.validator_reward,
        "case": ledger.case.value,
    }


def block_to_json(block: Block) -> str:
    return json.dumps(block_to_obj(block), separators=(",", ":"))


def ledger_to_json(ledger: RewardLedger) -> str:
    return json.dumps(ledger_to_obj(ledger), separators=(",", ":"))
