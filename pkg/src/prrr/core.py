"""Identities, hashing oracle, simulated VRF, and block structures.

Everything here is a pure function of its inputs: replaying an epoch under
the same seed yields a bit-identical trace.  The VRF is simulated (the proof
is the secret seed itself, revealed after block publication), which gives the
two properties the mechanism needs inside a single-process simulator:
unpredictability before publication and public verifiability after.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Union

DIGEST_BYTES = 32

PublisherId = int
ValidatorId = int
Money = float

#: Reserved id for the dummy sentinel in canonical inclusion-vector keys.
DUMMY_ID = -1


def oracle_digest(data: bytes) -> bytes:
    """256-bit random-oracle stand-in."""
    return hashlib.sha256(data).digest()


def oracle_uniform(data: bytes) -> float:
    """Map bytes to a uniform value in [0, 1).

    Reads the first 64 bits of the 256-bit digest big-endian and divides by
    2**64, so the result never reaches 1.0.
    """
    if not data:
        raise ValueError("oracle_uniform requires non-empty input")
    return int.from_bytes(oracle_digest(data)[:8], "big") / 2.0**64


@dataclass(frozen=True)
class Report:
    """An opaque data item competing for inclusion.

    The owner is carried for revenue accounting only; report values never
    depend on it.  ``payload_digest`` is fixed at construction.
    """

    id: int
    owner: PublisherId
    payload_digest: bytes

    def __post_init__(self) -> None:
        if len(self.payload_digest) != DIGEST_BYTES:
            raise ValueError("payload_digest must be 32 bytes")

    def with_owner(self, owner: PublisherId) -> "Report":
        """Same report (same id, same digest) under a different identity."""
        return Report(self.id, owner, self.payload_digest)


class DummyReport:
    """Sentinel whose value is exactly the floor of the value function."""

    __slots__ = ()

    def __repr__(self) -> str:  # pragma: no cover
        return "<dummy>"


#: The one dummy instance; compare with ``is``/``is_dummy``.
DUMMY = DummyReport()

ReportOrDummy = Union[Report, DummyReport]


def is_dummy(entry: ReportOrDummy) -> bool:
    return isinstance(entry, DummyReport)


def entry_id(entry: ReportOrDummy) -> int:
    return DUMMY_ID if isinstance(entry, DummyReport) else entry.id


@dataclass(frozen=True)
class RandomString:
    """Per-block private random string plus its simulated-VRF witness."""

    value: bytes
    proof: bytes


@dataclass(frozen=True)
class ValidatorKeys:
    sk: bytes
    pk: bytes

    @classmethod
    def from_secret(cls, sk: bytes) -> "ValidatorKeys":
        return cls(sk=sk, pk=oracle_digest(sk))


def vrf_generate(beacon: bytes, keys: ValidatorKeys) -> RandomString:
    """Derive the private random string for a beacon; proof reveals the seed."""
    return RandomString(value=oracle_digest(keys.sk + beacon), proof=keys.sk)


def vrf_verify(beacon: bytes, s: RandomString, pk: bytes) -> bool:
    """Check that ``s`` was generated from ``beacon`` by the key behind ``pk``."""
    return oracle_digest(s.proof) == pk and oracle_digest(s.proof + beacon) == s.value


@dataclass(frozen=True)
class Block:
    """Block ``(index, beacon, random string, ordered inclusions)``.

    ``inclusions`` is the validator's action verbatim; nothing downstream
    reorders it.
    """

    index: int
    beacon: bytes
    random_string: RandomString
    inclusions: tuple[tuple[ReportOrDummy, Money], ...]

    def __post_init__(self) -> None:
        if self.index < 1:
            raise ValueError("block index starts at 1")


def seed_bytes(seed: int) -> bytes:
    """Canonical 8-byte encoding of a 64-bit seed."""
    return (seed & 0xFFFFFFFFFFFFFFFF).to_bytes(8, "big")


def derive_seed(seed: int, *labels: int | bytes | str) -> int:
    """Derive an independent 64-bit sub-seed from a master seed and labels."""
    h = hashlib.sha256(seed_bytes(seed))
    for label in labels:
        if isinstance(label, int):
            h.update(b"i" + label.to_bytes(8, "big", signed=True))
        elif isinstance(label, str):
            h.update(b"s" + label.encode())
        else:
            h.update(b"b" + label)
    return int.from_bytes(h.digest()[:8], "big")


def derive_beacon(seed: int, step: int) -> bytes:
    """Per-step beacon pulse, derived so strategies cannot see it early."""
    return oracle_digest(seed_bytes(seed) + b"beacon" + step.to_bytes(8, "big"))


def derive_validator_keys(seed: int, step: int) -> ValidatorKeys:
    """Keys of the (distinct) validator acting at ``step``."""
    sk = oracle_digest(seed_bytes(seed) + b"vsk" + step.to_bytes(8, "big"))
    return ValidatorKeys.from_secret(sk)


def report_payload_digest(report_id: int) -> bytes:
    """Deterministic stand-in payload digest for a report id."""
    return oracle_digest(b"report-payload" + report_id.to_bytes(8, "big", signed=False))


def build_roster(report_counts: dict[PublisherId, int]) -> tuple[Report, ...]:
    """Assign reports to publishers with ids from a per-epoch counter.

    Ids are dense 0..N-1 in publisher order, so the same counts always yield
    the same report identities (ownership aside).
    """
    roster: list[Report] = []
    next_id = 0
    for owner in sorted(report_counts):
        for _ in range(report_counts[owner]):
            roster.append(Report(next_id, owner, report_payload_digest(next_id)))
            next_id += 1
    return tuple(roster)
