"""Side-payment schedules offered by publishers to the block producer.

A schedule is a total mapping from (canonical inclusion vector, random
string) to a non-negative amount.  It is represented sparsely: a static
table keyed by canonical vector, an optional per-realized-string table
provider, and an implicit default of zero everywhere else.  Best-response
search only ever evaluates candidate vectors, so the sparse form is lossless
for every strategy modeled here.

Canonical vector keys are the sequence of report ids, with a reserved id for
the dummy sentinel, which keeps keys position-sensitive and unambiguous.
"""

from __future__ import annotations

from typing import Callable, Iterable, Mapping, Optional

from .core import RandomString, ReportOrDummy, entry_id

VectorKey = tuple[int, ...]

#: Margin used by pivotal bribe levels ("just above" a reward threshold).
PIVOT_DELTA = 1e-6


def vector_key(vec: Iterable[ReportOrDummy]) -> VectorKey:
    return tuple(entry_id(entry) for entry in vec)


class BribeSchedule:
    """Sparse bribe table with an optional per-string component.

    ``per_string`` lets a schedule react to the realized random string (the
    mechanism's bribery threat model allows offers contingent on any
    realization); given the realized string it returns a finite table over
    candidate vectors.  Lookups add the static and per-string entries.
    """

    __slots__ = ("_entries", "_per_string", "_memo")

    def __init__(
        self,
        entries: Optional[Mapping[VectorKey, float]] = None,
        per_string: Optional[Callable[[RandomString], Mapping[VectorKey, float]]] = None,
    ) -> None:
        table = dict(entries or {})
        for key, amount in table.items():
            if amount < 0:
                raise ValueError(f"bribe for {key} must be non-negative")
        self._entries = table
        self._per_string = per_string
        # Single-slot memo for the realized string's table; utilities probe
        # the same string many times per step.
        self._memo: Optional[tuple[bytes, dict[VectorKey, float]]] = None

    @property
    def is_zero(self) -> bool:
        return not self._entries and self._per_string is None

    @property
    def static_entries(self) -> dict[VectorKey, float]:
        return dict(self._entries)

    def _extra_for(self, s: RandomString) -> dict[VectorKey, float]:
        if self._per_string is None:
            return {}
        if self._memo is not None and self._memo[0] == s.value:
            return self._memo[1]
        extra = dict(self._per_string(s))
        for key, amount in extra.items():
            if amount < 0:
                raise ValueError(f"bribe for {key} must be non-negative")
        self._memo = (s.value, extra)
        return extra

    def table_for(self, s: RandomString) -> dict[VectorKey, float]:
        """Finite table of non-default entries for the realized string."""
        table = dict(self._entries)
        for key, amount in self._extra_for(s).items():
            table[key] = table.get(key, 0.0) + amount
        return table

    def amount(self, key: VectorKey, s: RandomString) -> float:
        total = self._entries.get(key, 0.0)
        if self._per_string is not None:
            total += self._extra_for(s).get(key, 0.0)
        return total

    def __add__(self, other: "BribeSchedule") -> "BribeSchedule":
        """Pointwise sum (a merged publisher offers the sum of member bribes)."""
        merged = dict(self._entries)
        for key, amount in other._entries.items():
            merged[key] = merged.get(key, 0.0) + amount
        funcs = [f for f in (self._per_string, other._per_string) if f is not None]
        if not funcs:
            per_string = None
        elif len(funcs) == 1:
            per_string = funcs[0]
        else:
            def per_string(s: RandomString) -> dict[VectorKey, float]:
                combined: dict[VectorKey, float] = {}
                for f in funcs:
                    for key, amount in f(s).items():
                        combined[key] = combined.get(key, 0.0) + amount
                return combined
        return BribeSchedule(merged, per_string)

    def __repr__(self) -> str:  # pragma: no cover
        tag = "+fn" if self._per_string else ""
        return f"BribeSchedule({self._entries!r}{tag})"


ZERO_BRIBE = BribeSchedule()

#: Key under which a bribe-to-skip is offered.
EMPTY_VECTOR: VectorKey = ()


def bribe_on(key: VectorKey, amount: float) -> BribeSchedule:
    return BribeSchedule({key: amount})


def bribe_to_skip(amount: float) -> BribeSchedule:
    return BribeSchedule({EMPTY_VECTOR: amount})
