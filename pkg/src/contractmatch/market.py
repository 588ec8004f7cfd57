"""Market data model and choice-set primitives.

Contracts are identified by string ids. Sets of contracts are ``frozenset``
values on the public surface; internally a market compiles every contract to a
bit position (sorted by id) so that choice functions become table lookups.
"""
from __future__ import annotations

import hashlib
import itertools
import json
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Mapping, Optional, Sequence

Outcome = Optional[str]
"""A doctor's outcome: the id of its contract, or ``None`` when unmatched."""


class MarketError(ValueError):
    """Raised when market data violates a structural invariant."""


@dataclass(frozen=True, order=True)
class Contract:
    id: str
    doctor: str
    hospital: str


@dataclass(frozen=True)
class DoctorPreference:
    """Strict preference of one doctor.

    ``acceptable`` lists the contracts ranked above being unmatched, best
    first. Every other contract of the doctor is unacceptable; ``unacceptable``
    optionally fixes their order below the unmatched outcome, otherwise they
    are ordered by id. Rules here are individually rational, so the tail order
    never influences an outcome, and it does not take part in equality.
    """

    owner: str
    acceptable: tuple[str, ...]
    unacceptable: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        object.__setattr__(self, "acceptable", tuple(self.acceptable))
        object.__setattr__(self, "unacceptable", tuple(self.unacceptable))
        if len(set(self.acceptable)) != len(self.acceptable):
            raise MarketError(f"duplicate contract in preference of {self.owner}")
        if set(self.acceptable) & set(self.unacceptable):
            raise MarketError(
                f"contract listed both acceptable and unacceptable for {self.owner}"
            )

    def key(self, outcome: Outcome) -> tuple:
        """Sort key: smaller means more preferred."""
        if outcome is None:
            return (1, 0)
        if outcome in self.acceptable:
            return (0, self.acceptable.index(outcome))
        if outcome in self.unacceptable:
            return (2, self.unacceptable.index(outcome))
        return (3, outcome)

    def prefers(self, a: Outcome, b: Outcome) -> bool:
        """True iff ``a`` is strictly better than ``b``."""
        return self.key(a) < self.key(b)

    def __str__(self) -> str:
        return ",".join([*self.acceptable, "∅"])


@dataclass(frozen=True)
class HospitalPreference:
    """Complete strict ranking of all allocations drawn from a hospital's contracts."""

    owner: str
    ranking: tuple[frozenset[str], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "ranking", tuple(frozenset(s) for s in self.ranking)
        )

    def position(self, allocation: Iterable[str]) -> int:
        return self.ranking.index(frozenset(allocation))


@dataclass(frozen=True)
class DoctorProfile:
    prefs: Mapping[str, DoctorPreference]

    @classmethod
    def from_lists(cls, lists: Mapping[str, Sequence[str]]) -> "DoctorProfile":
        return cls({d: DoctorPreference(d, tuple(acc)) for d, acc in lists.items()})

    def __getitem__(self, doctor: str) -> DoctorPreference:
        return self.prefs[doctor]

    def replace(self, pref: DoctorPreference) -> "DoctorProfile":
        prefs = dict(self.prefs)
        prefs[pref.owner] = pref
        return DoctorProfile(prefs)

    def without(self, doctor: str) -> dict[str, DoctorPreference]:
        return {d: p for d, p in self.prefs.items() if d != doctor}


def is_allocation(contracts: Iterable[Contract]) -> bool:
    doctors = [c.doctor for c in contracts]
    return len(doctors) == len(set(doctors))


def _allocation_subsets(contracts: Sequence[Contract]) -> Iterator[frozenset[str]]:
    """All allocations within ``contracts``, by size then sorted ids."""
    by_doctor: dict[str, list[str]] = {}
    for c in sorted(contracts):
        by_doctor.setdefault(c.doctor, []).append(c.id)
    choices = [[None, *ids] for ids in by_doctor.values()]
    subsets = [
        frozenset(x for x in combo if x is not None)
        for combo in itertools.product(*choices)
    ]
    yield from sorted(subsets, key=lambda s: (len(s), sorted(s)))


@dataclass(frozen=True, eq=False)
class Market:
    """Doctors, hospitals, the universal contract set and hospital preferences.

    Hospital preferences are fixed with the market. Instances are immutable;
    the private ``_cache`` only memoizes derived data.
    """

    doctors: tuple[str, ...]
    hospitals: tuple[str, ...]
    contracts: tuple[Contract, ...]
    hospital_prefs: Mapping[str, HospitalPreference]
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "doctors", tuple(self.doctors))
        object.__setattr__(self, "hospitals", tuple(self.hospitals))
        object.__setattr__(self, "contracts", tuple(sorted(self.contracts)))
        object.__setattr__(self, "hospital_prefs", dict(self.hospital_prefs))
        if len(set(self.doctors)) != len(self.doctors):
            raise MarketError("duplicate doctor id")
        if len(set(self.hospitals)) != len(self.hospitals):
            raise MarketError("duplicate hospital id")
        if set(self.doctors) & set(self.hospitals):
            raise MarketError("doctor and hospital ids must be disjoint")
        ids = [c.id for c in self.contracts]
        if len(set(ids)) != len(ids):
            raise MarketError("duplicate contract id")
        for c in self.contracts:
            if c.doctor not in self.doctors:
                raise MarketError(f"contract {c.id}: unknown doctor {c.doctor!r}")
            if c.hospital not in self.hospitals:
                raise MarketError(f"contract {c.id}: unknown hospital {c.hospital!r}")
        if set(self.hospital_prefs) != set(self.hospitals):
            raise MarketError("hospital preferences must cover exactly the hospitals")
        for h in self.hospitals:
            pref = self.hospital_prefs[h]
            if pref.owner != h:
                raise MarketError(f"preference listed under {h} is owned by {pref.owner}")
            check_complete_ranking(pref, self.contracts_of(h))

    def __eq__(self, other):
        if not isinstance(other, Market):
            return NotImplemented
        return self.to_dict() == other.to_dict()

    __hash__ = None

    @cached_property
    def contract(self) -> dict[str, Contract]:
        return {c.id: c for c in self.contracts}

    @cached_property
    def ids(self) -> tuple[str, ...]:
        return tuple(c.id for c in self.contracts)

    def contracts_of(self, agent: str) -> tuple[Contract, ...]:
        if agent in self.doctors:
            return tuple(c for c in self.contracts if c.doctor == agent)
        if agent in self.hospitals:
            return tuple(c for c in self.contracts if c.hospital == agent)
        raise MarketError(f"unknown agent {agent!r}")

    def ids_of(self, agent: str) -> frozenset[str]:
        return frozenset(c.id for c in self.contracts_of(agent))

    def check_subset(self, ys: Iterable[str]) -> frozenset[str]:
        ys = frozenset(ys)
        unknown = ys - set(self.ids)
        if unknown:
            raise MarketError(f"unknown contracts {sorted(unknown)}")
        return ys

    def check_profile(self, profile: DoctorProfile) -> None:
        if set(profile.prefs) != set(self.doctors):
            raise MarketError("profile must cover exactly the doctors")
        for d, pref in profile.prefs.items():
            if pref.owner != d:
                raise MarketError(f"preference listed under {d} is owned by {pref.owner}")
            own = self.ids_of(d)
            stray = (set(pref.acceptable) | set(pref.unacceptable)) - own
            if stray:
                raise MarketError(f"preference of {d} lists foreign contracts {sorted(stray)}")

    def is_allocation(self, ys: Iterable[str]) -> bool:
        return is_allocation(self.contract[y] for y in self.check_subset(ys))

    def to_dict(self) -> dict:
        return {
            "doctors": list(self.doctors),
            "hospitals": list(self.hospitals),
            "contracts": [
                {"id": c.id, "doctor": c.doctor, "hospital": c.hospital}
                for c in self.contracts
            ],
            "hospital_prefs": {
                h: {"ranking": [sorted(s) for s in self.hospital_prefs[h].ranking]}
                for h in self.hospitals
            },
        }

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    @cached_property
    def compiled(self) -> "CompiledMarket":
        return CompiledMarket(self)


def check_complete_ranking(pref: HospitalPreference, contracts: Sequence[Contract]) -> None:
    """Raise unless ``pref.ranking`` lists every member of A(X_h) exactly once."""
    own = [c for c in contracts if c.hospital == pref.owner]
    expected = set(_allocation_subsets(own))
    seen = set()
    for s in pref.ranking:
        if s in seen:
            raise MarketError(f"hospital {pref.owner}: {sorted(s)} ranked twice")
        if s not in expected:
            raise MarketError(
                f"hospital {pref.owner}: {sorted(s)} is not an allocation of its contracts"
            )
        seen.add(s)
    missing = expected - seen
    if missing:
        first = min(missing, key=lambda s: (len(s), sorted(s)))
        raise MarketError(f"hospital {pref.owner}: ranking omits {sorted(first)}")


class CompiledMarket:
    """Bitmask view of a market used by the engines.

    Contract ``i`` in sorted-id order is bit ``1 << i``. Each hospital's choice
    function is tabulated over every subset of its own contracts.
    """

    def __init__(self, market: Market):
        self.market = market
        self.ids = market.ids
        self.bit = {cid: 1 << i for i, cid in enumerate(self.ids)}
        self.doctor_index = {d: i for i, d in enumerate(market.doctors)}
        self.contract_doctor = [self.doctor_index[c.doctor] for c in market.contracts]
        self.doctor_masks = [self.to_mask(market.ids_of(d)) for d in market.doctors]
        self.hospital_masks = [self.to_mask(market.ids_of(h)) for h in market.hospitals]
        self.hospital_rankings = [
            [self.to_mask(s) for s in market.hospital_prefs[h].ranking]
            for h in market.hospitals
        ]
        self.choice_tables = [
            _tabulate_choice(hmask, ranking)
            for hmask, ranking in zip(self.hospital_masks, self.hospital_rankings)
        ]
        self.full = (1 << len(self.ids)) - 1
        self._hospital_parts = list(zip(self.hospital_masks, self.choice_tables))

    def to_mask(self, ys: Iterable[str]) -> int:
        m = 0
        for y in ys:
            m |= self.bit[y]
        return m

    def to_set(self, mask: int) -> frozenset[str]:
        return frozenset(cid for i, cid in enumerate(self.ids) if mask >> i & 1)

    def compile_pref(self, pref: DoctorPreference) -> tuple[int, ...]:
        return tuple(self.bit[c] for c in pref.acceptable)

    def compile_profile(self, profile: DoctorProfile) -> tuple[tuple[int, ...], ...]:
        return tuple(self.compile_pref(profile[d]) for d in self.market.doctors)

    def choose_hospitals(self, mask: int) -> int:
        out = 0
        for hmask, table in self._hospital_parts:
            out |= table[mask & hmask]
        return out

    def choose_hospital(self, h: int, mask: int) -> int:
        return self.choice_tables[h][mask & self.hospital_masks[h]]

    @staticmethod
    def choose_doctors(mask: int, prefs: tuple[tuple[int, ...], ...]) -> int:
        out = 0
        for pref in prefs:
            for b in pref:
                if mask & b:
                    out |= b
                    break
        return out

    def outcome(self, mask: int, doctor: int) -> Outcome:
        m = mask & self.doctor_masks[doctor]
        return self.ids[m.bit_length() - 1] if m else None

    @cached_property
    def allocations(self) -> list[int]:
        """Every allocation of the whole contract set as a mask."""
        per_doctor = []
        for dmask in self.doctor_masks:
            bits = [1 << i for i in range(len(self.ids)) if dmask >> i & 1]
            per_doctor.append([0, *bits])
        return sorted(
            (sum(combo) for combo in itertools.product(*per_doctor)),
            key=lambda m: (bin(m).count("1"), sorted(self.to_set(m))),
        )


def _submasks(mask: int) -> Iterator[int]:
    sub = mask
    while True:
        yield sub
        if sub == 0:
            return
        sub = (sub - 1) & mask


def _tabulate_choice(hmask: int, ranking: list[int]) -> dict[int, int]:
    table = {}
    for sub in _submasks(hmask):
        for r in ranking:
            if r & ~sub == 0:
                table[sub] = r
                break
    return table


def restrict(market: Market, ys: Iterable[str], agent: str) -> frozenset[str]:
    """Contracts of ``ys`` that involve ``agent`` (a doctor or a hospital)."""
    return market.check_subset(ys) & market.ids_of(agent)


def allocations_of(market: Market, ys: Iterable[str]) -> list[frozenset[str]]:
    """All allocations contained in ``ys``, smallest first."""
    ys = market.check_subset(ys)
    return list(_allocation_subsets([market.contract[y] for y in ys]))


def choice_doctor(pref: DoctorPreference, ys: Iterable[str]) -> Outcome:
    ys = set(ys)
    for c in pref.acceptable:
        if c in ys:
            return c
    return None


def choice_hospital(pref: HospitalPreference, ys: Iterable[str]) -> frozenset[str]:
    # The ranking is complete over A(X_h), so its first member inside ys is
    # the maximum of A(ys_h).
    ys = frozenset(ys)
    for s in pref.ranking:
        if s <= ys:
            return s
    raise MarketError(f"hospital {pref.owner}: ranking lacks the empty allocation")


def choice_doctors_all(profile: DoctorProfile, ys: Iterable[str]) -> frozenset[str]:
    ys = frozenset(ys)
    chosen = (choice_doctor(p, ys) for p in profile.prefs.values())
    return frozenset(c for c in chosen if c is not None)


def choice_hospitals_all(market: Market, ys: Iterable[str]) -> frozenset[str]:
    ys = market.check_subset(ys)
    out: frozenset[str] = frozenset()
    for h in market.hospitals:
        out |= choice_hospital(market.hospital_prefs[h], ys)
    return out


def outcome_of(market: Market, allocation: Iterable[str], doctor: str) -> Outcome:
    """The contract of ``doctor`` in ``allocation``, or ``None``."""
    mine = restrict(market, allocation, doctor)
    if len(mine) > 1:
        raise MarketError(f"{sorted(mine)} is not an allocation")
    return next(iter(mine), None)
