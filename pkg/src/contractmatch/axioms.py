"""Brute-force checkers for conditions on hospital preferences.

Substitutability and the law of aggregate demand quantify over every pair of
nested contract sets, allocations or not, because hospitals choose from
arbitrary available sets while deferred acceptance runs. Both are checked in
their single-removal form (``W`` against ``W - {z}``), which is equivalent by
chaining and costs ``n * 2**n`` choice lookups instead of ``3**n``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Optional, Sequence, Union

from .market import (
    Contract,
    HospitalPreference,
    Market,
    MarketError,
    _allocation_subsets,
    _submasks,
    _tabulate_choice,
    check_complete_ranking,
    choice_hospital,
)

SUBSTITUTABILITY = "substitutability"
LAD = "lad"
RESPONSIVENESS = "responsiveness"
AXIOMS = (SUBSTITUTABILITY, LAD, RESPONSIVENESS)


@dataclass(frozen=True)
class AxiomViolation:
    """A replayable counterexample to one axiom for one hospital.

    ``witness`` keys by axiom:

    * substitutability: ``W``, ``Y`` (``Y`` inside ``W``) and ``x``, chosen
      from ``W`` but not from ``Y``;
    * lad: ``Y`` inside ``Z`` with ``|C(Y)| > |C(Z)|``;
    * responsiveness: ``condition`` 1 with an oversized ``Z`` ranked above
      the empty set, or ``condition`` 2 with ``Z``, ``x``, ``y`` (``None``
      stands for no contract) where the comparison of ``Z+x`` and ``Z+y``
      disagrees with that of ``{x}`` and ``{y}``.
    """

    axiom: str
    hospital: str
    witness: Mapping[str, object] = field(hash=False)

    def describe(self) -> str:
        parts = []
        for k, v in self.witness.items():
            if isinstance(v, frozenset):
                v = "{" + ",".join(sorted(v)) + "}"
            parts.append(f"{k}={v}")
        return f"{self.axiom} violated at {self.hospital}: " + " ".join(parts)


class _View:
    """A hospital's contracts as local bits plus its tabulated choice function."""

    def __init__(self, pref: HospitalPreference, contracts: Iterable[Contract]):
        own = sorted(c for c in contracts if c.hospital == pref.owner)
        check_complete_ranking(pref, own)
        self.pref = pref
        self.own = own
        self.ids = [c.id for c in own]
        self.bit = {cid: 1 << i for i, cid in enumerate(self.ids)}
        self.full = (1 << len(own)) - 1
        self.ranking = [self.mask(s) for s in pref.ranking]
        self.rank = {m: i for i, m in enumerate(self.ranking)}
        self.choice = _tabulate_choice(self.full, self.ranking)

    def mask(self, ys: Iterable[str]) -> int:
        m = 0
        for y in ys:
            m |= self.bit[y]
        return m

    def set(self, mask: int) -> frozenset[str]:
        return frozenset(c for i, c in enumerate(self.ids) if mask >> i & 1)

    def canonical_subsets(self) -> list[int]:
        return sorted(
            _submasks(self.full),
            key=lambda m: (bin(m).count("1"), sorted(self.set(m))),
        )


def substitutability_violations(
    pref: HospitalPreference, contracts: Iterable[Contract]
) -> Iterator[AxiomViolation]:
    v = _View(pref, contracts)
    for w in v.canonical_subsets():
        chosen = v.choice[w]
        for i, cid in enumerate(v.ids):
            z = 1 << i
            if not w & z:
                continue
            y = w & ~z
            lost = chosen & ~z & ~v.choice[y]
            for j, x in enumerate(v.ids):
                if lost >> j & 1:
                    yield AxiomViolation(
                        SUBSTITUTABILITY,
                        pref.owner,
                        {"W": v.set(w), "Y": v.set(y), "x": x},
                    )


def lad_violations(
    pref: HospitalPreference, contracts: Iterable[Contract]
) -> Iterator[AxiomViolation]:
    v = _View(pref, contracts)
    for z in v.canonical_subsets():
        big = bin(v.choice[z]).count("1")
        for i in range(len(v.ids)):
            if z >> i & 1:
                y = z & ~(1 << i)
                if bin(v.choice[y]).count("1") > big:
                    yield AxiomViolation(LAD, pref.owner, {"Y": v.set(y), "Z": v.set(z)})


def responsiveness_violations(
    pref: HospitalPreference, quota: int, contracts: Iterable[Contract]
) -> Iterator[AxiomViolation]:
    if quota < 0:
        raise MarketError("quota must be non-negative")
    v = _View(pref, contracts)
    empty_rank = v.rank[0]
    allocations = [v.mask(s) for s in _allocation_subsets(v.own)]
    for z in allocations:
        if bin(z).count("1") > quota and v.rank[z] < empty_rank:
            yield AxiomViolation(RESPONSIVENESS, pref.owner, {"condition": 1, "Z": v.set(z)})
    options: list[int] = [0] + [1 << i for i in range(len(v.ids))]
    for z in allocations:
        if bin(z).count("1") >= quota:
            continue
        for x in options:
            for y in options:
                if x == y or (x | y) & z:
                    continue
                zx, zy = z | x, z | y
                if zx not in v.rank or zy not in v.rank:
                    continue
                if (v.rank[zx] < v.rank[zy]) != (v.rank[x] < v.rank[y]):
                    yield AxiomViolation(
                        RESPONSIVENESS,
                        pref.owner,
                        {
                            "condition": 2,
                            "Z": v.set(z),
                            "x": next(iter(v.set(x)), None),
                            "y": next(iter(v.set(y)), None),
                        },
                    )


def check_substitutable(
    pref: HospitalPreference, contracts: Iterable[Contract]
) -> Optional[AxiomViolation]:
    """First substitutability violation in canonical order, or ``None``."""
    return next(substitutability_violations(pref, contracts), None)


def check_lad(
    pref: HospitalPreference, contracts: Iterable[Contract]
) -> Optional[AxiomViolation]:
    """First violation of the law of aggregate demand, or ``None``."""
    return next(lad_violations(pref, contracts), None)


def check_responsive(
    pref: HospitalPreference, quota: int, contracts: Iterable[Contract]
) -> Optional[AxiomViolation]:
    """First violation of responsiveness with the given quota, or ``None``."""
    return next(responsiveness_violations(pref, quota, contracts), None)


def replay_violation(
    violation: AxiomViolation,
    pref: HospitalPreference,
    contracts: Iterable[Contract],
    quota: Optional[int] = None,
) -> bool:
    """Re-verify a violation straight from the ranking, without choice tables."""
    w = violation.witness
    if violation.axiom == SUBSTITUTABILITY:
        x = w["x"]
        return (
            w["Y"] <= w["W"]
            and x in w["Y"]
            and x in choice_hospital(pref, w["W"])
            and x not in choice_hospital(pref, w["Y"])
        )
    if violation.axiom == LAD:
        return w["Y"] <= w["Z"] and len(choice_hospital(pref, w["Y"])) > len(
            choice_hospital(pref, w["Z"])
        )
    if violation.axiom == RESPONSIVENESS:
        if quota is None:
            raise MarketError("replaying responsiveness needs the quota")
        ranking = list(pref.ranking)
        pos = ranking.index
        if w["condition"] == 1:
            return len(w["Z"]) > quota and pos(w["Z"]) < pos(frozenset())
        z = w["Z"]
        sx = frozenset([w["x"]]) if w["x"] is not None else frozenset()
        sy = frozenset([w["y"]]) if w["y"] is not None else frozenset()
        if len(z) >= quota or z & (sx | sy) or sx == sy:
            return False
        return (pos(z | sx) < pos(z | sy)) != (pos(sx) < pos(sy))
    raise MarketError(f"unknown axiom {violation.axiom!r}")


def generate_responsive(
    ranking: Sequence[Contract],
    quota: int,
    unacceptable: Sequence[Contract] = (),
) -> HospitalPreference:
    """Canonical responsive ranking for one hospital.

    ``ranking`` orders the acceptable contracts, best first; ``unacceptable``
    lists the hospital's remaining contracts. Allocations of size at most
    ``quota`` are ordered lexicographically by the sorted ranks of their
    members padded up to ``quota`` with the rank of an empty slot, which sits
    between the acceptable and the unacceptable contracts. Larger allocations go
    below everything else.
    """
    if quota < 0:
        raise MarketError("quota must be non-negative")
    contracts = [*ranking, *unacceptable]
    owners = {c.hospital for c in contracts}
    if len(owners) > 1:
        raise MarketError("contracts of several hospitals given")
    if len({c.id for c in contracts}) != len(contracts):
        raise MarketError("duplicate contract in ranking")
    owner = owners.pop() if owners else ""
    slot = len(ranking)
    rank = {c.id: i for i, c in enumerate(ranking)}
    rank.update({c.id: slot + 1 + i for i, c in enumerate(unacceptable)})

    def vector(s: frozenset[str]) -> list[int]:
        return sorted([rank[c] for c in s] + [slot] * (quota - len(s)))

    allocations = list(_allocation_subsets(contracts))
    small = sorted((s for s in allocations if len(s) <= quota), key=vector)
    large = [s for s in allocations if len(s) > quota]
    return HospitalPreference(owner, tuple(small + large))


def _normalize_require(require: Iterable[str]) -> list[str]:
    aliases = {"subs": SUBSTITUTABILITY, "resp": RESPONSIVENESS}
    out = []
    for name in require:
        name = aliases.get(name, name)
        if name not in AXIOMS:
            raise MarketError(f"unknown axiom {name!r}")
        out.append(name)
    return out


def validate_market(
    market: Market,
    require: Iterable[str] = (SUBSTITUTABILITY,),
    quota: Union[int, Mapping[str, int], None] = None,
    collect_all: bool = False,
) -> list[AxiomViolation]:
    """Run the requested checkers on every hospital; an empty list means pass.

    Verdicts without ``collect_all`` are memoized on the market.
    """
    found = []
    for axiom in _normalize_require(require):
        for h in market.hospitals:
            pref = market.hospital_prefs[h]
            contracts = market.contracts_of(h)
            if axiom == RESPONSIVENESS:
                if quota is None:
                    raise MarketError("responsiveness needs a quota")
                q = quota if isinstance(quota, int) else quota[h]
                gen = responsiveness_violations(pref, q, contracts)
                key = (axiom, h, q)
            elif axiom == SUBSTITUTABILITY:
                gen = substitutability_violations(pref, contracts)
                key = (axiom, h)
            else:
                gen = lad_violations(pref, contracts)
                key = (axiom, h)
            if collect_all:
                found.extend(gen)
                continue
            cache = market._cache.setdefault("axioms", {})
            if key not in cache:
                cache[key] = next(gen, None)
            if cache[key] is not None:
                found.append(cache[key])
    return found
