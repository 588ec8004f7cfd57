"""Reference implementations written straight from the definitions.

Nothing here imports the package's engines: sets are plain frozensets of
contract ids, preferences are lists, and every quantifier is a literal loop.
The tests compare the package against these.
"""
from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Callable, Iterable, Optional, Sequence

Ids = frozenset


def powerset(items: Iterable) -> list[frozenset]:
    items = list(items)
    return [
        frozenset(c)
        for r in range(len(items) + 1)
        for c in itertools.combinations(items, r)
    ]


def is_allocation(ys: Iterable[str], doctor_of: dict[str, str]) -> bool:
    ds = [doctor_of[y] for y in ys]
    return len(ds) == len(set(ds))


def allocations(ys: Iterable[str], doctor_of: dict[str, str]) -> list[frozenset]:
    return [s for s in powerset(ys) if is_allocation(s, doctor_of)]


def choose_from_ranking(ranking: Sequence[frozenset], ys: Iterable[str]) -> frozenset:
    """The best ranked set that is contained in ``ys``."""
    ys = set(ys)
    for s in ranking:
        if set(s) <= ys:
            return frozenset(s)
    raise AssertionError("ranking lacks the empty set")


def choose_doctor(acceptable: Sequence[str], ys: Iterable[str]) -> Optional[str]:
    ys = set(ys)
    for c in acceptable:
        if c in ys:
            return c
    return None


class NaiveMarket:
    """Plain-data copy of a market: dicts and lists only."""

    def __init__(self, market):
        data = market.to_dict()
        self.doctors = list(data["doctors"])
        self.hospitals = list(data["hospitals"])
        self.doctor_of = {c["id"]: c["doctor"] for c in data["contracts"]}
        self.hospital_of = {c["id"]: c["hospital"] for c in data["contracts"]}
        self.ids = sorted(self.doctor_of)
        self.rankings = {
            h: [frozenset(s) for s in spec["ranking"]]
            for h, spec in data["hospital_prefs"].items()
        }

    def own(self, agent: str) -> list[str]:
        return [
            c for c in self.ids if agent in (self.doctor_of[c], self.hospital_of[c])
        ]

    def c_h(self, h: str, ys: Iterable[str]) -> frozenset:
        return choose_from_ranking(self.rankings[h], [y for y in ys if self.hospital_of[y] == h])

    def c_d(self, acceptable: Sequence[str], ys: Iterable[str]) -> frozenset:
        c = choose_doctor(acceptable, ys)
        return frozenset() if c is None else frozenset([c])

    def c_H(self, ys) -> frozenset:
        return frozenset().union(*(self.c_h(h, ys) for h in self.hospitals))

    def c_D(self, profile: dict[str, Sequence[str]], ys) -> frozenset:
        return frozenset().union(
            *(self.c_d(profile[d], [y for y in ys if self.doctor_of[y] == d]) for d in self.doctors)
        )

    def allocations(self) -> list[frozenset]:
        return allocations(self.ids, self.doctor_of)

    def outcome(self, allocation, doctor: str) -> Optional[str]:
        mine = [c for c in allocation if self.doctor_of[c] == doctor]
        assert len(mine) <= 1
        return mine[0] if mine else None


def stable_allocations(nm: NaiveMarket, profile: dict[str, Sequence[str]]) -> list[frozenset]:
    out = []
    for y in nm.allocations():
        if nm.c_D(profile, y) != y or nm.c_H(y) != y:
            continue
        blocked = False
        for x in nm.ids:
            if x in y:
                continue
            yx = y | {x}
            d, h = nm.doctor_of[x], nm.hospital_of[x]
            in_d = x in nm.c_d(profile[d], [c for c in yx if nm.doctor_of[c] == d])
            if in_d and x in nm.c_h(h, yx):
                blocked = True
                break
        if not blocked:
            out.append(y)
    return out


def deferred_acceptance(nm: NaiveMarket, profile, side: str = "doctors") -> frozenset:
    """The loop exactly as written: offer from what is left, drop rejections."""
    left = frozenset(nm.ids)
    while True:
        if side == "doctors":
            offers = nm.c_D(profile, left)
            kept = nm.c_H(offers)
        else:
            offers = nm.c_H(left)
            kept = nm.c_D(profile, offers)
        if kept == offers:
            return kept
        left = left - (offers - kept)


def doctor_rank(acceptable: Sequence[str], outcome: Optional[str], own: Sequence[str]) -> tuple:
    if outcome is None:
        return (1, 0)
    if outcome in acceptable:
        return (0, list(acceptable).index(outcome))
    return (2, sorted(own).index(outcome))


def quantile(nm: NaiveMarket, profile, q: Fraction) -> frozenset:
    stable = stable_allocations(nm, profile)
    k = len(stable)
    pos = max(1, math.ceil(Fraction(k) * Fraction(q)))
    out = set()
    for d in nm.doctors:
        got = sorted(
            (nm.outcome(s, d) for s in stable),
            key=lambda o: doctor_rank(profile[d], o, nm.own(d)),
        )
        if got[pos - 1] is not None:
            out.add(got[pos - 1])
    return frozenset(out)


def preference_domain(own: Sequence[str]) -> list[tuple[str, ...]]:
    return [
        p
        for r in range(len(own) + 1)
        for s in itertools.combinations(sorted(own), r)
        for p in itertools.permutations(s)
    ]


def audit(nm: NaiveMarket, rule: Callable[[dict], frozenset]) -> dict:
    """Manipulations and obvious manipulations by literal quantification."""
    domains = {d: preference_domain(nm.own(d)) for d in nm.doctors}
    outcome = {}
    for combo in itertools.product(*(domains[d] for d in nm.doctors)):
        profile = dict(zip(nm.doctors, combo))
        alloc = rule(profile)
        for d in nm.doctors:
            outcome[(combo, d)] = nm.outcome(alloc, d)
    manipulations, obvious = [], []
    for i, d in enumerate(nm.doctors):
        others = [domains[e] for e in nm.doctors if e != d]

        def at(report, rest):
            combo = list(rest)
            combo.insert(i, report)
            return outcome[(tuple(combo), d)]

        rests = list(itertools.product(*others))
        for truth in domains[d]:
            rank = lambda o: doctor_rank(truth, o, nm.own(d))  # noqa: E731
            t_opts = {at(truth, r) for r in rests}
            for lie in domains[d]:
                if lie == truth:
                    continue
                if not any(rank(at(lie, r)) < rank(at(truth, r)) for r in rests):
                    continue
                manipulations.append((d, truth, lie))
                m_opts = {at(lie, r) for r in rests}
                worse_worst = max(map(rank, m_opts)) < max(map(rank, t_opts))
                better_best = min(map(rank, m_opts)) < min(map(rank, t_opts))
                if worse_worst or better_best:
                    obvious.append((d, truth, lie))
    return {"manipulations": manipulations, "obvious": obvious}


def substitutable(ranking, own, doctor_of) -> bool:
    """x chosen from W stays chosen from every Y inside W that contains it."""
    for w in powerset(own):
        cw = choose_from_ranking(ranking, w)
        for y in powerset(w):
            cy = choose_from_ranking(ranking, y)
            for x in y:
                if x in cw and x not in cy:
                    return False
    return True


def lad(ranking, own) -> bool:
    for z in powerset(own):
        cz = choose_from_ranking(ranking, z)
        for y in powerset(z):
            if len(choose_from_ranking(ranking, y)) > len(cz):
                return False
    return True


def responsive(ranking, quota, own, doctor_of) -> bool:
    pos = {s: i for i, s in enumerate(ranking)}
    empty = frozenset()
    allocs = allocations(own, doctor_of)
    for z in allocs:
        if len(z) > quota and pos[z] < pos[empty]:
            return False
    singles = [empty] + [frozenset([c]) for c in own]
    for z in allocs:
        if len(z) >= quota:
            continue
        for sx in singles:
            for sy in singles:
                if sx == sy or (sx | sy) & z:
                    continue
                zx, zy = z | sx, z | sy
                if zx not in pos or zy not in pos:
                    continue
                if (pos[zx] < pos[zy]) != (pos[sx] < pos[sy]):
                    return False
    return True
