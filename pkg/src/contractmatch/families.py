"""Generators of hospital rankings and whole markets for desk-scale sweeps.

A hospital's choice function depends only on the allocations it ranks above
the empty set. Catalogs therefore enumerate those prefixes, keep one ranking
per distinct choice function, and complete it with the remaining allocations
below the empty set in canonical order.
"""
from __future__ import annotations

import itertools
import random
from typing import Iterable, Iterator, Mapping, Optional, Sequence

from .axioms import check_substitutable, generate_responsive
from .market import (
    Contract,
    HospitalPreference,
    Market,
    _allocation_subsets,
    _tabulate_choice,
)


def canonical_ranking(
    hospital: str, prefix: Sequence[frozenset[str]], contracts: Iterable[Contract]
) -> HospitalPreference:
    """Rank ``prefix`` first, then the empty set, then everything else."""
    own = [c for c in contracts if c.hospital == hospital]
    prefix = [frozenset(s) for s in prefix]
    rest = [s for s in _allocation_subsets(own) if s and s not in prefix]
    return HospitalPreference(hospital, (*prefix, frozenset(), *rest))


def prefix_rankings(
    hospital: str,
    contracts: Iterable[Contract],
    max_prefix: Optional[int] = None,
    singletons_only: bool = False,
) -> Iterator[HospitalPreference]:
    """Every ranking whose part above the empty set has at most ``max_prefix``
    members, the rest in canonical order."""
    own = [c for c in contracts if c.hospital == hospital]
    candidates = [s for s in _allocation_subsets(own) if s]
    if singletons_only:
        candidates = [s for s in candidates if len(s) == 1]
    top = len(candidates) if max_prefix is None else min(max_prefix, len(candidates))
    for r in range(top + 1):
        for prefix in itertools.permutations(candidates, r):
            yield canonical_ranking(hospital, prefix, own)


def choice_signature(pref: HospitalPreference, contracts: Iterable[Contract]) -> tuple:
    own = sorted(c.id for c in contracts if c.hospital == pref.owner)
    bit = {cid: 1 << i for i, cid in enumerate(own)}
    ranking = [sum(bit[c] for c in s) for s in pref.ranking]
    table = _tabulate_choice((1 << len(own)) - 1, ranking)
    return tuple(sorted(table.items()))


def choice_catalog(
    hospital: str,
    contracts: Iterable[Contract],
    max_prefix: Optional[int] = None,
    substitutable: bool = True,
    singletons_only: bool = False,
) -> list[HospitalPreference]:
    """One ranking per distinct choice function, optionally only substitutable ones."""
    own = [c for c in contracts if c.hospital == hospital]
    seen = set()
    out = []
    for pref in prefix_rankings(hospital, own, max_prefix, singletons_only):
        sig = choice_signature(pref, own)
        if sig in seen:
            continue
        seen.add(sig)
        if substitutable and check_substitutable(pref, own) is not None:
            continue
        out.append(pref)
    return out


def substitutable_catalog(
    hospital: str, contracts: Iterable[Contract]
) -> list[HospitalPreference]:
    """Every substitutable choice function of one hospital, exhaustively.

    Depth-first search over the list of allocations ranked above the empty
    set. The search state is the partial choice function fixed so far, and a
    state is expanded once, so every returned ranking has its own choice
    function. A branch is cut once two nested sets whose choices are already
    fixed break substitutability, since later members cannot change them.
    """
    own = sorted((c for c in contracts if c.hospital == hospital))
    ids = [c.id for c in own]
    n = len(ids)
    bit = {cid: 1 << i for i, cid in enumerate(ids)}
    full = (1 << n) - 1
    subsets = list(range(full + 1))
    candidates = [sum(bit[c] for c in s) for s in _allocation_subsets(own) if s]
    as_set = lambda m: frozenset(c for c in ids if m & bit[c])  # noqa: E731
    found = []
    seen: set[frozenset] = set()

    def violates(choice: dict[int, int], final: bool) -> bool:
        for w in subsets:
            cw = choice.get(w, 0 if final else None)
            if cw is None:
                continue
            for i in range(n):
                z = 1 << i
                if not w & z:
                    continue
                y = w & ~z
                cy = choice.get(y, 0 if final else None)
                if cy is not None and cw & ~z & ~cy:
                    return True
        return False

    def extend(prefix: list[int], choice: dict[int, int]) -> None:
        state = frozenset(choice.items())
        if state in seen:
            return
        seen.add(state)
        if not violates(choice, final=True):
            found.append(canonical_ranking(hospital, [as_set(m) for m in prefix], own))
        for r in candidates:
            if any(e & ~r == 0 for e in prefix):
                continue
            nxt = dict(choice)
            for y in subsets:
                if y not in nxt and r & ~y == 0:
                    nxt[y] = r
            if not violates(nxt, final=False):
                extend(prefix + [r], nxt)

    extend([], {})
    return found


def _contracts_from_pairs(pairs: Sequence[tuple[str, str]]) -> list[Contract]:
    return [Contract(f"c{i}", d, h) for i, (d, h) in enumerate(pairs)]


def contract_structures(
    doctors: Sequence[str], hospitals: Sequence[str], max_contracts: int, min_contracts: int = 1
) -> Iterator[list[Contract]]:
    """Every multiset of doctor-hospital pairs of the given sizes, as contracts."""
    pairs = list(itertools.product(doctors, hospitals))
    for n in range(min_contracts, max_contracts + 1):
        for combo in itertools.combinations_with_replacement(pairs, n):
            yield _contracts_from_pairs(combo)


def _markets(doctors, hospitals, contracts, catalogs) -> Iterator[Market]:
    for prefs in itertools.product(*catalogs):
        yield Market(doctors, hospitals, contracts, {p.owner: p for p in prefs})


def one_to_one_contract_markets(
    n_doctors: int = 2, n_hospitals: int = 2, max_contracts: int = 4
) -> Iterator[Market]:
    """All markets with at most ``max_contracts`` contracts (several per pair
    allowed) where hospitals accept single contracts only, one market per
    combination of hospital choice functions."""
    doctors = tuple(f"d{i + 1}" for i in range(n_doctors))
    hospitals = tuple(f"h{i + 1}" for i in range(n_hospitals))
    for contracts in contract_structures(doctors, hospitals, max_contracts):
        catalogs = [
            choice_catalog(h, contracts, singletons_only=True) for h in hospitals
        ]
        yield from _markets(doctors, hospitals, contracts, catalogs)


def no_contract_markets(
    n_doctors: int, n_hospitals: int, catalog_prefix: Optional[int] = None
) -> Iterator[Market]:
    """All markets with at most one contract per pair and every combination of
    substitutable hospital choice functions."""
    doctors = tuple(f"d{i + 1}" for i in range(n_doctors))
    hospitals = tuple(f"h{i + 1}" for i in range(n_hospitals))
    pairs = list(itertools.product(doctors, hospitals))
    for r in range(1, len(pairs) + 1):
        for chosen in itertools.combinations(pairs, r):
            contracts = _contracts_from_pairs(chosen)
            catalogs = [choice_catalog(h, contracts, catalog_prefix) for h in hospitals]
            yield from _markets(doctors, hospitals, contracts, catalogs)


def _hospital_types(doctors: Sequence[str]) -> list[tuple]:
    """Every (partner set, ranking prefix, choice signature) a hospital can have
    in a market without contracts, prefixes over doctor sets."""
    out = []
    for r in range(len(doctors) + 1):
        for partners in itertools.combinations(doctors, r):
            contracts = [Contract(d, d, "h") for d in partners]
            for pref in substitutable_catalog("h", contracts):
                top = pref.ranking[: pref.ranking.index(frozenset())]
                table = choice_signature(pref, contracts)
                sig = frozenset(
                    (frozenset(_bits_to(partners, y)), frozenset(_bits_to(partners, c)))
                    for y, c in table
                )
                out.append((frozenset(partners), tuple(top), sig))
    return out


def _bits_to(ids: Sequence[str], mask: int) -> list[str]:
    return [c for i, c in enumerate(ids) if mask >> i & 1]


def _relabel(sig: frozenset, perm: Mapping[str, str]) -> tuple:
    return tuple(
        sorted(
            (tuple(sorted(perm[d] for d in y)), tuple(sorted(perm[d] for d in c)))
            for y, c in sig
        )
    )


def no_contract_markets_up_to_isomorphism(
    n_doctors: int, n_hospitals: int
) -> Iterator[Market]:
    """One market per class of :func:`no_contract_markets` under renaming of
    doctors and of hospitals, including hospitals without partners.

    Verdicts of the audit do not depend on names, so sweeping these
    representatives covers the whole family.
    """
    doctors = tuple(f"d{i + 1}" for i in range(n_doctors))
    hospitals = tuple(f"h{i + 1}" for i in range(n_hospitals))
    types = _hospital_types(doctors)
    perms = [dict(zip(doctors, p)) for p in itertools.permutations(doctors)]
    seen: set[tuple] = set()
    for combo in itertools.combinations_with_replacement(range(len(types)), n_hospitals):
        if all(not types[i][0] for i in combo):
            continue
        key = min(tuple(sorted(_relabel(types[i][2], p) for i in combo)) for p in perms)
        if key in seen:
            continue
        seen.add(key)
        contracts, prefs = [], {}
        for h, i in zip(hospitals, combo):
            partners, top, _ = types[i]
            cid = {d: f"{d}{h}" for d in partners}
            contracts += [Contract(cid[d], d, h) for d in sorted(partners)]
            prefix = [frozenset(cid[d] for d in s) for s in top]
            prefs[h] = prefix
        yield Market(
            doctors,
            hospitals,
            contracts,
            {h: canonical_ranking(h, prefs[h], contracts) for h in hospitals},
        )


def random_substitutable_preference(
    hospital: str,
    contracts: Iterable[Contract],
    rng: random.Random,
    steps: int = 40,
) -> HospitalPreference:
    """Random substitutable ranking.

    Half of the draws rejection-sample a random short list of allocations
    ranked above the empty set. The rest start from a random responsive
    ranking and walk by adjacent swaps at or above the empty set, keeping a
    swap only if the result is still substitutable.
    """
    own = sorted(c for c in contracts if c.hospital == hospital)
    if own and rng.random() < 0.5:
        candidates = [s for s in _allocation_subsets(own) if s]
        for _ in range(200):
            prefix = rng.sample(candidates, rng.randint(1, min(4, len(candidates))))
            cand = canonical_ranking(hospital, prefix, own)
            if check_substitutable(cand, own) is None:
                return cand
    order = own[:]
    rng.shuffle(order)
    cut = rng.randint(0, len(order))
    quota = rng.randint(1, max(1, len(order)))
    pref = generate_responsive(order[:cut], quota, order[cut:])
    if not own:
        return HospitalPreference(hospital, pref.ranking)
    ranking = list(pref.ranking)
    for _ in range(steps):
        top = min(ranking.index(frozenset()) + 1, len(ranking) - 1)
        if top < 1:
            break
        i = rng.randrange(top)
        trial = ranking[:]
        trial[i], trial[i + 1] = trial[i + 1], trial[i]
        cand = HospitalPreference(hospital, tuple(trial))
        if check_substitutable(cand, own) is None:
            ranking = trial
    return HospitalPreference(hospital, tuple(ranking))


def random_market(
    rng: random.Random,
    n_doctors: int,
    n_hospitals: int,
    n_contracts: int,
    one_per_pair: bool = False,
    steps: int = 40,
) -> Market:
    """Random market with substitutable hospitals; every agent has a contract
    when the contract count allows it."""
    doctors = tuple(f"d{i + 1}" for i in range(n_doctors))
    hospitals = tuple(f"h{i + 1}" for i in range(n_hospitals))
    all_pairs = list(itertools.product(doctors, hospitals))
    if one_per_pair:
        n_contracts = min(n_contracts, len(all_pairs))
        pairs = rng.sample(all_pairs, n_contracts)
    else:
        pairs = [rng.choice(all_pairs) for _ in range(n_contracts)]
    pairs.sort()
    contracts = _contracts_from_pairs(pairs)
    prefs = {
        h: random_substitutable_preference(h, contracts, rng, steps) for h in hospitals
    }
    return Market(doctors, hospitals, contracts, prefs)
