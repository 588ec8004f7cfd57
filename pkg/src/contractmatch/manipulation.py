"""Exhaustive search for doctor manipulations and obvious manipulations.

A doctor's preference domain is every ordering of every subset of its
contracts, used as the acceptable list. An audit evaluates the rule once per
profile of the full product domain, stores each doctor's outcome as an
integer code in a numpy array, and answers every manipulation and option-set
question for every (doctor, truth, misreport) triple from that array.
"""
from __future__ import annotations

import itertools
import math
import os
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .market import DoctorPreference, DoctorProfile, Market, MarketError, Outcome
from .mechanisms import Rule, RuleError, apply_rule, profile_key, rule_evaluator

DEFAULT_BUDGET = 10**7
BUDGET_ENV = "CONTRACTMATCH_BUDGET"

UNMATCHED = -1
MISSING = -2


class GuardrailError(RuntimeError):
    """The requested enumeration is larger than the configured budget."""

    def __init__(self, size: int, budget: int):
        super().__init__(f"enumeration of {size} profiles exceeds budget {budget}")
        self.size = size
        self.budget = budget


class Obviousness(str, Enum):
    NONE = "none"
    WORST_CASE = "worst_case"
    BEST_CASE = "best_case"
    BOTH = "both"

    @classmethod
    def of(cls, worst: bool, best: bool) -> "Obviousness":
        if worst and best:
            return cls.BOTH
        if worst:
            return cls.WORST_CASE
        if best:
            return cls.BEST_CASE
        return cls.NONE


def default_budget() -> int:
    return int(os.environ.get(BUDGET_ENV, DEFAULT_BUDGET))


def _guard(size: int, budget: Optional[int]) -> None:
    budget = default_budget() if budget is None else budget
    if size > budget:
        raise GuardrailError(size, budget)


def domain_size(n_contracts: int) -> int:
    """Number of preferences over ``n`` contracts: the sum over subsets S of |S|!."""
    return sum(math.comb(n_contracts, r) * math.factorial(r) for r in range(n_contracts + 1))


@dataclass(frozen=True)
class PreferenceDomain:
    doctor: str
    members: tuple[DoctorPreference, ...]

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def index(self, pref: DoctorPreference) -> int:
        return self.members.index(pref)


def enumerate_preferences(
    market: Market, doctor: str, budget: Optional[int] = None
) -> PreferenceDomain:
    """All preferences of ``doctor``: shorter acceptable lists first, then
    lexicographic by contract id."""
    own = sorted(market.ids_of(doctor))
    _guard(domain_size(len(own)), budget)
    members = tuple(
        DoctorPreference(doctor, perm)
        for r in range(len(own) + 1)
        for perm in itertools.permutations(own, r)
    )
    return PreferenceDomain(doctor, members)


def worst_in(pref: DoctorPreference, outcomes: Iterable[Outcome]) -> Outcome:
    outcomes = list(outcomes)
    if not outcomes:
        raise MarketError("worst of an empty outcome set")
    return max(outcomes, key=pref.key)


def best_in(pref: DoctorPreference, outcomes: Iterable[Outcome]) -> Outcome:
    outcomes = list(outcomes)
    if not outcomes:
        raise MarketError("best of an empty outcome set")
    return min(outcomes, key=pref.key)


def _subprofiles(market: Market, doctor: str, budget: Optional[int]):
    others = [d for d in market.doctors if d != doctor]
    domains = [enumerate_preferences(market, d, budget) for d in others]
    _guard(math.prod(len(dom) for dom in domains), budget)
    for combo in itertools.product(*domains):
        yield dict(zip(others, combo))


def _outcome_at(rule: Rule, market: Market, profile: DoctorProfile, doctor: str):
    """The doctor's outcome, or ``MISSING`` for a profile a table rule lacks."""
    try:
        allocation = apply_rule(rule, market, profile)
    except MarketError:
        if rule.kind == "table":
            return MISSING
        raise
    mine = allocation & market.ids_of(doctor)
    return next(iter(mine), None)


def option_set(
    rule: Rule,
    market: Market,
    doctor: str,
    pref: DoctorPreference,
    budget: Optional[int] = None,
) -> frozenset[Outcome]:
    """Outcomes ``doctor`` can get by reporting ``pref`` as the others' reports
    range over their whole domains (covered profiles only, for table rules)."""
    cache = market._cache.setdefault("options", {})
    key = (rule, doctor, pref.acceptable)
    if key not in cache:
        found = set()
        for others in _subprofiles(market, doctor, budget):
            prof = DoctorProfile({**others, doctor: pref})
            out = _outcome_at(rule, market, prof, doctor)
            if out is not MISSING:
                found.add(out)
        cache[key] = frozenset(found)
    return cache[key]


@dataclass(frozen=True)
class ManipulationWitness:
    doctor: str
    truth: DoctorPreference
    misreport: DoctorPreference
    subprofile: tuple[tuple[str, DoctorPreference], ...]
    truthful_outcome: Outcome
    manipulated_outcome: Outcome
    obvious: Optional[Obviousness] = None
    truth_options: Optional[frozenset] = None
    misreport_options: Optional[frozenset] = None

    def profiles(self) -> tuple[DoctorProfile, DoctorProfile]:
        others = dict(self.subprofile)
        return (
            DoctorProfile({**others, self.doctor: self.truth}),
            DoctorProfile({**others, self.doctor: self.misreport}),
        )


def find_manipulations(
    rule: Rule,
    market: Market,
    doctor: str,
    truth: DoctorPreference,
    budget: Optional[int] = None,
) -> list[ManipulationWitness]:
    """One witness per (misreport, subprofile) pair that strictly helps ``doctor``."""
    domain = enumerate_preferences(market, doctor, budget)
    subs = list(_subprofiles(market, doctor, budget))
    truthful = [
        _outcome_at(rule, market, DoctorProfile({**o, doctor: truth}), doctor) for o in subs
    ]
    found = []
    for mis in domain:
        if mis == truth:
            continue
        for others, honest in zip(subs, truthful):
            if honest is MISSING:
                continue
            got = _outcome_at(rule, market, DoctorProfile({**others, doctor: mis}), doctor)
            if got is not MISSING and truth.prefers(got, honest):
                found.append(
                    ManipulationWitness(
                        doctor, truth, mis, tuple(sorted(others.items())), honest, got
                    )
                )
    return found


def _inequalities(truth, truth_options, mis_options) -> Obviousness:
    worst = truth.prefers(worst_in(truth, mis_options), worst_in(truth, truth_options))
    best = truth.prefers(best_in(truth, mis_options), best_in(truth, truth_options))
    return Obviousness.of(worst, best)


def classify_obvious(
    rule: Rule,
    market: Market,
    doctor: str,
    truth: DoctorPreference,
    misreport: DoctorPreference,
    budget: Optional[int] = None,
) -> Obviousness:
    """Which of the worst-case and best-case comparisons make ``misreport``
    obvious. Raises ``MarketError`` if ``misreport`` is not a manipulation."""
    helps = False
    for others in _subprofiles(market, doctor, budget):
        honest = _outcome_at(rule, market, DoctorProfile({**others, doctor: truth}), doctor)
        got = _outcome_at(rule, market, DoctorProfile({**others, doctor: misreport}), doctor)
        if MISSING not in (honest, got) and truth.prefers(got, honest):
            helps = True
            break
    if not helps:
        raise MarketError(f"{misreport} is not a manipulation at {truth} for {doctor}")
    return _inequalities(
        truth,
        option_set(rule, market, doctor, truth, budget),
        option_set(rule, market, doctor, misreport, budget),
    )


def replay_witness(witness: ManipulationWitness, rule: Rule, market: Market) -> bool:
    """Recompute a witness from scratch through the public rule and option-set
    paths."""
    honest_profile, lying_profile = witness.profiles()
    d = witness.doctor
    honest = _outcome_at(rule, market, honest_profile, d)
    got = _outcome_at(rule, market, lying_profile, d)
    if (honest, got) != (witness.truthful_outcome, witness.manipulated_outcome):
        return False
    if not witness.truth.prefers(got, honest):
        return False
    if witness.obvious is None:
        return True
    t_opts = option_set(rule, market, d, witness.truth)
    m_opts = option_set(rule, market, d, witness.misreport)
    if witness.truth_options is not None and witness.truth_options != t_opts:
        return False
    if witness.misreport_options is not None and witness.misreport_options != m_opts:
        return False
    return _inequalities(witness.truth, t_opts, m_opts) == witness.obvious


@dataclass
class AuditReport:
    market_digest: str
    rule: str
    verdict: str
    witnesses: list[ManipulationWitness]
    profiles_evaluated: int
    manipulations: int
    obvious_manipulations: int
    partial_coverage: bool = False
    wall_time: float = field(default=0.0, compare=False)

    @property
    def nom(self) -> bool:
        return self.verdict == "NOM"

    def obvious_witnesses(self) -> list[ManipulationWitness]:
        return [w for w in self.witnesses if w.obvious not in (None, Obviousness.NONE)]


class OutcomeTable:
    """Outcome codes of every doctor at every profile of the product domain.

    ``codes`` has one axis per doctor (indexed like that doctor's domain) and a
    final axis over doctors. A code is a contract's bit index, ``UNMATCHED``
    or ``MISSING``.
    """

    def __init__(self, rule: Rule, market: Market, budget: Optional[int] = None):
        self.rule = rule
        self.market = market
        self.domains = [enumerate_preferences(market, d, budget) for d in market.doctors]
        sizes = tuple(len(dom) for dom in self.domains)
        total = math.prod(sizes)
        _guard(total, budget)
        cm = market.compiled
        evaluate = rule_evaluator(rule, market)
        compiled = [[cm.compile_pref(p) for p in dom] for dom in self.domains]
        keys = [[p.acceptable for p in dom] for dom in self.domains]
        n = len(market.doctors)
        dmasks = cm.doctor_masks
        flat = np.empty((total, n), dtype=np.int16)
        for idx, combo in enumerate(itertools.product(*(range(s) for s in sizes))):
            prefs = tuple(compiled[d][c] for d, c in enumerate(combo))
            key = tuple(keys[d][c] for d, c in enumerate(combo)) if rule.kind == "table" else None
            try:
                mask = evaluate(prefs, key)
            except (RuleError, MarketError) as exc:
                shown = tuple(str(dom.members[c]) for dom, c in zip(self.domains, combo))
                raise RuleError(f"{rule} failed at profile {shown}: {exc}") from exc
            if mask is None:
                flat[idx] = MISSING
                continue
            for d in range(n):
                m = mask & dmasks[d]
                flat[idx, d] = m.bit_length() - 1 if m else UNMATCHED
        self.sizes = sizes
        self.codes = flat.reshape(*sizes, n)
        self.total = total
        self.partial = bool((flat == MISSING).any())

    def doctor_view(self, d: int) -> np.ndarray:
        """Codes of doctor ``d``: rows are its reports, columns its subprofiles."""
        arr = np.moveaxis(self.codes[..., d], d, 0)
        return arr.reshape(self.sizes[d], -1)

    def subprofile(self, d: int, column: int) -> tuple[tuple[str, DoctorPreference], ...]:
        other_sizes = [s for i, s in enumerate(self.sizes) if i != d]
        idx = np.unravel_index(column, other_sizes) if other_sizes else ()
        others = [i for i in range(len(self.sizes)) if i != d]
        pairs = [
            (self.market.doctors[i], self.domains[i].members[int(j)])
            for i, j in zip(others, idx)
        ]
        return tuple(sorted(pairs))

    def decode(self, code: int) -> Outcome:
        return None if code == UNMATCHED else self.market.ids[code]


def _rank_vector(pref: DoctorPreference, market: Market) -> np.ndarray:
    """Preference rank (0 best) of every code, indexed by ``code + 2``."""
    n = len(market.ids)
    order = sorted([None, *market.ids_of(pref.owner)], key=pref.key)
    pos = {o: i for i, o in enumerate(order)}
    vec = np.full(n + 2, np.iinfo(np.int32).max, dtype=np.int32)
    vec[UNMATCHED + 2] = pos[None]
    for cid in market.ids_of(pref.owner):
        vec[market.ids.index(cid) + 2] = pos[cid]
    return vec


def audit_nom(
    rule: Rule,
    market: Market,
    budget: Optional[int] = None,
    all_witnesses: bool = False,
    misreports: Optional[Mapping[str, Sequence[DoctorPreference]]] = None,
    truths: Optional[Mapping[str, Sequence[DoctorPreference]]] = None,
) -> AuditReport:
    """Check every doctor, truth and misreport for (obvious) manipulations.

    The verdict is OM iff some manipulation is obvious. Witnesses carry the
    first helpful subprofile in canonical order; without ``all_witnesses``
    only obvious ones are kept. ``misreports`` and ``truths`` restrict the
    searched reports per doctor; option sets always range over full domains.
    """
    start = time.perf_counter()
    table = OutcomeTable(rule, market, budget)
    witnesses: list[ManipulationWitness] = []
    n_manip = n_obvious = 0
    for d, doctor in enumerate(market.doctors):
        domain = table.domains[d]
        view = table.doctor_view(d)
        valid = view != MISSING
        option_codes = [frozenset(np.unique(row[ok]).tolist()) for row, ok in zip(view, valid)]
        if misreports is not None and doctor in misreports:
            mis_idx = sorted(domain.index(p) for p in misreports[doctor])
        else:
            mis_idx = list(range(len(domain)))
        if truths is not None and doctor in truths:
            truth_idx = sorted(domain.index(p) for p in truths[doctor])
        else:
            truth_idx = list(range(len(domain)))
        for i in truth_idx:
            truth = domain.members[i]
            rk = _rank_vector(truth, market)
            ranks = rk[view + 2]
            better = (ranks < ranks[i]) & valid & valid[i]
            helps = better.any(axis=1)
            if not helps.any():
                continue
            t_ranks = [rk[c + 2] for c in option_codes[i]]
            t_worst, t_best = max(t_ranks, default=None), min(t_ranks, default=None)
            for j in mis_idx:
                if j == i or not helps[j]:
                    continue
                n_manip += 1
                m_ranks = [rk[c + 2] for c in option_codes[j]]
                kind = Obviousness.of(
                    t_worst is not None and max(m_ranks) < t_worst,
                    t_best is not None and min(m_ranks) < t_best,
                )
                if kind is not Obviousness.NONE:
                    n_obvious += 1
                elif not all_witnesses:
                    continue
                col = int(np.argmax(better[j]))
                witnesses.append(
                    ManipulationWitness(
                        doctor=doctor,
                        truth=truth,
                        misreport=domain.members[j],
                        subprofile=table.subprofile(d, col),
                        truthful_outcome=table.decode(int(view[i, col])),
                        manipulated_outcome=table.decode(int(view[j, col])),
                        obvious=kind,
                        truth_options=frozenset(table.decode(c) for c in option_codes[i]),
                        misreport_options=frozenset(table.decode(c) for c in option_codes[j]),
                    )
                )
    return AuditReport(
        market_digest=market.digest(),
        rule=str(rule),
        verdict="OM" if n_obvious else "NOM",
        witnesses=witnesses,
        profiles_evaluated=table.total,
        manipulations=n_manip,
        obvious_manipulations=n_obvious,
        partial_coverage=table.partial,
        wall_time=time.perf_counter() - start,
    )
