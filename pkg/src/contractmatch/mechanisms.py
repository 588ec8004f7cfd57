"""Stable matching rules: deferred acceptance from either side, the naive
stable-set oracle, stability predicates and quantile stable rules."""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Union

from .axioms import LAD, SUBSTITUTABILITY, validate_market
from .market import (
    CompiledMarket,
    DoctorProfile,
    Market,
    MarketError,
    Outcome,
)

DOCTORS = "doctors"
HOSPITALS = "hospitals"

ProfileKey = tuple[tuple[str, ...], ...]
"""Acceptable lists of all doctors, in ``market.doctors`` order."""


class RuleError(RuntimeError):
    """A rule refused to run or produced an impossible result."""


@dataclass(frozen=True)
class Round:
    available: frozenset[str]
    offers: frozenset[str]
    accepted: frozenset[str]


@dataclass(frozen=True)
class DaTrace:
    """Full record of one deferred acceptance run.

    For doctor-proposing runs ``offers`` is C_D(available) and ``accepted`` is
    C_H(offers); the roles swap for hospital-proposing runs.
    """

    side: str
    rounds: tuple[Round, ...]
    output: frozenset[str]

    @property
    def T(self) -> int:
        return len(self.rounds)

    def cumulative_offers(self) -> list[frozenset[str]]:
        out, acc = [], frozenset()
        for r in self.rounds:
            acc = acc | r.offers
            out.append(acc)
        return out


def _refuse_unless(market: Market, axioms: tuple[str, ...]) -> None:
    bad = validate_market(market, axioms)
    if bad:
        raise RuleError(f"market fails {bad[0].describe()}")


def _da_rounds(cm: CompiledMarket, prefs, side: str):
    """Yield ``(available, offers, accepted)`` masks until every offer is accepted."""
    if side == DOCTORS:
        propose = lambda m: cm.choose_doctors(m, prefs)  # noqa: E731
        respond = cm.choose_hospitals
    elif side == HOSPITALS:
        propose = cm.choose_hospitals
        respond = lambda m: cm.choose_doctors(m, prefs)  # noqa: E731
    else:
        raise MarketError(f"unknown side {side!r}")
    available = cm.full
    while True:
        offers = propose(available)
        accepted = respond(offers)
        yield available, offers, accepted
        if accepted == offers:
            return
        available &= ~(offers & ~accepted)


def da_mask(cm: CompiledMarket, prefs, side: str) -> int:
    """Output mask of deferred acceptance; the audit's hot path."""
    for _, _, accepted in _da_rounds(cm, prefs, side):
        pass
    return accepted


def _traced(market: Market, profile: DoctorProfile, side: str, validate: bool) -> DaTrace:
    market.check_profile(profile)
    if validate:
        _refuse_unless(market, (SUBSTITUTABILITY,))
    cm = market.compiled
    rounds = tuple(
        Round(cm.to_set(a), cm.to_set(o), cm.to_set(c))
        for a, o, c in _da_rounds(cm, cm.compile_profile(profile), side)
    )
    return DaTrace(side, rounds, rounds[-1].accepted)


def doctor_proposing_da(
    market: Market, profile: DoctorProfile, validate: bool = True
) -> DaTrace:
    """Doctors offer their favourite contract not yet rejected; hospitals hold
    their choice set from the current offers; stop once nothing is rejected."""
    return _traced(market, profile, DOCTORS, validate)


def hospital_proposing_da(
    market: Market, profile: DoctorProfile, validate: bool = True
) -> DaTrace:
    """The same loop with the roles of the two sides swapped: hospitals offer
    their whole choice set, doctors keep their favourite offer."""
    return _traced(market, profile, HOSPITALS, validate)


def doctor_optimal(market: Market, profile: DoctorProfile) -> frozenset[str]:
    return doctor_proposing_da(market, profile).output


def hospital_optimal(market: Market, profile: DoctorProfile) -> frozenset[str]:
    return hospital_proposing_da(market, profile).output


def _ir_mask(cm: CompiledMarket, y: int, prefs) -> bool:
    return cm.choose_doctors(y, prefs) == y and cm.choose_hospitals(y) == y


def _blocking_mask(cm: CompiledMarket, y: int, prefs) -> int:
    out = 0
    for i in range(len(cm.ids)):
        x = 1 << i
        if y & x:
            continue
        d = cm.contract_doctor[i]
        held = y & cm.doctor_masks[d]
        # x is the doctor's choice from its contracts in Y+x iff it is
        # acceptable and listed before whatever the doctor holds.
        wants = False
        for b in prefs[d]:
            if b == x:
                wants = True
                break
            if b == held:
                break
        if not wants:
            continue
        for h, hmask in enumerate(cm.hospital_masks):
            if hmask & x:
                if cm.choose_hospital(h, y | x) & x:
                    out |= x
                break
    return out


def _stable_masks(cm: CompiledMarket, prefs) -> list[int]:
    return [
        y
        for y in cm.allocations
        if _ir_mask(cm, y, prefs) and not _blocking_mask(cm, y, prefs)
    ]


def is_individually_rational(
    allocation, market: Market, profile: DoctorProfile
) -> bool:
    cm = market.compiled
    y = cm.to_mask(market.check_subset(allocation))
    return _ir_mask(cm, y, cm.compile_profile(profile))


def blocking_contracts(
    allocation, market: Market, profile: DoctorProfile
) -> frozenset[str]:
    cm = market.compiled
    y = cm.to_mask(market.check_subset(allocation))
    return cm.to_set(_blocking_mask(cm, y, cm.compile_profile(profile)))


def is_stable(allocation, market: Market, profile: DoctorProfile) -> bool:
    if not market.is_allocation(allocation):
        raise MarketError(f"{sorted(allocation)} is not an allocation")
    return is_individually_rational(allocation, market, profile) and not (
        blocking_contracts(allocation, market, profile)
    )


def enumerate_stable(market: Market, profile: DoctorProfile) -> list[frozenset[str]]:
    """Every stable allocation, found by testing each member of A(X).

    Deliberately naive: it is the oracle the algorithms are checked against,
    and it accepts hospital preferences that are not substitutable.
    """
    market.check_profile(profile)
    cm = market.compiled
    return [cm.to_set(y) for y in _stable_masks(cm, cm.compile_profile(profile))]


def quantile_position(k: int, q: Fraction) -> int:
    """``ceil(k*q)`` in exact arithmetic, never below 1."""
    q = Fraction(q)
    if not 0 <= q <= 1:
        raise MarketError(f"quantile {q} outside [0, 1]")
    pos = -((-k * q.numerator) // q.denominator)
    return max(1, pos)


def _quantile_mask(cm: CompiledMarket, prefs, q: Fraction) -> int:
    stable = _stable_masks(cm, prefs)
    if not stable:
        raise RuleError("no stable allocation")
    pos = quantile_position(len(stable), q)
    out = 0
    for d, pref in enumerate(prefs):
        rank = {b: i for i, b in enumerate(pref)}
        held = sorted(
            (y & cm.doctor_masks[d] for y in stable),
            key=lambda b: rank.get(b, len(pref)),
        )
        out |= held[pos - 1]
    if _blocking_mask(cm, out, prefs) or not _ir_mask(cm, out, prefs):
        raise RuleError(
            f"quantile {q} assembled an unstable allocation {sorted(cm.to_set(out))}"
        )
    return out


def quantile_rule(market: Market, profile: DoctorProfile, q) -> frozenset[str]:
    """Give every doctor its ``ceil(k*q)``-th best outcome over the ``k``
    stable allocations, counted with multiplicity, and join the results."""
    market.check_profile(profile)
    _refuse_unless(market, (SUBSTITUTABILITY, LAD))
    cm = market.compiled
    return cm.to_set(_quantile_mask(cm, cm.compile_profile(profile), Fraction(q)))


def profile_key(market: Market, profile: DoctorProfile) -> ProfileKey:
    return tuple(profile[d].acceptable for d in market.doctors)


@dataclass(frozen=True)
class Rule:
    """A matching rule: ``doctor_optimal``, ``hospital_optimal``,
    ``quantile`` (with exact ``q``) or ``table`` (explicit profile map)."""

    kind: str
    q: Optional[Fraction] = None
    table: tuple = field(default=(), repr=False)

    def __post_init__(self):
        if self.kind not in ("doctor_optimal", "hospital_optimal", "quantile", "table"):
            raise MarketError(f"unknown rule kind {self.kind!r}")
        if self.kind == "quantile":
            if self.q is None:
                raise MarketError("quantile rule needs q")
            object.__setattr__(self, "q", Fraction(self.q))
            quantile_position(1, self.q)

    @classmethod
    def doctor_optimal(cls) -> "Rule":
        return cls("doctor_optimal")

    @classmethod
    def hospital_optimal(cls) -> "Rule":
        return cls("hospital_optimal")

    @classmethod
    def quantile(cls, q: Union[Fraction, str, int]) -> "Rule":
        return cls("quantile", Fraction(q))

    @classmethod
    def from_table(cls, table: Mapping[ProfileKey, frozenset[str]]) -> "Rule":
        items = tuple(sorted((k, frozenset(v)) for k, v in table.items()))
        return cls("table", table=items)

    @classmethod
    def parse(cls, text: str) -> "Rule":
        """Parse ``doctor-optimal``, ``hospital-optimal`` or ``quantile:num/den``."""
        name = text.replace("_", "-")
        if name == "doctor-optimal":
            return cls.doctor_optimal()
        if name == "hospital-optimal":
            return cls.hospital_optimal()
        if name.startswith("quantile:"):
            return cls.quantile(Fraction(name.split(":", 1)[1]))
        raise MarketError(f"unknown rule {text!r}")

    def __str__(self) -> str:
        if self.kind == "quantile":
            return f"quantile:{self.q.numerator}/{self.q.denominator}"
        return self.kind.replace("_", "-")

    def table_lookup(self) -> dict[ProfileKey, frozenset[str]]:
        return dict(self.table)


def rule_evaluator(rule: Rule, market: Market):
    """Return ``f(compiled_prefs, key) -> mask or None`` for repeated evaluation.

    Preconditions on the market are verified once, up front. ``None`` marks a
    profile missing from a table rule.
    """
    cm = market.compiled
    if rule.kind == "doctor_optimal":
        _refuse_unless(market, (SUBSTITUTABILITY,))
        return lambda prefs, key: da_mask(cm, prefs, DOCTORS)
    if rule.kind == "hospital_optimal":
        _refuse_unless(market, (SUBSTITUTABILITY,))
        return lambda prefs, key: da_mask(cm, prefs, HOSPITALS)
    if rule.kind == "quantile":
        _refuse_unless(market, (SUBSTITUTABILITY, LAD))
        q = rule.q
        return lambda prefs, key: _quantile_mask(cm, prefs, q)
    lookup = {k: cm.to_mask(market.check_subset(v)) for k, v in rule.table}
    return lambda prefs, key: lookup.get(key)


def apply_rule(rule: Rule, market: Market, profile: DoctorProfile) -> frozenset[str]:
    market.check_profile(profile)
    cm = market.compiled
    key = profile_key(market, profile)
    mask = rule_evaluator(rule, market)(cm.compile_profile(profile), key)
    if mask is None:
        raise MarketError(f"table rule has no entry for profile {key}")
    return cm.to_set(mask)


def doctor_outcome(market: Market, allocation, doctor: str) -> Outcome:
    mine = market.check_subset(allocation) & market.ids_of(doctor)
    return next(iter(mine), None)


def doctor_best(
    market: Market, profile: DoctorProfile, allocations: list[frozenset[str]]
) -> Optional[frozenset[str]]:
    """The member every doctor weakly prefers to every other member, if any."""
    for cand in allocations:
        if all(
            not profile[d].prefers(doctor_outcome(market, other, d), doctor_outcome(market, cand, d))
            for other in allocations
            for d in market.doctors
        ):
            return cand
    return None


def hospital_best(
    market: Market, allocations: list[frozenset[str]]
) -> Optional[frozenset[str]]:
    """The member every hospital weakly prefers, by its own ranking."""
    for cand in allocations:
        if all(
            market.hospital_prefs[h].position(cand & market.ids_of(h))
            <= market.hospital_prefs[h].position(other & market.ids_of(h))
            for other in allocations
            for h in market.hospitals
        ):
            return cand
    return None

