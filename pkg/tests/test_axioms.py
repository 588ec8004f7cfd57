from __future__ import annotations

import itertools
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles
from cases import hospital_cases
from contractmatch import (
    Contract,
    HospitalPreference,
    Market,
    MarketError,
    check_lad,
    check_responsive,
    check_substitutable,
    generate_responsive,
    replay_violation,
    validate_market,
)
from contractmatch.axioms import (
    LAD,
    RESPONSIVENESS,
    SUBSTITUTABILITY,
    lad_violations,
    responsiveness_violations,
    substitutability_violations,
)
from contractmatch.io import theorem2_spec


def S(*ids):
    return frozenset(ids)


A, B, C = (Contract(n, f"d{n}", "h") for n in "abc")
X, Y, W = Contract("x", "d1", "h"), Contract("y", "d1", "h"), Contract("w'", "d2", "h")

# Three distinct doctors; C({a,b}) = {a,b} but C({a,b,c}) = {c}. Substitutable.
LAD_BREAKER = HospitalPreference(
    "h", (S("c"), S("a", "b"), S("a"), S("b"), S(), S("a", "c"), S("b", "c"), S("a", "b", "c"))
)


def lad_market():
    return Market(("da", "db", "dc"), ("h",), [A, B, C], {"h": LAD_BREAKER})


class TestSubstitutability:
    def test_two_contract_fixture_passes(self, t2):
        h1 = t2.market.hospital_prefs["h1"]
        assert check_substitutable(h1, t2.market.contracts_of("h1")) is None

    @pytest.mark.parametrize("ranking", [[S()], [S("a"), S()], [S(), S("a")]])
    def test_at_most_one_contract(self, ranking):
        contracts = [A] if len(ranking) == 2 else []
        assert check_substitutable(HospitalPreference("h", ranking), contracts) is None

    def test_pair_only_ranking(self):
        pref = HospitalPreference("h", (S("x", "w'"), S(), S("x"), S("w'")))
        v = check_substitutable(pref, [X, W])
        assert v is not None
        assert (v.witness["W"], v.witness["Y"], v.witness["x"]) == (S("x", "w'"), S("x"), "x")
        assert replay_violation(v, pref, [X, W])

    def test_incomplete_ranking_refused(self):
        with pytest.raises(MarketError):
            check_substitutable(HospitalPreference("h", (S("x"), S())), [X, Y])


class TestLad:
    def test_one_to_one_passes(self, t2, t4):
        for spec in (t2, t4):
            for h in spec.market.hospitals:
                assert check_lad(spec.market.hospital_prefs[h], spec.market.contracts_of(h)) is None

    def test_no_contracts(self):
        assert check_lad(HospitalPreference("h", (S(),)), []) is None

    def test_pair_only_ranking_satisfies_lad(self):
        pref = HospitalPreference("h", (S("x", "w'"), S(), S("x"), S("w'")))
        assert check_lad(pref, [X, W]) is None

    def test_constructed_violation(self):
        v = check_lad(LAD_BREAKER, [A, B, C])
        assert v.witness == {"Y": S("a", "b"), "Z": S("a", "b", "c")}
        assert replay_violation(v, LAD_BREAKER, [A, B, C])
        assert check_substitutable(LAD_BREAKER, [A, B, C]) is None


class TestResponsiveness:
    def test_unit_quota_single_doctor(self, t2):
        h1 = t2.market.hospital_prefs["h1"]
        assert check_responsive(h1, 1, t2.market.contracts_of("h1")) is None

    def test_oversized_set_above_empty(self):
        ranking = (S("x"), S("y"), S("x", "w'"), S(), S("w'"), S("y", "w'"))
        pref = HospitalPreference("h", ranking)
        v = check_responsive(pref, 1, [X, Y, W])
        assert v.witness == {"condition": 1, "Z": S("x", "w'")}
        assert replay_violation(v, pref, [X, Y, W], quota=1)

    def test_pairwise_condition(self):
        # {a} over {b} yet {a,c} below {b,c}.
        ranking = (S("a"), S("b"), S("b", "c"), S("a", "c"), S("c"), S("a", "b"), S(), S("a", "b", "c"))
        pref = HospitalPreference("h", ranking)
        v = check_responsive(pref, 2, [A, B, C])
        assert v is not None and v.witness["condition"] == 2
        assert replay_violation(v, pref, [A, B, C], quota=2)

    def test_negative_quota(self):
        with pytest.raises(MarketError):
            check_responsive(HospitalPreference("h", (S(),)), -1, [])

    def test_replay_needs_quota(self):
        ranking = (S("x"), S("y"), S("x", "w'"), S(), S("w'"), S("y", "w'"))
        pref = HospitalPreference("h", ranking)
        v = check_responsive(pref, 1, [X, Y, W])
        with pytest.raises(MarketError):
            replay_violation(v, pref, [X, Y, W])


class TestGenerateResponsive:
    def test_unit_quota(self):
        a, b = Contract("x", "d1", "h"), Contract("y", "d2", "h")
        pref = generate_responsive([a, b], 1)
        assert pref.ranking == (S("x"), S("y"), S(), S("x", "y"))

    def test_quota_two(self):
        pref = generate_responsive([A, B, C], 2)
        assert pref.ranking == (
            S("a", "b"), S("a", "c"), S("a"), S("b", "c"), S("b"), S("c"), S(), S("a", "b", "c")
        )

    def test_no_contracts(self):
        assert generate_responsive([], 3).ranking == (S(),)

    def test_negative_quota(self):
        with pytest.raises(MarketError):
            generate_responsive([A], -1)

    def test_unacceptable_contracts_below_empty(self):
        pref = generate_responsive([A], 2, unacceptable=[B])
        pos = pref.ranking.index
        assert pos(S("a")) < pos(S()) < pos(S("b"))

    def test_mixed_owners_refused(self):
        with pytest.raises(MarketError):
            generate_responsive([A, Contract("z", "dz", "other")], 1)

    @pytest.mark.parametrize("parts", [(1,), (2,), (1, 1), (2, 1), (1, 1, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)])
    def test_every_order_cut_and_quota_passes_all_checkers(self, parts):
        contracts = [
            Contract(f"c{i}", f"d{k}", "h")
            for i, k in enumerate(k for k, p in enumerate(parts) for _ in range(p))
        ]
        doctor_of = {c.id: c.doctor for c in contracts}
        ids = [c.id for c in contracts]
        for order in itertools.permutations(contracts):
            for cut in range(len(order) + 1):
                for quota in range(len(order) + 1):
                    pref = generate_responsive(order[:cut], quota, order[cut:])
                    assert check_responsive(pref, quota, contracts) is None
                    assert check_substitutable(pref, contracts) is None
                    assert check_lad(pref, contracts) is None
                    assert oracles.responsive(pref.ranking, quota, ids, doctor_of)


class TestValidateMarket:
    def test_fixture_substitutable(self, t2):
        assert validate_market(t2.market, (SUBSTITUTABILITY,)) == []

    def test_fixture_substitutable_and_lad(self, t4):
        assert validate_market(t4.market, ("subs", LAD)) == []

    def test_reports_lad_violation(self):
        found = validate_market(lad_market(), (SUBSTITUTABILITY, LAD))
        assert [v.axiom for v in found] == [LAD]
        assert replay_violation(found[0], LAD_BREAKER, [A, B, C])

    def test_collect_all(self):
        found = validate_market(lad_market(), (LAD,), collect_all=True)
        assert len(found) == len(list(lad_violations(LAD_BREAKER, [A, B, C])))
        assert all(replay_violation(v, LAD_BREAKER, [A, B, C]) for v in found)

    def test_responsiveness_needs_quota(self, t2):
        with pytest.raises(MarketError):
            validate_market(t2.market, (RESPONSIVENESS,))

    def test_per_hospital_quota(self, t2):
        assert validate_market(t2.market, ("resp",), quota={"h1": 1, "h2": 1}) == []

    def test_unknown_axiom(self, t2):
        with pytest.raises(MarketError):
            validate_market(t2.market, ("gross",))

    def test_memoized_verdicts_stable(self):
        m = lad_market()
        first = validate_market(m, (LAD,))
        assert validate_market(m, (LAD,)) == first

    def test_describe(self):
        v = check_lad(LAD_BREAKER, [A, B, C])
        assert v.describe() == "lad violated at h: Y={a,b} Z={a,b,c}"


# Soundness: every violation any generator reports replays from the ranking.

@pytest.mark.parametrize("axiom", [SUBSTITUTABILITY, LAD])
def test_all_reported_violations_replay(axiom):
    gen = substitutability_violations if axiom == SUBSTITUTABILITY else lad_violations
    replayed = 0
    for _, contracts, pref in hospital_cases():
        for v in itertools.islice(gen(pref, contracts), 20):
            assert replay_violation(v, pref, contracts)
            replayed += 1
    assert replayed > 500


def _random_ranking(rng, contracts):
    doctor_of = {c.id: c.doctor for c in contracts}
    allocs = oracles.allocations([c.id for c in contracts], doctor_of)
    rng.shuffle(allocs)
    return HospitalPreference("h", tuple(allocs))


@given(st.integers(0, 10**6), st.sampled_from([(1, 1, 1), (2, 1), (2, 2), (2, 1, 1), (1, 1, 1, 1)]))
def test_responsiveness_violations_replay(seed, parts):
    rng = random.Random(seed)
    contracts = [
        Contract(f"c{i}", f"d{k}", "h")
        for i, k in enumerate(k for k, p in enumerate(parts) for _ in range(p))
    ]
    pref = _random_ranking(rng, contracts)
    quota = rng.randint(0, len(parts))
    for v in itertools.islice(responsiveness_violations(pref, quota, contracts), 10):
        assert replay_violation(v, pref, contracts, quota=quota)
    ids = [c.id for c in contracts]
    doctor_of = {c.id: c.doctor for c in contracts}
    verdict = check_responsive(pref, quota, contracts) is None
    assert verdict == oracles.responsive(pref.ranking, quota, ids, doctor_of)


def test_module_level_fixture_sanity():
    # The bundled two-contract hospital is responsive with quota 1 and this
    # LAD breaker is not responsive at any quota.
    spec = theorem2_spec()
    assert validate_market(spec.market, ("resp",), quota=1) == []
    assert all(check_responsive(LAD_BREAKER, q, [A, B, C]) is not None for q in range(4))
