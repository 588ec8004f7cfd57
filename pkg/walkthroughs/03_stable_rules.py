"""Deferred acceptance from both sides, the stable set and quantile rules.

The market has one doctor with k contracts at hospital h1, ranked in reverse
by the hospital, and a second doctor with one contract at h2. Every contract
of d1 is part of some stable allocation, so the rules differ.
"""
from fractions import Fraction

from contractmatch import (
    doctor_proposing_da,
    enumerate_stable,
    hospital_proposing_da,
    is_stable,
    quantile_rule,
)
from contractmatch.io import theorem4_spec

spec = theorem4_spec(4)
market, profile = spec.market, spec.profile("main")
print("d1 reports", profile["d1"], "| d2 reports", profile["d2"])

trace = doctor_proposing_da(market, profile)
for t, r in enumerate(trace.rounds, 1):
    print(f"  doctor-proposing round {t}: offers {sorted(r.offers)} kept {sorted(r.accepted)}")
print("doctor-proposing output:", sorted(trace.output))
print("hospital-proposing output:", sorted(hospital_proposing_da(market, profile).output))

stable = enumerate_stable(market, profile)
print("stable allocations:", [sorted(s) for s in stable])
assert all(is_stable(s, market, profile) for s in stable)

# The q-quantile rule hands each doctor the max(1, ceil(k q))-th best stable outcome.
for q in (Fraction(0), Fraction(1, 4), Fraction(1, 2), Fraction(3, 4), Fraction(1)):
    print(f"quantile {q}:", sorted(quantile_rule(market, profile, q)))
