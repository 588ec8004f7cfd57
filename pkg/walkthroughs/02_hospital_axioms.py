"""Checking substitutability, the law of aggregate demand and responsiveness.

Each checker returns None or the first violation, with a witness that can be
replayed against the ranking.
"""
from contractmatch import (
    Contract,
    HospitalPreference,
    check_lad,
    check_responsive,
    check_substitutable,
    generate_responsive,
    replay_violation,
)

S = frozenset
a, b, c = (Contract(n, f"d{n}", "h") for n in "abc")

# Complementary doctors: h wants both a and b or nobody.
pair_only = HospitalPreference("h", (S("ab"), S(), S("a"), S("b")))
v = check_substitutable(pair_only, [a, b])
print(v.describe(), "| replays:", replay_violation(v, pair_only, [a, b]))

# Substitutable but choosing fewer contracts from a larger set.
shrinking = HospitalPreference(
    "h", (S("c"), S("ab"), S("a"), S("b"), S(), S("ac"), S("bc"), S("abc"))
)
print("substitutable:", check_substitutable(shrinking, [a, b, c]) is None)
print(check_lad(shrinking, [a, b, c]).describe())

# A responsive ranking with capacity two built from a ≻ b ≻ c.
resp = generate_responsive([a, b, c], 2)
print("responsive ranking:", [sorted(s) for s in resp.ranking])
for name, verdict in (
    ("substitutability", check_substitutable(resp, [a, b, c])),
    ("lad", check_lad(resp, [a, b, c])),
    ("responsiveness", check_responsive(resp, 2, [a, b, c])),
):
    print(f"  {name}: {'pass' if verdict is None else verdict.describe()}")
