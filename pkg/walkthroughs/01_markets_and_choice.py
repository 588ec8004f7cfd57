"""Markets, allocations and choice sets.

A small market: doctor d1 can sign contract x or y with hospital h1, doctor d2
can sign w with hospital h2. Hospitals rank allocations of their own contracts;
doctors rank their own contracts.
"""
from contractmatch import (
    Contract,
    DoctorPreference,
    DoctorProfile,
    HospitalPreference,
    Market,
    allocations_of,
    choice_doctor,
    choice_doctors_all,
    choice_hospital,
    choice_hospitals_all,
    restrict,
)

S = frozenset

contracts = [Contract("x", "d1", "h1"), Contract("y", "d1", "h1"), Contract("w", "d2", "h2")]
market = Market(
    doctors=("d1", "d2"),
    hospitals=("h1", "h2"),
    contracts=contracts,
    hospital_prefs={
        "h1": HospitalPreference("h1", (S({"x"}), S({"y"}), S())),
        "h2": HospitalPreference("h2", (S({"w"}), S())),
    },
)
print("contracts:", market.ids)

# Allocations hold at most one contract per doctor, so {x, y} is not one.
print("allocations of {x, y}:", [sorted(a) for a in allocations_of(market, {"x", "y"})])
print("h1's share of X:", sorted(restrict(market, market.ids, "h1")))

# A hospital picks the best-ranked allocation inside what is available.
h1 = market.hospital_prefs["h1"]
print("C_h1({x, y}) =", sorted(choice_hospital(h1, {"x", "y"})))
print("C_h1({y, w}) =", sorted(choice_hospital(h1, {"y", "w"})))

# A doctor picks the first listed contract that is available.
d1 = DoctorPreference("d1", ("y", "x"))
print("C_d1({x, y}) =", choice_doctor(d1, {"x", "y"}))
print("C_d1 with only an unlisted contract:", choice_doctor(DoctorPreference("d1", ("y",)), {"x"}))

profile = DoctorProfile({"d1": d1, "d2": DoctorPreference("d2", ("w",))})
print("C_D(X) =", sorted(choice_doctors_all(profile, market.ids)))
print("C_H(X) =", sorted(choice_hospitals_all(market, market.ids)))
