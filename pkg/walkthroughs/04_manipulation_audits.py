"""Auditing rules for obvious manipulations.

For every doctor, true preference and misreport the audit evaluates the rule
on every report of the other doctors. A misreport is a manipulation if it ever
helps; it is obvious if its worst or best possible outcome beats truth-telling.
"""
from contractmatch import DoctorPreference, Rule, audit_nom, option_set
from contractmatch.io import theorem2_spec, theorem4_spec

market = theorem2_spec().market

for rule in (Rule.doctor_optimal(), Rule.hospital_optimal()):
    report = audit_nom(rule, market)
    print(f"{rule}: {report.verdict}, {report.manipulations} manipulations, "
          f"{report.obvious_manipulations} obvious, {report.profiles_evaluated} profiles")

# Under the hospital-optimal rule, d1 truly prefers y but is always given x.
# Dropping x from the list guarantees y.
rule = Rule.hospital_optimal()
truth, lie = DoctorPreference("d1", ("y", "x")), DoctorPreference("d1", ("y",))
print("options under truth:", option_set(rule, market, "d1", truth))
print("options under misreport:", option_set(rule, market, "d1", lie))
w = audit_nom(rule, market).obvious_witnesses()[0]
print(f"witness: {w.doctor} {w.truth} -> {w.misreport} ({w.obvious.value})")

# Quantile rules strictly between the two sides share the weakness.
report = audit_nom(Rule.quantile("1/2"), theorem4_spec(3).market)
print("quantile 1/2 on the reversed-order market:", report.verdict)
