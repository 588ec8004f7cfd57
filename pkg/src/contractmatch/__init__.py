"""Stable matching with contracts and exhaustive audits of doctor manipulations."""
from .axioms import (
    AxiomViolation,
    check_lad,
    check_responsive,
    check_substitutable,
    generate_responsive,
    replay_violation,
    validate_market,
)
from .manipulation import (
    AuditReport,
    GuardrailError,
    ManipulationWitness,
    Obviousness,
    PreferenceDomain,
    audit_nom,
    best_in,
    classify_obvious,
    enumerate_preferences,
    find_manipulations,
    option_set,
    replay_witness,
    worst_in,
)
from .market import (
    Contract,
    DoctorPreference,
    DoctorProfile,
    HospitalPreference,
    Market,
    MarketError,
    allocations_of,
    choice_doctor,
    choice_doctors_all,
    choice_hospital,
    choice_hospitals_all,
    restrict,
)
from .mechanisms import (
    DaTrace,
    Rule,
    RuleError,
    apply_rule,
    blocking_contracts,
    doctor_proposing_da,
    enumerate_stable,
    hospital_proposing_da,
    is_individually_rational,
    is_stable,
    quantile_rule,
)

__version__ = "0.1.0"
