"""Market files, bundled fixtures and report encoding.

Market file (JSON)::

    {
      "doctors": ["d1", "d2"],
      "hospitals": ["h1", "h2"],
      "contracts": [{"id": "x", "doctor": "d1", "hospital": "h1"}, ...],
      "hospital_prefs": {
        "h1": {"ranking": [["x"], ["y"], [], ...]},
        "h2": {"responsive": {"order": ["w"], "quota": 1}}
      },
      "doctor_profiles": {"main": {"d1": ["y", "x"], "d2": ["w"]}}
    }

Rankings must list every allocation of the hospital's contracts, the empty
allocation as ``[]``. Hospital contracts missing from a responsive ``order``
are unacceptable. Doctors missing from a named profile accept nothing.
"""
from __future__ import annotations

import csv
import io as _io
import json
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Any, Mapping, Optional, Union

from .axioms import AxiomViolation, generate_responsive
from .manipulation import AuditReport, ManipulationWitness
from .market import (
    Contract,
    DoctorPreference,
    DoctorProfile,
    HospitalPreference,
    Market,
    MarketError,
    Outcome,
)
from .mechanisms import DaTrace

BUNDLED = ("theorem2.json", "theorem4_k3.json")


class InputError(ValueError):
    """A market file is malformed or describes an invalid market."""


@dataclass
class MarketSpec:
    market: Market
    profiles: dict[str, DoctorProfile] = field(default_factory=dict)

    def profile(self, name: str) -> DoctorProfile:
        try:
            return self.profiles[name]
        except KeyError:
            known = ", ".join(sorted(self.profiles)) or "none"
            raise InputError(f"unknown profile {name!r} (known: {known})") from None


def _require(data: Mapping, key: str, where: str):
    if key not in data:
        raise InputError(f"{where}: missing field {key!r}")
    return data[key]


def spec_from_dict(data: Mapping[str, Any]) -> MarketSpec:
    if not isinstance(data, Mapping):
        raise InputError("top level must be an object")
    doctors = _require(data, "doctors", "market")
    hospitals = _require(data, "hospitals", "market")
    contracts = []
    for i, c in enumerate(_require(data, "contracts", "market")):
        where = f"contracts[{i}]"
        contracts.append(
            Contract(
                str(_require(c, "id", where)),
                str(_require(c, "doctor", where)),
                str(_require(c, "hospital", where)),
            )
        )
    ids = [c.id for c in contracts]
    if len(set(ids)) != len(ids):
        dup = next(x for x in ids if ids.count(x) > 1)
        raise InputError(f"contracts: duplicate id {dup!r}")
    by_id = {c.id: c for c in contracts}
    prefs = {}
    for h, spec in _require(data, "hospital_prefs", "market").items():
        where = f"hospital_prefs.{h}"
        if "ranking" in spec:
            prefs[h] = HospitalPreference(h, tuple(frozenset(s) for s in spec["ranking"]))
        elif "responsive" in spec:
            resp = spec["responsive"]
            order = _require(resp, "order", where + ".responsive")
            quota = _require(resp, "quota", where + ".responsive")
            unknown = [c for c in order if c not in by_id]
            if unknown:
                raise InputError(f"{where}.responsive.order: unknown contract {unknown[0]!r}")
            rest = [c for c in contracts if c.hospital == h and c.id not in order]
            try:
                prefs[h] = generate_responsive([by_id[c] for c in order], int(quota), rest)
            except MarketError as exc:
                raise InputError(f"{where}: {exc}") from None
            if prefs[h].owner not in ("", h):
                raise InputError(f"{where}.responsive.order: contracts of another hospital")
            prefs[h] = HospitalPreference(h, prefs[h].ranking)
        else:
            raise InputError(f"{where}: expected 'ranking' or 'responsive'")
    try:
        market = Market(tuple(doctors), tuple(hospitals), contracts, prefs)
    except MarketError as exc:
        raise InputError(str(exc)) from None
    profiles = {}
    for name, lists in data.get("doctor_profiles", {}).items():
        extra = set(lists) - set(market.doctors)
        if extra:
            raise InputError(f"doctor_profiles.{name}: unknown doctor {sorted(extra)[0]!r}")
        prof = DoctorProfile(
            {d: DoctorPreference(d, tuple(lists.get(d, ()))) for d in market.doctors}
        )
        try:
            market.check_profile(prof)
        except MarketError as exc:
            raise InputError(f"doctor_profiles.{name}: {exc}") from None
        profiles[name] = prof
    return MarketSpec(market, profiles)


def spec_to_dict(spec: MarketSpec) -> dict:
    out = spec.market.to_dict()
    if spec.profiles:
        out["doctor_profiles"] = {
            name: {d: list(p[d].acceptable) for d in spec.market.doctors}
            for name, p in sorted(spec.profiles.items())
        }
    return out


def dumps(data: Any) -> str:
    return json.dumps(data, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def resolve_path(path: Union[str, Path]) -> Path:
    """A filesystem path, or the name of a bundled market file."""
    p = Path(path)
    if p.exists():
        return p
    if p.name in BUNDLED and str(path) == p.name:
        with resources.as_file(resources.files(__package__) / "data" / p.name) as f:
            return Path(f)
    raise InputError(f"{path}: no such file")


def load_spec(path: Union[str, Path]) -> MarketSpec:
    p = resolve_path(path)
    text = p.read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    try:
        return spec_from_dict(data)
    except InputError as exc:
        raise InputError(f"{path}: {exc}") from None
    except (TypeError, AttributeError, ValueError) as exc:
        raise InputError(f"{path}: malformed market: {exc}") from None


def parse_market(path: Union[str, Path]) -> Market:
    return load_spec(path).market


def save_spec(spec: MarketSpec, path: Union[str, Path]) -> None:
    Path(path).write_text(dumps(spec_to_dict(spec)))


def theorem2_spec() -> MarketSpec:
    """One-to-one market with two contracts between d1 and h1, where the
    hospital-optimal rule is obviously manipulable."""
    return spec_from_dict(
        {
            "doctors": ["d1", "d2"],
            "hospitals": ["h1", "h2"],
            "contracts": [
                {"id": "x", "doctor": "d1", "hospital": "h1"},
                {"id": "y", "doctor": "d1", "hospital": "h1"},
                {"id": "w", "doctor": "d2", "hospital": "h2"},
            ],
            "hospital_prefs": {
                "h1": {"ranking": [["x"], ["y"], []]},
                "h2": {"ranking": [["w"], []]},
            },
            "doctor_profiles": {
                "main": {"d1": ["y", "x"], "d2": ["w"]},
                "misreport": {"d1": ["y"], "d2": ["w"]},
                "d2_out": {"d1": ["y", "x"], "d2": []},
            },
        }
    )


def theorem4_spec(k: int) -> MarketSpec:
    """d1 has contracts x1..xk with h1, which ranks them in reverse of d1;
    every one of them is stable, so quantile rules pick from the middle."""
    if k < 1:
        raise InputError("k must be positive")
    xs = [f"x{i}" for i in range(1, k + 1)]
    return spec_from_dict(
        {
            "doctors": ["d1", "d2"],
            "hospitals": ["h1", "h2"],
            "contracts": [{"id": x, "doctor": "d1", "hospital": "h1"} for x in xs]
            + [{"id": "w", "doctor": "d2", "hospital": "h2"}],
            "hospital_prefs": {
                "h1": {"ranking": [[x] for x in reversed(xs)] + [[]]},
                "h2": {"ranking": [["w"], []]},
            },
            "doctor_profiles": {
                "main": {"d1": xs, "d2": ["w"]},
                "misreport": {"d1": ["x1"], "d2": ["w"]},
                "d2_out": {"d1": xs, "d2": []},
            },
        }
    )


def allocation_json(allocation) -> list[str]:
    return sorted(allocation)


def outcome_json(outcome: Outcome) -> Optional[str]:
    return outcome


def options_json(options) -> Optional[list]:
    if options is None:
        return None
    return sorted(options, key=lambda o: (o is not None, o or ""))


def pref_json(pref: DoctorPreference) -> list[str]:
    return list(pref.acceptable)


def witness_json(w: ManipulationWitness) -> dict:
    return {
        "doctor": w.doctor,
        "truth": pref_json(w.truth),
        "misreport": pref_json(w.misreport),
        "subprofile": {d: pref_json(p) for d, p in w.subprofile},
        "truthful_outcome": outcome_json(w.truthful_outcome),
        "manipulated_outcome": outcome_json(w.manipulated_outcome),
        "obvious": w.obvious.value if w.obvious is not None else None,
        "truth_options": options_json(w.truth_options),
        "misreport_options": options_json(w.misreport_options),
    }


def audit_json(report: AuditReport, timing: bool = False) -> dict:
    out = {
        "market_digest": report.market_digest,
        "rule": report.rule,
        "verdict": report.verdict,
        "profiles_evaluated": report.profiles_evaluated,
        "manipulations": report.manipulations,
        "obvious_manipulations": report.obvious_manipulations,
        "partial_coverage": report.partial_coverage,
        "witnesses": [witness_json(w) for w in report.witnesses],
    }
    if timing:
        out["wall_time"] = round(report.wall_time, 6)
    return out


def trace_json(trace: DaTrace) -> dict:
    return {
        "side": trace.side,
        "T": trace.T,
        "output": allocation_json(trace.output),
        "rounds": [
            {
                "available": allocation_json(r.available),
                "offers": allocation_json(r.offers),
                "accepted": allocation_json(r.accepted),
            }
            for r in trace.rounds
        ],
    }


def violation_json(v: AxiomViolation) -> dict:
    witness = {
        k: (sorted(val) if isinstance(val, frozenset) else val) for k, val in v.witness.items()
    }
    return {"axiom": v.axiom, "hospital": v.hospital, "witness": witness}


def fraction_text(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


def to_csv(rows: list[dict]) -> str:
    """Flatten rows of scalars and lists into CSV; lists are joined by spaces."""
    buf = _io.StringIO()
    if not rows:
        return ""
    columns = list(rows[0])
    for r in rows[1:]:
        columns += [c for c in r if c not in columns]
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for r in rows:
        writer.writerow({k: _cell(v) for k, v in r.items()})
    return buf.getvalue()


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, list):
        return " ".join("∅" if x is None else str(x) for x in v)
    if isinstance(v, dict):
        return ";".join(f"{k}={_cell(x)}" for k, x in v.items())
    return str(v)
