import json

import pytest
from gmpy2 import mpq

from rankident.certify import (
    IDENTIFIABLE,
    INCONCLUSIVE,
    REFERENCE_CASES,
    REFUTED,
    SCHEMA_VERSION,
    CertifyConfig,
    certify,
    induction_audit,
    run_case,
)
from rankident.dsl import system_from_text
from rankident.models import FAMILIES, MixtureParams, ModelKind, ParametricSystem, build_system
from rankident.polyarith import StructuralError

FAST = CertifyConfig(parametric_seconds=30, instance_seconds=60, extra_draws=5)


def _toy(toy_text, expect=None, sol=None):
    text = toy_text
    if expect is not None:
        text = text.replace("expect: 1", f"expect: {expect}")
    if sol is not None:
        text = text.replace("sol: x1 = 1 - 2*t, x2 = 2/(1 - 2*t)", sol)
    return system_from_text(text)


def test_toy_passes_at_parametric_level(toy_text):
    cert = certify(_toy(toy_text), {"t": 0}, FAST)
    assert cert.verdict.status == IDENTIFIABLE and cert.verdict.count == 1
    assert cert.verdict.level == "parametric"
    assert cert.assumption2.bad_set == ("2*t - 1",)
    assert cert.assumption2.witness_avoids and cert.assumption2.degree == 1
    assert cert.assumption1.passed and cert.assumption1.draws == 5
    assert cert.exit_code == 0


def test_toy_bad_set_hit_is_inconclusive(toy_text):
    cert = certify(_toy(toy_text), {"t": mpq(1, 2)}, FAST)
    assert cert.verdict.status == INCONCLUSIVE
    assert "2*t - 1" in cert.verdict.reason
    assert cert.assumption2.witness_avoids is False
    assert cert.assumption2.instance_status == "skipped"
    assert cert.exit_code == 2


def test_wrong_count_is_refuted(toy_text):
    cert = certify(_toy(toy_text, expect=2), {"t": 3}, FAST)
    assert cert.verdict.status == REFUTED
    assert "expected degree 2, found degree 1" in cert.verdict.reason
    assert cert.exit_code == 1


def test_wrong_template_stops_early(toy_text):
    system = _toy(toy_text, sol="sol: x1 = 1 - 2*t, x2 = 2/(1 + 2*t)")
    cert = certify(system, {"t": 0}, FAST)
    assert cert.verdict.status == INCONCLUSIVE
    assert not cert.assumption1.passed
    # no later stage is reported as passed after an earlier failure
    assert cert.assumption2.degree is None and cert.assumption2.instance_status == "skipped"


def test_parametric_timeout_gives_witness_level():
    kind = ModelKind.known("mnl3", "3/10")
    system = build_system(kind, 4)
    witness = system.witness(MixtureParams((1, 2, 3, 4), (1, 5, 4, 2), "3/10"))
    cert = certify(system, witness, CertifyConfig(parametric_seconds=0.01, extra_draws=3))
    assert cert.assumption2.parametric_status == "timeout"
    assert cert.verdict.status == IDENTIFIABLE and cert.verdict.level == "witness"


def test_instance_timeout_is_inconclusive():
    system = build_system(ModelKind.unknown("pl"), 4)
    params = MixtureParams(("1/10", "2/10", "3/10", "4/10"), ("1/20", "14/20", "2/20", "3/20"), "7/10")
    config = CertifyConfig(parametric=False, instance_seconds=0.5, engine="exact", extra_draws=1)
    cert = certify(system, system.witness(params), config)
    assert cert.verdict.status == INCONCLUSIVE
    assert cert.assumption2.instance_status == "timeout"


def test_missing_witness_value(toy_text):
    with pytest.raises(StructuralError):
        certify(_toy(toy_text), {}, FAST)


def test_certificate_json_is_deterministic(toy_text):
    a = certify(_toy(toy_text), {"t": 5}, FAST).to_json()
    b = certify(_toy(toy_text), {"t": 5}, FAST).to_json()
    assert a == b
    doc = json.loads(a)
    assert doc["schema_version"] == SCHEMA_VERSION
    assert doc["witness"] == {"t": "5"}
    assert doc["resource_usage"]["wall_seconds"] is None
    assert doc["verdict"]["status"] == IDENTIFIABLE


def test_non_reference_weight_is_annotated():
    kind = ModelKind.known("mnl23", "2/5")
    system = build_system(kind, 3)
    witness = system.witness(MixtureParams((1, 2, 3), (1, 5, 4), "2/5"))
    cert = certify(system, witness, CertifyConfig(parametric=False, extra_draws=3))
    assert cert.verdict.status == IDENTIFIABLE
    assert any("not reference-checked" in n for n in cert.notes)


def test_swap_consistency():
    kind = ModelKind.unknown("mnl23")
    system = build_system(kind, 4)
    params = MixtureParams((1, 2, 3, 4), (1, 5, 4, 2), "7/10")
    config = CertifyConfig(parametric=False, extra_draws=3)
    first = certify(system, system.witness(params), config)
    second = certify(system, system.witness(params.swapped()), config)
    assert first.assumption2.degree == second.assumption2.degree == 2


def test_reference_cases_cover_every_family():
    assert len(REFERENCE_CASES) == 8
    assert {c.kind.family for c in REFERENCE_CASES} == set(FAMILIES)
    assert len({c.case_id for c in REFERENCE_CASES}) == 8


def test_run_case_row():
    case = next(c for c in REFERENCE_CASES if c.case_id == "mnl23-known-n3")
    row = run_case(case, CertifyConfig(parametric_seconds=5))
    assert row.match and row.computed == {"dim": 0, "degree": 1}
    assert row.verdict == "GenericallyIdentifiable(1)"


# -- induction audit -----------------------------------------------------------------

@pytest.mark.parametrize("family", FAMILIES)
def test_audit_unknown_weight(family):
    kind = ModelKind.unknown(family)
    report = induction_audit(kind, kind.min_n + 2, trials=20, seed=1)
    assert report.failures == [] and report.successes == 40


def test_audit_degenerate_draws_excluded():
    kind = ModelKind.known("btl", "7/10")
    same = MixtureParams((1, 2, 3, 4, 5, 6), (1, 2, 3, 4, 5, 6), "7/10")
    report = induction_audit(kind, 6, trials=1, draws=[same])
    assert report.degenerate == 1 and report.attempted == 0 and report.failure_rate == 0.0


def test_audit_logs_concrete_failures():
    kind = ModelKind.known("btl", "7/10")
    # components agree on the anchor items and on the new item: the 2x2 step is singular
    bad = MixtureParams((1, 2, 3, 4, 5, 6), (1, 2, 3, 4, 9, 6), "7/10")
    report = induction_audit(kind, 6, trials=1, draws=[bad])
    (failure,) = report.failures
    assert failure.n == 6 and failure.trial == 0 and failure.reason == "singular 2x2 step"
    assert failure.params["b"] == ["1", "2", "3", "4", "9", "6"]
    assert report.failure_rate == 1.0


def test_audit_rejects_base_case():
    with pytest.raises(StructuralError):
        induction_audit(ModelKind.known("btl", "7/10"), 5)
