import json

import pytest

from config import RunConfig
from services.certificate import (
    Certificate,
    canonical_json,
    load_certificates,
    static_checks,
    validate_certificate,
    write_certificates,
)
from services.errors import CertificateError


def make_certificate(gap: float = 1e8, residual: float = 1e-12) -> Certificate:
    cfg = RunConfig()
    sample = {
        "params": [complex(2.0, 0.0), complex(1.0, 0.5)],
        "residual": residual,
        "rank": {
            "singular_values": [3.2, 0.7, 1e-9],
            "rank": 2,
            "gap": gap,
            "certificate_grade": gap >= cfg.gap_ratio,
            "full_rank": True,
        },
    }
    return Certificate(
        construction="I",
        label="10_98",
        input={"tangle": "2 0", "crossing": "c"},
        seed=cfg.seed,
        tolerances=cfg.tolerances(),
        samples=[sample],
    )


def test_encoding_is_deterministic():
    assert make_certificate().to_json() == make_certificate().to_json()
    assert canonical_json({"b": 1, "a": 1j}) == '{"a":[0.0,1.0],"b":1}'


def test_well_formed_certificate_passes():
    data = json.loads(make_certificate().to_json())
    assert validate_certificate(data) == []
    report = static_checks(data)
    assert report.ok, report.problems


def test_tampered_residual_breaks_the_digest():
    data = json.loads(make_certificate().to_json())
    data["samples"][0]["residual"] = 1e-13
    report = static_checks(data)
    assert not report.ok
    assert any("digest mismatch" in p for p in report.problems)


def test_missing_fields_are_reported():
    data = json.loads(make_certificate().to_json())
    del data["seed"]
    del data["samples"][0]["rank"]
    assert "missing field 'seed'" in validate_certificate(data)
    data["seed"] = 42
    assert "sample 0 lacks 'rank'" in validate_certificate(data)


def test_rank_verdict():
    verdict = make_certificate().rank_verdict()
    assert verdict == {"required": 2, "rank_min": 2, "points": 1, "certificate_grade": True, "certified": True}
    weak = make_certificate(gap=1e3).rank_verdict()
    assert not weak["certified"]


def test_weak_gap_fails_thresholds():
    data = json.loads(make_certificate(gap=1e3).to_json())
    report = static_checks(data)
    assert any("gap below" in p for p in report.problems)


def test_write_and_load(tmp_path):
    path = tmp_path / "out" / "certs.json"
    write_certificates([make_certificate()], path)
    assert len(load_certificates(path)) == 1
    write_certificates([make_certificate(), make_certificate(residual=2e-12)], path)
    loaded = load_certificates(path)
    assert len(loaded) == 2
    assert loaded[1]["max_residual"] == 2e-12


def test_load_errors(tmp_path):
    with pytest.raises(CertificateError):
        load_certificates(tmp_path / "missing.json")
    broken = tmp_path / "broken.json"
    broken.write_text("{not json", encoding="utf-8")
    with pytest.raises(CertificateError):
        load_certificates(broken)
    scalar = tmp_path / "scalar.json"
    scalar.write_text("[1, 2]", encoding="utf-8")
    with pytest.raises(CertificateError):
        load_certificates(scalar)
