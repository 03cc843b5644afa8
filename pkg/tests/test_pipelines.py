import json

import pytest

from config import RunConfig
from services.braids import BraidWord, Involution, InvolutionKind
from services.errors import CertificateError
from services.pipelines import (
    certify_construction1,
    certify_construction2,
    require_verified,
    verify_certificate,
)

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def cfg() -> RunConfig:
    return RunConfig(seed=42, count=3)


@pytest.fixture(scope="module")
def cert_10_98(cfg):
    return certify_construction1("10_98", cfg)


def test_construction1_certificate(cert_10_98):
    verdict = cert_10_98.rank_verdict()
    assert verdict["certified"]
    assert verdict["points"] == 3
    assert cert_10_98.max_residual < 1e-10
    assert cert_10_98.checks["character_separation"] > 1e-6


def test_same_seed_same_certificate(cfg, cert_10_98):
    assert certify_construction1("10_98", cfg).to_json() == cert_10_98.to_json()


def test_construction1_verifies(cfg, cert_10_98):
    report = verify_certificate(json.loads(cert_10_98.to_json()), cfg)
    assert report.ok, report.problems
    assert report.reran
    require_verified(report)


def test_tampered_certificate_fails(cfg, cert_10_98):
    data = json.loads(cert_10_98.to_json())
    data["input"]["tangle"] = "2 1"
    report = verify_certificate(data, cfg)
    assert not report.ok
    with pytest.raises(CertificateError):
        require_verified(report)


def test_construction2_certificate_verifies(cfg):
    b = BraidWord.parse("s1 S2 s1 S2 s1")
    cert = certify_construction2(b, Involution(InvolutionKind.REFLECT, 3), "10_123", cfg)
    assert cert.rank_verdict()["certified"]
    report = verify_certificate(json.loads(cert.to_json()), cfg, rerun=False)
    assert report.ok, report.problems


def test_construction2_certificate_for_10_99(cfg):
    b = BraidWord.parse("s1 S2 S2 s1 s1")
    cert = certify_construction2(b, Involution(InvolutionKind.REFLECT, 3), "10_99", cfg)
    verdict = cert.rank_verdict()
    assert verdict["certified"]
    assert verdict["points"] == len(cert.samples)
    assert cert.checks["all_A_square_ok"]
    report = verify_certificate(json.loads(cert.to_json()), cfg, rerun=False)
    assert report.ok, report.problems
