"""
Certificate commands: certify-10-98, certify-10-99, certify-10-123 and verify.
"""

import argparse
import logging
from pathlib import Path
from typing import List

from config import RunConfig
from handlers.common import EXIT_NEGATIVE, EXIT_OK, Router, emit, section, write_text
from services.braids import named_braid
from services.certificate import Certificate, load_certificates, write_certificates
from services.pipelines import certify_construction1, certify_construction2, verify_certificate

logger = logging.getLogger(__name__)
router = Router(name="certify")


def _publish(cfg: RunConfig, certificates: List[Certificate]) -> int:
    """Write certificates (canonical JSON) and report the verdicts."""
    if cfg.output is not None:
        write_certificates(certificates, cfg.output)
    elif len(certificates) == 1:
        write_text(cfg, certificates[0].to_json())
    else:
        write_text(cfg, "[" + ",".join(c.to_json() for c in certificates) + "]")
    certified = all(c.rank_verdict()["certified"] for c in certificates)
    for cert in certificates:
        logger.info(f"{cert.label} ({cert.construction}): {cert.rank_verdict()}")
    return EXIT_OK if certified else EXIT_NEGATIVE


@router.command("certify-10-98", "rank certificate for the tangle replacement of the bundled split trefoil")
def cmd_certify_10_98(args: argparse.Namespace, cfg: RunConfig) -> int:
    return _publish(cfg, [certify_construction1("10_98", cfg)])


@router.command("certify-10-99", "rank certificates for 10_99 by both constructions")
def cmd_certify_10_99(args: argparse.Namespace, cfg: RunConfig) -> int:
    b, tau = named_braid("10_99", cfg.data_dir / "braids.json")
    return _publish(cfg, [
        certify_construction1("10_99", cfg),
        certify_construction2(b, tau, "10_99", cfg),
    ])


@router.command("certify-10-123", "rank certificate for 10_123 from its braid-involution decomposition")
def cmd_certify_10_123(args: argparse.Namespace, cfg: RunConfig) -> int:
    b, tau = named_braid("10_123", cfg.data_dir / "braids.json")
    return _publish(cfg, [certify_construction2(b, tau, "10_123", cfg)])


def _verify_args(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("certificate", type=Path, help="certificate JSON file (one object or a list)")
    parser.add_argument("--no-rerun", action="store_true", help="structure, digest and thresholds only")


@router.command("verify", "re-verify certificate files", _verify_args)
def cmd_verify(args: argparse.Namespace, cfg: RunConfig) -> int:
    reports = [verify_certificate(data, cfg, rerun=not args.no_rerun) for data in load_certificates(args.certificate)]
    lines = section(f"Verification of {args.certificate}")
    for report in reports:
        status = "ok" if report.ok else "FAILED"
        lines.append(f"  {report.label} ({report.construction}): {status}{' (rerun)' if report.reran else ''}")
        lines += [f"    - {problem}" for problem in report.problems]
    emit(cfg, {"file": str(args.certificate), "reports": [r.to_dict() for r in reports]}, lines)
    return EXIT_OK if all(r.ok for r in reports) else EXIT_NEGATIVE
