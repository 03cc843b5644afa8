"""
Certificate format: canonical JSON, digest and structural validation.

A certificate body is encoded with sorted keys and compact separators;
complex numbers become [re, im] pairs and non-finite floats become null.
The digest is the SHA-256 of the canonical body without the digest field.
"""

import hashlib
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from services.errors import CertificateError

logger = logging.getLogger(__name__)

SCHEMA_NAME = "xlk-certificate"
SCHEMA_VERSION = 1
CONSTRUCTIONS = ("I", "II", "parabolic")
REQUIRED_RANK = {"I": 2, "II": 2, "parabolic": 1}

# Fields every certificate must carry
REQUIRED_FIELDS = {
    "schema": str,
    "version": int,
    "construction": str,
    "label": str,
    "input": dict,
    "seed": int,
    "tolerances": dict,
    "samples": list,
    "rank_verdict": dict,
    "max_residual": (int, float),
    "checks": dict,
    "digest": str,
}

REQUIRED_TOLERANCES = ("residual", "rank_cutoff", "gap_ratio", "min_gap", "step")
REQUIRED_SAMPLE_FIELDS = ("params", "residual", "rank")
REQUIRED_RANK_FIELDS = ("singular_values", "rank", "gap", "certificate_grade")


# ============================================
# ENCODING
# ============================================

def encode(value: Any) -> Any:
    """JSON-ready copy of nested data."""
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [encode(v) for v in value]
    if isinstance(value, np.ndarray):
        return [encode(v) for v in value.tolist()]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (complex, np.complexfloating)):
        return [encode(float(value.real)), encode(float(value.imag))]
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, Path):
        return str(value)
    return value


def decode_complex(pair: Sequence[float]) -> complex:
    return complex(float(pair[0]), float(pair[1]))


def canonical_json(body: Dict[str, Any]) -> str:
    return json.dumps(encode(body), sort_keys=True, separators=(",", ":"), allow_nan=False)


def compute_digest(body: Dict[str, Any]) -> str:
    content = {k: v for k, v in body.items() if k != "digest"}
    return hashlib.sha256(canonical_json(content).encode("utf-8")).hexdigest()


# ============================================
# CERTIFICATE
# ============================================

@dataclass
class Certificate:
    """Numeric evidence that a knot's character variety has a large component."""

    construction: str
    label: str
    input: Dict[str, Any]
    seed: int
    tolerances: Dict[str, float]
    samples: List[Dict[str, Any]] = field(default_factory=list)
    checks: Dict[str, Any] = field(default_factory=dict)

    @property
    def required_rank(self) -> int:
        return REQUIRED_RANK[self.construction]

    @property
    def max_residual(self) -> float:
        return max((float(s["residual"]) for s in self.samples), default=0.0)

    def rank_verdict(self) -> Dict[str, Any]:
        ranks = [int(s["rank"]["rank"]) for s in self.samples]
        grades = [bool(s["rank"]["certificate_grade"]) for s in self.samples]
        certified = bool(ranks) and min(ranks) >= self.required_rank and all(grades)
        return {
            "required": self.required_rank,
            "rank_min": min(ranks) if ranks else 0,
            "points": len(ranks),
            "certificate_grade": all(grades) if grades else False,
            "certified": certified,
        }

    def body(self) -> Dict[str, Any]:
        return encode({
            "schema": SCHEMA_NAME,
            "version": SCHEMA_VERSION,
            "construction": self.construction,
            "label": self.label,
            "input": self.input,
            "seed": self.seed,
            "tolerances": self.tolerances,
            "samples": self.samples,
            "rank_verdict": self.rank_verdict(),
            "max_residual": self.max_residual,
            "checks": self.checks,
        })

    def to_dict(self) -> Dict[str, Any]:
        body = self.body()
        body["digest"] = compute_digest(body)
        return body

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def write_certificates(certificates: Sequence[Certificate], path: Path) -> None:
    """One certificate is written as an object, several as a list."""
    if len(certificates) == 1:
        text = certificates[0].to_json()
    else:
        text = "[" + ",".join(c.to_json() for c in certificates) + "]"
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text + "\n", encoding="utf-8")
    logger.info(f"Wrote {len(certificates)} certificate(s) to {path}")


def load_certificates(path: Path) -> List[Dict[str, Any]]:
    try:
        data = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CertificateError(f"Certificate file not found: {path}")
    except json.JSONDecodeError as e:
        raise CertificateError(f"Certificate file {path} is not valid JSON: {e}")
    items: List[Any] = data if isinstance(data, list) else [data]
    for item in items:
        if not isinstance(item, dict):
            raise CertificateError(f"Certificate file {path} holds a non-object entry")
    return items


# ============================================
# VALIDATION
# ============================================

def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def validate_certificate(data: Dict[str, Any]) -> List[str]:
    """Structural problems of a decoded certificate; empty when it is well formed."""
    problems: List[str] = []
    for name, kind in REQUIRED_FIELDS.items():
        if name not in data:
            problems.append(f"missing field '{name}'")
        elif not isinstance(data[name], kind) or isinstance(data[name], bool):
            problems.append(f"field '{name}' has type {type(data[name]).__name__}")
    if problems:
        return problems

    if data["schema"] != SCHEMA_NAME:
        problems.append(f"unknown schema '{data['schema']}'")
    if data["version"] != SCHEMA_VERSION:
        problems.append(f"unsupported version {data['version']}")
    if data["construction"] not in CONSTRUCTIONS:
        problems.append(f"unknown construction '{data['construction']}'")
    for name in REQUIRED_TOLERANCES:
        value = data["tolerances"].get(name)
        if not _is_number(value) or value <= 0:
            problems.append(f"tolerance '{name}' must be a positive number")
    if not data["samples"]:
        problems.append("no samples")

    for k, sample in enumerate(data["samples"]):
        if not isinstance(sample, dict):
            problems.append(f"sample {k} is not an object")
            continue
        for name in REQUIRED_SAMPLE_FIELDS:
            if name not in sample:
                problems.append(f"sample {k} lacks '{name}'")
        if "params" in sample and not all(
            isinstance(p, list) and len(p) == 2 and all(_is_number(v) for v in p) for p in sample["params"]
        ):
            problems.append(f"sample {k} has malformed params")
        if "residual" in sample and not _is_number(sample["residual"]):
            problems.append(f"sample {k} residual is not a number")
        rank = sample.get("rank")
        if isinstance(rank, dict):
            for name in REQUIRED_RANK_FIELDS:
                if name not in rank:
                    problems.append(f"sample {k} rank lacks '{name}'")
        elif "rank" in sample:
            problems.append(f"sample {k} rank is not an object")
    return problems


def check_digest(data: Dict[str, Any]) -> Optional[str]:
    expected = compute_digest(data)
    if data.get("digest") != expected:
        return f"digest mismatch (recorded {str(data.get('digest'))[:12]}..., computed {expected[:12]}...)"
    return None


def check_thresholds(data: Dict[str, Any]) -> List[str]:
    """Recorded numbers against the recorded tolerances."""
    problems: List[str] = []
    tolerances = data["tolerances"]
    bound = float(tolerances.get("closure_residual", tolerances["residual"]))
    required = REQUIRED_RANK.get(data["construction"], 1)
    for k, sample in enumerate(data["samples"]):
        if float(sample["residual"]) >= bound:
            problems.append(f"sample {k} residual {sample['residual']:.2e} is not below {bound:.0e}")
        rank = sample["rank"]
        if int(rank["rank"]) < required:
            problems.append(f"sample {k} rank {rank['rank']} below {required}")
        gap = rank["gap"]
        grade = _is_number(gap) and gap >= float(tolerances["gap_ratio"])
        if bool(rank["certificate_grade"]) != grade:
            problems.append(f"sample {k} certificate grade does not match its gap")
        if not grade:
            problems.append(f"sample {k} gap below {tolerances['gap_ratio']:.0e}")
    recorded_max = max((float(s["residual"]) for s in data["samples"]), default=0.0)
    if float(data["max_residual"]) != recorded_max:
        problems.append("max_residual does not match the samples")
    return problems


@dataclass
class VerificationReport:
    label: str
    construction: str
    problems: List[str] = field(default_factory=list)
    reran: bool = False

    @property
    def ok(self) -> bool:
        return not self.problems

    def to_dict(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "construction": self.construction,
            "ok": self.ok,
            "reran": self.reran,
            "problems": list(self.problems),
        }


def static_checks(data: Dict[str, Any]) -> VerificationReport:
    """Structure, digest and thresholds, without recomputation."""
    report = VerificationReport(str(data.get("label", "?")), str(data.get("construction", "?")))
    report.problems.extend(validate_certificate(data))
    if report.problems:
        return report
    digest_problem = check_digest(data)
    if digest_problem:
        report.problems.append(digest_problem)
    report.problems.extend(check_thresholds(data))
    return report


