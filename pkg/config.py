"""
Configuration module for xlk.
Loads environment variables and provides typed run settings.
"""

import os
import logging
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, List, Optional, Union

from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

logger = logging.getLogger(__name__)

DEFAULT_DATA_DIR = Path(__file__).parent / "data"
OUTPUT_FORMATS = ("text", "json")
LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")


@dataclass
class RunConfig:
    """
    Run settings loaded from XLK_* environment variables, overridable from the command line.

    Fields accept raw environment strings; __post_init__ parses them, so after
    construction the numeric fields hold int or float and data_dir a Path.
    """

    # Seed for every multi-start search
    seed: Union[int, str] = field(default_factory=lambda: os.getenv("XLK_SEED", "42"))

    # Residual bound for representation points
    tol: Union[float, str] = field(default_factory=lambda: os.getenv("XLK_TOL", "1e-10"))

    # Relative singular value cutoff for the Jacobian rank
    rank_cutoff: Union[float, str] = field(default_factory=lambda: os.getenv("XLK_RANK_CUTOFF", "1e-3"))

    # Gap between accepted and rejected singular values for a certificate
    gap_ratio: Union[float, str] = field(default_factory=lambda: os.getenv("XLK_GAP_RATIO", "1e6"))

    # Below this gap the rank is indeterminate
    min_gap: Union[float, str] = field(default_factory=lambda: os.getenv("XLK_MIN_GAP", "1e2"))

    # Central-difference step
    step: Union[float, str] = field(default_factory=lambda: os.getenv("XLK_STEP", "1e-5"))

    # Number of sample points
    count: Union[int, str] = field(default_factory=lambda: os.getenv("XLK_COUNT", "5"))

    # text or json
    output_format: str = field(default_factory=lambda: os.getenv("XLK_FORMAT", "text"))

    data_dir: Union[Path, str] = field(default_factory=lambda: os.getenv("XLK_DATA_DIR", str(DEFAULT_DATA_DIR)))

    log_level: str = field(default_factory=lambda: os.getenv("XLK_LOG_LEVEL", "INFO"))

    # Where reports are written; stdout when unset
    output: Optional[Union[Path, str]] = None

    def __post_init__(self):
        """Parse raw environment strings, then validate."""
        errors: List[str] = []
        self.seed = self._parse("seed", int, errors)
        self.count = self._parse("count", int, errors)
        for name in ("tol", "rank_cutoff", "gap_ratio", "min_gap", "step"):
            setattr(self, name, self._parse(name, float, errors))
        self.output_format = str(self.output_format).lower()
        self.log_level = str(self.log_level).upper()
        self.data_dir = Path(self.data_dir)
        if self.output is not None:
            self.output = Path(self.output)
        self._validate(errors)

    def _parse(self, name: str, kind: type, errors: List[str]) -> Any:
        value = getattr(self, name)
        try:
            return kind(value)
        except (TypeError, ValueError):
            errors.append(f"{name} must be {kind.__name__}, got '{value}'")
            return value

    def _validate(self, errors: List[str]) -> None:
        """Validate parsed values; every problem is logged before raising."""
        if isinstance(self.seed, int) and self.seed < 0:
            errors.append("seed must be a non-negative integer")
        if isinstance(self.count, int) and self.count < 1:
            errors.append("count must be at least 1")
        for name in ("tol", "rank_cutoff", "gap_ratio", "min_gap", "step"):
            value = getattr(self, name)
            if isinstance(value, float) and not value > 0:
                errors.append(f"{name} must be positive")
        if isinstance(self.min_gap, float) and isinstance(self.gap_ratio, float) and self.min_gap > self.gap_ratio:
            errors.append("min_gap cannot exceed gap_ratio")
        if self.output_format not in OUTPUT_FORMATS:
            errors.append(f"format must be one of {', '.join(OUTPUT_FORMATS)}")
        if self.log_level not in LOG_LEVELS:
            errors.append(f"log level must be one of {', '.join(LOG_LEVELS)}")
        if not self.data_dir.is_dir():
            logger.warning(f"Data directory {self.data_dir} does not exist - bundled examples unavailable")

        if errors:
            for error in errors:
                logger.error(f"Configuration error: {error}")
            raise ValueError(f"Invalid configuration: {', '.join(errors)}")

    def with_overrides(self, **overrides: Any) -> "RunConfig":
        """Copy with command-line values replacing environment ones; None means not given."""
        given = {k: v for k, v in overrides.items() if v is not None}
        return replace(self, **given)

    def tolerances(self) -> dict:
        return {
            "residual": self.tol,
            "rank_cutoff": self.rank_cutoff,
            "gap_ratio": self.gap_ratio,
            "min_gap": self.min_gap,
            "step": self.step,
        }

    @property
    def json_output(self) -> bool:
        return self.output_format == "json"


_config: Optional[RunConfig] = None


def get_config() -> RunConfig:
    """Process-wide configuration, created on first use."""
    global _config
    if _config is None:
        _config = RunConfig()
    return _config
