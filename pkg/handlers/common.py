"""
Shared command plumbing: routers, exit codes, output and argument helpers.
Every command handler returns an exit code; errors are caught here.
"""

import argparse
import json
import logging
import sys
from dataclasses import dataclass
from functools import wraps
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from config import RunConfig
from services.braids import BraidWord, Involution, named_braid
from services.certificate import encode
from services.errors import ClosureNotKnotError, NotAKnotError, XlkError

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NEGATIVE = 2

# Mathematical negatives rather than tool failures
NEGATIVE_ERRORS = (ClosureNotKnotError, NotAKnotError)

Handler = Callable[[argparse.Namespace, RunConfig], int]
Arguments = Callable[[argparse.ArgumentParser], None]


@dataclass
class Command:
    name: str
    help: str
    handler: Handler
    arguments: Optional[Arguments] = None


class Router:
    """Named group of subcommands, registered with the @router.command decorator."""

    def __init__(self, name: str):
        self.name = name
        self.commands: List[Command] = []

    def command(self, name: str, help: str, arguments: Optional[Arguments] = None) -> Callable[[Handler], Handler]:
        def decorator(func: Handler) -> Handler:
            wrapped = handle_errors(func)
            self.commands.append(Command(name, help, wrapped, arguments))
            return wrapped
        return decorator


def handle_errors(func: Handler) -> Handler:
    """Map library errors to exit codes and a one-line message on stderr."""
    @wraps(func)
    def wrapper(args: argparse.Namespace, cfg: RunConfig) -> int:
        try:
            return func(args, cfg)
        except NEGATIVE_ERRORS as e:
            logger.debug(f"{func.__name__}: negative result", exc_info=True)
            print(f"Negative: {e}", file=sys.stderr)
            return EXIT_NEGATIVE
        except XlkError as e:
            logger.debug(f"Error in {func.__name__}: {e}", exc_info=True)
            print(f"Error ({type(e).__name__}): {e}", file=sys.stderr)
            if e.diagnostics:
                print(f"Diagnostics: {json.dumps(encode(e.diagnostics), sort_keys=True)}", file=sys.stderr)
            return EXIT_ERROR
    return wrapper


# ============================================
# OUTPUT
# ============================================

def emit(cfg: RunConfig, payload: Dict[str, Any], lines: Sequence[str]) -> None:
    """Write the report as JSON or text to the configured output (stdout by default)."""
    if cfg.json_output:
        text = json.dumps(encode(payload), indent=2, sort_keys=True)
    else:
        text = "\n".join(lines)
    write_text(cfg, text)


def write_text(cfg: RunConfig, text: str) -> None:
    if cfg.output is None:
        print(text)
        return
    cfg.output.parent.mkdir(parents=True, exist_ok=True)
    cfg.output.write_text(text + "\n", encoding="utf-8")
    logger.info(f"Report written to {cfg.output}")


def section(title: str) -> List[str]:
    return [title, "-" * len(title)]


# ============================================
# ARGUMENTS
# ============================================

def add_braid_arguments(parser: argparse.ArgumentParser, default_name: Optional[str] = None) -> None:
    parser.add_argument("--braid", help='braid word such as "s1 S2 s1" (S = inverse)')
    parser.add_argument("--name", default=default_name, help="named braid from the bundled catalog")
    parser.add_argument("--strands", type=int, help="strand count (default: from the word)")
    parser.add_argument("--involution", choices=("reflect", "mirror"), help="orientation-reversing involution")


def braid_from_args(args: argparse.Namespace, cfg: RunConfig) -> Tuple[BraidWord, Involution]:
    """--braid wins over --name; --involution overrides the catalog's."""
    if args.braid:
        b = BraidWord.parse(args.braid, args.strands)
        tau = Involution.parse(args.involution or "reflect", b.n)
        return b, tau
    if not args.name:
        raise XlkError("Give --braid or --name")
    b, tau = named_braid(args.name, cfg.data_dir / "braids.json")
    if args.involution:
        tau = Involution.parse(args.involution, b.n)
    return b, tau
