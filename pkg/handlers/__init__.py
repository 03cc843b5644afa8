"""
Handlers package for xlk.
One router per command group; the entry script registers them all.
"""

from .braids import router as braids_router
from .certify import router as certify_router
from .diagrams import router as diagrams_router
from .trace import router as trace_router

__all__ = ["trace_router", "diagrams_router", "braids_router", "certify_router"]
