"""
Utils package for xlk.
Contains formatting helpers for logs and reports.
"""

from .logger import format_complex, format_matrix, format_residual

__all__ = [
    "format_complex",
    "format_matrix",
    "format_residual",
]
