"""
Formatting helpers for logs and text reports.
Renders complex scalars, 2x2 matrices and residuals compactly.
"""

from typing import Any, Optional

from services.matrices import Mat2, is_exact


def format_complex(value: Any, digits: int = 6) -> str:
    """
    Render a scalar for humans.

    Exact values use their own text form; floats drop a zero imaginary part.

    Args:
        value: Exact scalar or complex number
        digits: Significant digits for floats

    Returns:
        Text such as "1.5-0.25i"
    """
    if is_exact(value):
        return str(value)
    z = complex(value)
    if z.imag == 0:
        return f"{z.real:.{digits}g}"
    if z.real == 0:
        return f"{z.imag:.{digits}g}i"
    sign = "+" if z.imag >= 0 else "-"
    return f"{z.real:.{digits}g}{sign}{abs(z.imag):.{digits}g}i"


def format_matrix(m: Mat2, digits: int = 6) -> str:
    entries = [format_complex(e, digits) for e in m.entries]
    return f"[[{entries[0]}, {entries[1]}], [{entries[2]}, {entries[3]}]]"


def format_residual(value: Optional[float], bound: Optional[float] = None) -> str:
    """Residual in scientific notation, marked against a bound when one is given."""
    if value is None:
        return "n/a"
    text = f"{value:.2e}"
    if bound is None:
        return text
    return f"{text} ({'ok' if value < bound else 'FAIL'} < {bound:.0e})"
