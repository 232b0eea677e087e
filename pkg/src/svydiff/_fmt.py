"""Small numeric formatting helpers shared by report writers and the viewer bundle."""

from __future__ import annotations


def fmt_sig(value: float | None, digits: int = 6) -> str:
    """Format with `digits` significant figures; None becomes the empty string."""
    if value is None:
        return ""
    return f"{value:.{digits}g}"


def fmt_repr(value: float | None) -> str:
    """Shortest round-trip representation; None becomes the empty string."""
    if value is None:
        return ""
    return repr(float(value))
