"""Exact rational helpers.

All numeric quantities in this package (weights, thresholds, discount
factors, satisfaction values) are `fractions.Fraction` instances; floats
are never used. This module owns the text syntax for rationals: `n/d`,
an integer, or a decimal with at most 6 places, all converted exactly.
"""

from fractions import Fraction

from .errors import ParseError

ZERO = Fraction(0)
ONE = Fraction(1)

_MAX_DECIMAL_PLACES = 6


def parse_rational(text: str, line: int | None = None, col: int | None = None) -> Fraction:
    text = text.strip()
    if "." in text:
        places = len(text.split(".", 1)[1])
        if places > _MAX_DECIMAL_PLACES:
            raise ParseError(
                f"decimal {text!r} has more than {_MAX_DECIMAL_PLACES} places", line, col
            )
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise ParseError(f"invalid rational {text!r}: {exc}", line, col) from None


def format_rational(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def require_unit(value: Fraction, what: str) -> Fraction:
    if not (ZERO <= value <= ONE):
        raise ParseError(f"{what} must lie in [0,1], got {format_rational(value)}")
    return value
