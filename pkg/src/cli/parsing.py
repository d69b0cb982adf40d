import re
from fractions import Fraction
from typing import List, Optional, Tuple

import numpy as np

from ..core.exceptions import ParseError
from ..core.models import GroupFamily, GroupSpec, KRegion

_SEPARATORS = re.compile(r"[\s,;]+")


def parse_complex(token: str) -> complex:
    """'2', '-1.5', '3i', '1+2i', '-i' and the j-suffixed forms."""
    text = token.strip().replace("I", "i").replace("i", "j")
    try:
        return complex(text)
    except ValueError as e:
        raise ParseError(f"Cannot parse matrix entry {token!r}") from e


def parse_matrix(text: str, size: int) -> np.ndarray:
    tokens = [t for t in _SEPARATORS.split(text.strip()) if t]
    if len(tokens) != size * size:
        raise ParseError(f"expected {size * size} entries for a {size}x{size} matrix, got {len(tokens)}")
    values = np.array([parse_complex(t) for t in tokens], dtype=complex).reshape(size, size)
    return values


def group_spec(family: GroupFamily, n: Optional[int] = None) -> GroupSpec:
    if family == GroupFamily.SO1N and n is None:
        raise ParseError("so1n needs --n")
    return GroupSpec.for_family(family, n)


def parse_fraction(text: str) -> Fraction:
    try:
        return Fraction(text.strip())
    except (ValueError, ZeroDivisionError) as e:
        raise ParseError(f"Cannot parse rational {text!r}") from e


def parse_psi(text: str) -> List[Tuple[Fraction, Fraction]]:
    """'lo:hi' per N-coordinate, coordinates separated by commas."""
    intervals = []
    for part in text.split(","):
        bounds = part.split(":")
        if len(bounds) != 2:
            raise ParseError(f"psi interval must look like lo:hi, got {part!r}")
        intervals.append((parse_fraction(bounds[0]), parse_fraction(bounds[1])))
    return intervals


def parse_phi(text: str) -> KRegion:
    """'full', 'arc:lo:hi' (radians) or 'cap:c1,c2,c3,c4:radius'."""
    kind, _, rest = text.strip().lower().partition(":")
    try:
        if kind == "full":
            return KRegion.full()
        if kind == "arc":
            lo, hi = rest.split(":")
            return KRegion.arc(float(lo), float(hi))
        if kind == "cap":
            center, radius = rest.split(":")
            c = tuple(float(x) for x in center.split(","))
            if len(c) != 4:
                raise ParseError(f"cap center needs 4 coordinates, got {len(c)}")
            return KRegion.cap(c, float(radius))
    except ValueError as e:
        raise ParseError(f"Malformed K-region {text!r}: {e}") from e
    raise ParseError(f"Unknown K-region {text!r}")
