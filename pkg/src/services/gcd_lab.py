import logging
import math
from fractions import Fraction
from typing import Dict, Iterator, Optional, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..core.config import settings
from ..core.exceptions import ConfigMismatch, NotPrimitive
from ..core.models import (
    GroupElement,
    GroupSpec,
    KRegion,
    KRegionKind,
    PrimitiveVectorZ,
    ShortestSolutionZ,
    SolutionSign,
    TWO_PI,
)

logger = logging.getLogger(__name__)

ROW_CHUNK = 256
# beyond this radius the int64 intermediates of the reduction may overflow
INT64_SAFE_RADIUS = 1 << 28

Z_SCAN_COLUMNS = ["a", "b", "x", "y", "ncomp_num", "ncomp_den", "ratio", "theta_v", "sign", "angle_v", "norm_v"]


def norm2_bound(r: float) -> int:
    """Largest integer N with N <= r^2, tolerant of r^2 landing just below an integer."""
    r2 = r * r
    nearest = round(r2)
    if abs(r2 - nearest) <= 1e-9 * max(1.0, r2):
        return int(nearest)
    return int(math.floor(r2))


def egcd(a: int, b: int) -> Tuple[int, int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r != 0:
        q = old_r // r
        old_r, r = r, old_r - q * r
        old_s, s = s, old_s - q * s
        old_t, t = t, old_t - q * t
    if old_r < 0:
        return -old_r, -old_s, -old_t
    return old_r, old_s, old_t


def in_arc(angles: np.ndarray, region: Optional[KRegion]) -> np.ndarray:
    if region is None or region.kind == KRegionKind.FULL:
        return np.ones(np.shape(angles), dtype=bool)
    if region.kind != KRegionKind.ARC:
        raise ConfigMismatch("caps apply to O_d pairs, not to integer vectors")
    offset = np.mod(np.asarray(angles) - region.lo, TWO_PI)
    return offset < region.arc_length


def vector_angles(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.mod(np.arctan2(np.asarray(b, dtype=float), np.asarray(a, dtype=float)), TWO_PI)


def primitive_z2_arrays(
    norm2_max: int,
    norm2_min: int = 0,
    sector: Optional[KRegion] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Primitive (a, b) with norm2_min < a^2 + b^2 <= norm2_max, sorted by norm then angle."""
    if norm2_max < 1 or norm2_max <= norm2_min:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)

    radius = math.isqrt(norm2_max)
    dtype = np.int64 if radius < INT64_SAFE_RADIUS else object
    b_range = np.arange(-radius, radius + 1, dtype=np.int64).astype(dtype)

    a_parts, b_parts = [], []
    starts = range(-radius, radius + 1, ROW_CHUNK)
    for start in tqdm(starts, desc="primitive rows", disable=not settings.progress):
        rows = np.arange(start, min(start + ROW_CHUNK, radius + 1), dtype=np.int64).astype(dtype)
        A, B = np.meshgrid(rows, b_range, indexing="ij")
        N = A * A + B * B
        mask = (N > norm2_min) & (N <= norm2_max)
        A, B = A[mask], B[mask]
        keep = np.gcd(A, B) == 1
        a_parts.append(A[keep])
        b_parts.append(B[keep])

    a = np.concatenate(a_parts)
    b = np.concatenate(b_parts)
    angles = vector_angles(a, b)
    if sector is not None:
        keep = in_arc(angles, sector)
        a, b, angles = a[keep], b[keep], angles[keep]

    order = np.lexsort((angles, a * a + b * b))
    logger.debug(f"Enumerated {len(order)} primitive vectors with {norm2_min} < |v|^2 <= {norm2_max}")
    return a[order], b[order]


def enumerate_primitive_Z2(r_max: float, sector: Optional[KRegion] = None) -> Iterator[PrimitiveVectorZ]:
    a, b = primitive_z2_arrays(norm2_bound(r_max), sector=sector)
    for ai, bi in zip(a.tolist(), b.tolist()):
        yield PrimitiveVectorZ(a=ai, b=bi)


def shortest_solution_arrays(a: np.ndarray, b: np.ndarray) -> Dict[str, np.ndarray]:
    """Vectorised shortest solutions of b*x - a*y = 1 for primitive (a, b).

    Returns integer arrays x, y, ip = <w, v>, r2 = |v|^2 and w2 = |w|^2 with
    ip / r2 reduced into [-1/2, 1/2).
    """
    a = np.asarray(a)
    b = np.asarray(b)

    # extended Euclid on (b, a): b*s + a*t = +-1
    old_r, r = b.copy(), a.copy()
    old_s, s = np.ones_like(a), np.zeros_like(a)
    old_t, t = np.zeros_like(a), np.ones_like(a)
    active = r != 0
    while np.any(active):
        safe_r = np.where(active, r, 1)
        q = np.where(active, old_r // safe_r, 0)
        old_r, r = np.where(active, r, old_r), np.where(active, old_r - q * r, r)
        old_s, s = np.where(active, s, old_s), np.where(active, old_s - q * s, s)
        old_t, t = np.where(active, t, old_t), np.where(active, old_t - q * t, t)
        active = r != 0

    if np.any(np.abs(old_r) != 1):
        bad = int(np.flatnonzero(np.abs(old_r) != 1)[0])
        raise NotPrimitive(f"({a[bad]}, {b[bad]}) is not primitive")

    x = old_s * old_r
    y = -old_t * old_r
    r2 = a * a + b * b
    ip = x * a + y * b
    m = -((2 * ip + r2) // (2 * r2))
    x = x + m * a
    y = y + m * b
    ip = ip + m * r2
    return {"x": x, "y": y, "ip": ip, "r2": r2, "w2": x * x + y * y}


def _sign_of(ip: int) -> SolutionSign:
    return SolutionSign.POSITIVE if ip >= 0 else SolutionSign.NEGATIVE


def sign_tag(ncomp: Fraction) -> SolutionSign:
    """Sign with the n_comp = 0 tie reported separately."""
    if ncomp == 0:
        return SolutionSign.BOUNDARY
    return _sign_of(ncomp.numerator)


def shortest_solution_Z(v: PrimitiveVectorZ) -> ShortestSolutionZ:
    a, b = v.a, v.b
    g, s, t = egcd(b, a)
    if g != 1:
        raise NotPrimitive(f"({a}, {b}) is not primitive")

    x, y = s, -t
    r2 = v.norm2
    ip = x * a + y * b
    m = -((2 * ip + r2) // (2 * r2))
    x, y = x + m * a, y + m * b
    ip += m * r2

    return ShortestSolutionZ(
        v=v,
        w=(x, y),
        n_comp=Fraction(ip, r2),
        ratio=math.sqrt((x * x + y * y) / r2),
        theta_v=math.atan2(1.0, ip),
        sign=_sign_of(ip),
    )


def gamma_of(sol: ShortestSolutionZ) -> GroupElement:
    x, y = sol.w
    return GroupElement(spec=GroupSpec.sl2r(), entries=np.array([[x, y], [sol.v.a, sol.v.b]], dtype=complex))


def scan_z(r_max: float, sector: Optional[KRegion] = None, r_min: float = 0.0) -> pd.DataFrame:
    """Shortest-solution table for every primitive vector with r_min < |v| <= r_max."""
    norm2_min = norm2_bound(r_min) if r_min > 0 else 0
    a, b = primitive_z2_arrays(norm2_bound(r_max), norm2_min, sector)
    sol = shortest_solution_arrays(a, b)

    ip, r2 = sol["ip"], sol["r2"]
    g = np.gcd(ip, r2)
    frame = pd.DataFrame({
        "a": a,
        "b": b,
        "x": sol["x"],
        "y": sol["y"],
        "ncomp_num": ip // g,
        "ncomp_den": r2 // g,
        "ratio": np.sqrt(sol["w2"].astype(float) / r2.astype(float)),
        "theta_v": np.arctan2(1.0, ip.astype(float)),
        "sign": np.where(ip >= 0, SolutionSign.POSITIVE.value, SolutionSign.NEGATIVE.value),
        "angle_v": vector_angles(a, b),
        "norm_v": np.sqrt(r2.astype(float)),
    }, columns=Z_SCAN_COLUMNS)
    logger.info(f"gcd scan over Z^2: {len(frame)} primitive vectors up to radius {r_max}")
    return frame
