"""Arithmetic in the Euclidean rings of imaginary quadratic integers O_d.

Elements are pairs (u, w) meaning u + w*omega. The pair helpers below work
unchanged on Python ints and on numpy integer arrays, so the scalar API and
the vectorised enumeration share one exact implementation.
"""
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
    AlgebraicInt,
    ImagQuadRing,
    KRegion,
    KRegionKind,
    ShortestSolutionOd,
)
from .gcd_lab import norm2_bound

logger = logging.getLogger(__name__)

Pair = Tuple

PAIR_CHUNK = 1 << 20

OD_SCAN_COLUMNS = [
    "alpha_u", "alpha_w", "beta_u", "beta_w",
    "xi_u", "xi_w", "eta_u", "eta_w",
    "ncomp_x_num", "ncomp_x_den", "ncomp_y_num", "ncomp_y_den",
    "ratio", "norm_v", "cap_angle",
]


def mul(ring: ImagQuadRing, x: Pair, y: Pair) -> Pair:
    u1, w1 = x
    u2, w2 = y
    ww = w1 * w2
    return (u1 * u2 + ring.c0 * ww, u1 * w2 + u2 * w1 + ring.c1 * ww)


def conj(ring: ImagQuadRing, x: Pair) -> Pair:
    u, w = x
    return (u + ring.c1 * w, -w)


def norm(ring: ImagQuadRing, x: Pair):
    u, w = x
    return u * u + ring.c1 * u * w - ring.c0 * w * w


def sub(x: Pair, y: Pair) -> Pair:
    return (x[0] - y[0], x[1] - y[1])


def round_quotient(ring: ImagQuadRing, num: Pair, den: Pair) -> Pair:
    """Nearest lattice point to num/den; the remainder has norm below norm(den)."""
    U, W = mul(ring, num, conj(ring, den))
    N = norm(ring, den)
    qw = (2 * W + N) // (2 * N)
    if ring.c1 == 0:
        qu = (2 * U + N) // (2 * N)
    else:
        rt = W - qw * N
        qu = (2 * U + rt + N) // (2 * N)
    return (qu, qw)


def reduce_into_box(ring: ImagQuadRing, ip: Pair, r2) -> Pair:
    """The m in O_d putting (ip + m*r2)/r2 into the half-open brick P_d."""
    ip_u, ip_w = ip
    m_w = -((2 * ip_w + r2) // (2 * r2))
    tw = ip_w + m_w * r2
    m_u = -((2 * ip_u + ring.c1 * tw + r2) // (2 * r2))
    return (m_u, m_w)


def egcd(ring: ImagQuadRing, a: AlgebraicInt, b: AlgebraicInt) -> Tuple[AlgebraicInt, AlgebraicInt, AlgebraicInt]:
    """(g, s, t) with s*a + t*b = g, g a gcd of a and b."""
    old_r, r = (a.u, a.w), (b.u, b.w)
    old_s, s = (1, 0), (0, 0)
    old_t, t = (0, 0), (1, 0)
    while r != (0, 0):
        q = round_quotient(ring, old_r, r)
        old_r, r = r, sub(old_r, mul(ring, q, r))
        old_s, s = s, sub(old_s, mul(ring, q, s))
        old_t, t = t, sub(old_t, mul(ring, q, t))

    def wrap(x: Pair) -> AlgebraicInt:
        return AlgebraicInt(u=x[0], w=x[1], d=ring.d)

    return wrap(old_r), wrap(old_s), wrap(old_t)


def is_unit(x: AlgebraicInt) -> bool:
    return x.norm() == 1


def elements_up_to_norm(ring: ImagQuadRing, norm_max: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All u + w*omega with norm <= norm_max, sorted by (norm, w, u)."""
    w_max = int(math.isqrt(norm_max) / ring.im_omega) + 1
    u_max = math.isqrt(norm_max) + w_max + 1
    U, W = np.meshgrid(
        np.arange(-u_max, u_max + 1, dtype=np.int64),
        np.arange(-w_max, w_max + 1, dtype=np.int64),
        indexing="ij",
    )
    U, W = U.ravel(), W.ravel()
    N = norm(ring, (U, W))
    keep = N <= norm_max
    U, W, N = U[keep], W[keep], N[keep]
    order = np.lexsort((U, W, N))
    return U[order], W[order], N[order]


def units(ring: ImagQuadRing) -> Iterator[AlgebraicInt]:
    U, W, N = elements_up_to_norm(ring, 1)
    for u, w, n in zip(U.tolist(), W.tolist(), N.tolist()):
        if n == 1:
            yield AlgebraicInt(u=u, w=w, d=ring.d)


def _egcd_arrays(ring: ImagQuadRing, a: Pair, b: Pair) -> Tuple[Pair, Pair, Pair]:
    zero = np.zeros_like(a[0])
    one = np.ones_like(a[0])
    old_r, r = a, b
    old_s, s = (one, zero), (zero, zero)
    old_t, t = (zero, zero), (one, zero)

    def select(mask, x: Pair, y: Pair) -> Pair:
        return (np.where(mask, x[0], y[0]), np.where(mask, x[1], y[1]))

    active = (r[0] != 0) | (r[1] != 0)
    while np.any(active):
        safe_r = select(active, r, (one, zero))
        q = round_quotient(ring, old_r, safe_r)
        q = select(active, q, (zero, zero))
        old_r, r = select(active, r, old_r), select(active, sub(old_r, mul(ring, q, r)), r)
        old_s, s = select(active, s, old_s), select(active, sub(old_s, mul(ring, q, s)), s)
        old_t, t = select(active, t, old_t), select(active, sub(old_t, mul(ring, q, t)), t)
        active = (r[0] != 0) | (r[1] != 0)
    return old_r, old_s, old_t


def primitive_od_arrays(
    ring: ImagQuadRing,
    norm2_max: int,
    norm2_min: int = 0,
    cap: Optional[KRegion] = None
) -> Dict[str, np.ndarray]:
    """Coprime pairs (alpha, beta) with norm2_min < N(alpha) + N(beta) <= norm2_max.

    Returns the pair components together with the Bezout data of the
    Euclidean gcd, already normalised so that s*alpha + t*beta = 1.
    """
    U, W, N = elements_up_to_norm(ring, norm2_max)
    parts = []
    indices = range(0, len(N), max(1, PAIR_CHUNK // max(1, len(N))))
    step = indices.step
    for start in tqdm(indices, desc=f"O_{ring.d} pairs", disable=not settings.progress):
        ia_block = np.arange(start, min(start + step, len(N)))
        counts = np.searchsorted(N, norm2_max - N[ia_block], side="right")
        total = int(counts.sum())
        if total == 0:
            continue
        ia = np.repeat(ia_block, counts)
        offsets = np.repeat(np.cumsum(counts) - counts, counts)
        ib = np.arange(total) - offsets
        r2 = N[ia] + N[ib]
        keep = (r2 > norm2_min) & (r2 > 0)
        ia, ib = ia[keep], ib[keep]
        if len(ia) == 0:
            continue

        alpha = (U[ia], W[ia])
        beta = (U[ib], W[ib])
        g, s, t = _egcd_arrays(ring, alpha, beta)
        unit = norm(ring, g) == 1
        ia, ib = ia[unit], ib[unit]
        g = (g[0][unit], g[1][unit])
        g_inv = conj(ring, g)
        s = mul(ring, (s[0][unit], s[1][unit]), g_inv)
        t = mul(ring, (t[0][unit], t[1][unit]), g_inv)
        parts.append((ia, ib, s, t))

    if not parts:
        empty = np.zeros(0, dtype=np.int64)
        return {key: empty for key in ("alpha_u", "alpha_w", "beta_u", "beta_w", "s_u", "s_w", "t_u", "t_w", "r2")}

    ia = np.concatenate([p[0] for p in parts])
    ib = np.concatenate([p[1] for p in parts])
    s_u = np.concatenate([p[2][0] for p in parts])
    s_w = np.concatenate([p[2][1] for p in parts])
    t_u = np.concatenate([p[3][0] for p in parts])
    t_w = np.concatenate([p[3][1] for p in parts])
    r2 = N[ia] + N[ib]

    if cap is not None and cap.kind != KRegionKind.FULL:
        keep = in_cap(ring, (U[ia], W[ia]), (U[ib], W[ib]), cap)
        ia, ib, s_u, s_w, t_u, t_w, r2 = (x[keep] for x in (ia, ib, s_u, s_w, t_u, t_w, r2))

    order = np.lexsort((ib, ia, r2))
    result = {
        "alpha_u": U[ia], "alpha_w": W[ia], "beta_u": U[ib], "beta_w": W[ib],
        "s_u": s_u, "s_w": s_w, "t_u": t_u, "t_w": t_w, "r2": r2,
    }
    logger.debug(f"O_{ring.d}: {len(order)} coprime pairs with {norm2_min} < |v|^2 <= {norm2_max}")
    return {key: value[order] for key, value in result.items()}


def sphere_points(ring: ImagQuadRing, alpha: Pair, beta: Pair) -> np.ndarray:
    """(alpha, beta)/|v| as points of S^3 in R^4 = (Re a, Im a, Re b, Im b)."""
    omega = ring.omega
    a_re = alpha[0] + alpha[1] * omega.real
    a_im = alpha[1] * omega.imag
    b_re = beta[0] + beta[1] * omega.real
    b_im = beta[1] * omega.imag
    pts = np.stack([a_re, a_im, b_re, b_im], axis=-1).astype(float)
    return pts / np.linalg.norm(pts, axis=-1, keepdims=True)


def in_cap(ring: ImagQuadRing, alpha: Pair, beta: Pair, cap: KRegion) -> np.ndarray:
    if cap.kind == KRegionKind.FULL:
        return np.ones(np.shape(alpha[0]), dtype=bool)
    if cap.kind != KRegionKind.CAP:
        raise ConfigMismatch("arcs apply to integer vectors, O_d pairs take caps")
    cosines = sphere_points(ring, alpha, beta) @ np.asarray(cap.center)
    return np.arccos(np.clip(cosines, -1.0, 1.0)) < cap.radius


def enumerate_primitive_Od(
    ring: ImagQuadRing,
    r_max: float,
    cap: Optional[KRegion] = None
) -> Iterator[Tuple[AlgebraicInt, AlgebraicInt]]:
    arrays = primitive_od_arrays(ring, norm2_bound(r_max), cap=cap)
    for au, aw, bu, bw in zip(
        arrays["alpha_u"].tolist(), arrays["alpha_w"].tolist(),
        arrays["beta_u"].tolist(), arrays["beta_w"].tolist()
    ):
        yield AlgebraicInt(u=au, w=aw, d=ring.d), AlgebraicInt(u=bu, w=bw, d=ring.d)


def shortest_solution_Od(ring: ImagQuadRing, v: Tuple[AlgebraicInt, AlgebraicInt]) -> ShortestSolutionOd:
    alpha, beta = v
    if alpha.is_zero() and beta.is_zero():
        raise NotPrimitive("the zero pair is not primitive")
    g, s, t = egcd(ring, alpha, beta)
    if not is_unit(g):
        raise NotPrimitive(f"({alpha.to_complex()}, {beta.to_complex()}) has non-unit gcd")

    g_inv = g.conj()
    xi, eta = t * g_inv, -(s * g_inv)
    r2 = alpha.norm() + beta.norm()
    ip = xi * alpha.conj() + eta * beta.conj()

    m_u, m_w = reduce_into_box(ring, (ip.u, ip.w), r2)
    m = AlgebraicInt(u=m_u, w=m_w, d=ring.d)
    xi, eta = xi + m * alpha, eta + m * beta
    ip = ip + m * r2

    w2 = xi.norm() + eta.norm()
    scale = math.sqrt(w2 * r2)
    ip_c = ip.to_complex()
    return ShortestSolutionOd(
        ring=ring,
        v=(alpha, beta),
        w=(xi, eta),
        n_omega=(Fraction(ip.u, r2), Fraction(ip.w, r2)),
        ratio=math.sqrt(w2 / r2),
        s_v=complex(1.0 / scale),
        c_v=ip_c / scale,
    )


def scan_od(ring: ImagQuadRing, r_max: float, cap: Optional[KRegion] = None, r_min: float = 0.0) -> pd.DataFrame:
    """Shortest-solution table for coprime pairs with r_min < |v| <= r_max."""
    norm2_min = norm2_bound(r_min) if r_min > 0 else 0
    arr = primitive_od_arrays(ring, norm2_bound(r_max), norm2_min, cap)
    alpha = (arr["alpha_u"], arr["alpha_w"])
    beta = (arr["beta_u"], arr["beta_w"])
    r2 = arr["r2"]

    xi = arr["t_u"], arr["t_w"]
    eta = -arr["s_u"], -arr["s_w"]
    ip = tuple(
        x + y for x, y in zip(mul(ring, xi, conj(ring, alpha)), mul(ring, eta, conj(ring, beta)))
    )
    m = reduce_into_box(ring, ip, r2)
    xi = tuple(x + y for x, y in zip(xi, mul(ring, m, alpha)))
    eta = tuple(x + y for x, y in zip(eta, mul(ring, m, beta)))
    ip = (ip[0] + m[0] * r2, ip[1] + m[1] * r2)
    w2 = norm(ring, xi) + norm(ring, eta)

    x_num = 2 * ip[0] + ring.c1 * ip[1]
    x_den = 2 * r2
    gx = np.gcd(x_num, x_den)
    gy = np.gcd(ip[1], r2)
    points = sphere_points(ring, alpha, beta) if len(r2) else np.zeros((0, 4))

    frame = pd.DataFrame({
        "alpha_u": alpha[0], "alpha_w": alpha[1], "beta_u": beta[0], "beta_w": beta[1],
        "xi_u": xi[0], "xi_w": xi[1], "eta_u": eta[0], "eta_w": eta[1],
        "ncomp_x_num": x_num // gx, "ncomp_x_den": x_den // gx,
        "ncomp_y_num": ip[1] // gy, "ncomp_y_den": r2 // gy,
        "ratio": np.sqrt(w2.astype(float) / r2.astype(float)),
        "norm_v": np.sqrt(r2.astype(float)),
        "cap_angle": np.arccos(np.clip(points[:, 2], -1.0, 1.0)),
    }, columns=OD_SCAN_COLUMNS)
    logger.info(f"gcd scan over O_{ring.d}: {len(frame)} coprime pairs up to radius {r_max}")
    return frame


def nu_d_cdf(ring: ImagQuadRing, r: float) -> float:
    """Share of the brick P_d lying in the closed disk of radius r."""
    if r <= 0.0:
        return 0.0
    if r >= ring.rho_d:
        return 1.0
    a, h = 0.5, ring.half_height

    def segment(x: float) -> float:
        return 0.5 * (x * math.sqrt(max(r * r - x * x, 0.0)) + r * r * math.asin(min(x / r, 1.0)))

    x0 = math.sqrt(max(r * r - h * h, 0.0))
    xa = min(a, r)
    if x0 >= xa:
        area = h * xa
    else:
        area = h * x0 + segment(xa) - segment(x0)
    return min(1.0, area / (a * h))


def nu_d_cdf_array(ring: ImagQuadRing, r: np.ndarray) -> np.ndarray:
    return np.vectorize(lambda x: nu_d_cdf(ring, float(x)), otypes=[float])(r)
