import logging
import math
from typing import List, Optional, Sequence

import numpy as np
from scipy.stats import special_ortho_group

from ..core.config import settings
from ..core.exceptions import (
    DecompositionFailure,
    DegenerateDecomposition,
    DimensionMismatch,
    InvalidInterval,
    InvariantViolation,
)
from ..core.models import GroupElement, GroupFamily, GroupSpec, IwasawaCoords, KElement

logger = logging.getLogger(__name__)


def minkowski_form(n: int) -> np.ndarray:
    return np.diag([1.0] + [-1.0] * n)


def make_element(spec: GroupSpec, entries, check: bool = True) -> GroupElement:
    g = GroupElement(spec=spec, entries=np.asarray(entries))
    if check:
        validate_element(g)
    return g


def validate_element(g: GroupElement, tol: Optional[float] = None) -> None:
    """Raise InvariantViolation unless g lies in its group up to tol."""
    tol = settings.tolerance if tol is None else tol
    m = g.entries
    if g.spec.family == GroupFamily.SO1N:
        J = minkowski_form(g.spec.n)
        residual = float(np.max(np.abs(m.T @ J @ m - J)))
        if residual > tol * max(1.0, float(np.max(np.abs(m))) ** 2):
            raise InvariantViolation(f"g^T J g != J (residual {residual:.3e})")
        if m[0, 0] <= 0:
            raise InvariantViolation("g[0,0] must be positive on SO0(1,n)")
        return
    det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
    if abs(det - 1) > tol:
        raise InvariantViolation(f"det(g) = {det} is not 1")
    if g.spec.family == GroupFamily.SL2R and float(np.max(np.abs(m.imag))) > tol:
        raise InvariantViolation("SL(2,R) element has complex entries")


def inverse(g: GroupElement) -> GroupElement:
    m = g.entries
    if g.spec.family == GroupFamily.SO1N:
        J = minkowski_form(g.spec.n)
        return GroupElement(spec=g.spec, entries=J @ m.T @ J)
    inv = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]])
    return GroupElement(spec=g.spec, entries=inv)


def multiply(*elements: GroupElement) -> GroupElement:
    spec = elements[0].spec
    product = elements[0].entries
    for g in elements[1:]:
        if g.spec != spec:
            raise DimensionMismatch("cannot multiply elements of different groups")
        product = product @ g.entries
    return GroupElement(spec=spec, entries=product)


# Generators

def n_matrix(spec: GroupSpec, v: Sequence[float]) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (spec.p,):
        raise DimensionMismatch(f"N-part must have length {spec.p}, got {v.shape}")
    if spec.family == GroupFamily.SL2R:
        return np.array([[1.0, v[0]], [0.0, 1.0]], dtype=complex)
    if spec.family == GroupFamily.SL2C:
        return np.array([[1.0, complex(v[0], v[1])], [0.0, 1.0]], dtype=complex)

    n = spec.n
    half = 0.5 * float(v @ v)
    m = np.eye(n + 1)
    m[0, 0] = 1.0 + half
    m[0, n] = -half
    m[n, 0] = half
    m[n, n] = 1.0 - half
    m[1:n, 0] = v
    m[1:n, n] = -v
    m[0, 1:n] = v
    m[n, 1:n] = v
    return m


def a_matrix(spec: GroupSpec, t: float) -> np.ndarray:
    if spec.family != GroupFamily.SO1N:
        return np.diag([math.exp(t / 2), math.exp(-t / 2)]).astype(complex)
    n = spec.n
    m = np.eye(n + 1)
    m[0, 0] = m[n, n] = math.cosh(t)
    m[0, n] = m[n, 0] = math.sinh(t)
    return m


def k_matrix(spec: GroupSpec, k: KElement) -> np.ndarray:
    if spec.family == GroupFamily.SL2R:
        if k.angle is None:
            raise DimensionMismatch("SL(2,R) K-part is an angle")
        c, s = math.cos(k.angle), math.sin(k.angle)
        return np.array([[c, -s], [s, c]], dtype=complex)
    if k.matrix is None:
        raise DimensionMismatch(f"{spec.family.value} K-part is a matrix")
    if spec.family == GroupFamily.SL2C:
        if k.matrix.shape != (2, 2):
            raise DimensionMismatch("SU(2) K-part must be 2x2")
        return np.array(k.matrix, dtype=complex)
    if k.matrix.shape != (spec.n, spec.n):
        raise DimensionMismatch(f"SO({spec.n}) K-part must be {spec.n}x{spec.n}")
    m = np.eye(spec.n + 1)
    m[1:, 1:] = k.matrix
    return m


def compose(coords: IwasawaCoords, spec: GroupSpec) -> GroupElement:
    if len(coords.z) != spec.q:
        raise DimensionMismatch(f"z-part must have length {spec.q}")
    product = n_matrix(spec, coords.v) @ a_matrix(spec, coords.t) @ k_matrix(spec, coords.k)
    return GroupElement(spec=spec, entries=product)


def decompose(g: GroupElement, check: bool = True) -> IwasawaCoords:
    spec = g.spec
    m = g.entries

    if spec.family == GroupFamily.SO1N:
        coords = _decompose_so1n(spec, m)
    else:
        coords = _decompose_sl2(spec, m)

    if check:
        residual = reconstruction_residual(g, coords)
        scale = max(1.0, float(np.max(np.abs(m))))
        if residual > 1e3 * settings.tolerance * scale:
            raise DecompositionFailure(f"compose(decompose(g)) differs from g by {residual:.3e}")
    return coords


def _decompose_sl2(spec: GroupSpec, m: np.ndarray) -> IwasawaCoords:
    p, q = m[0]
    a, b = m[1]
    r2 = float(abs(a) ** 2 + abs(b) ** 2)
    if r2 == 0.0:
        raise DegenerateDecomposition("bottom row is zero")
    r = math.sqrt(r2)
    t = -math.log(r2)
    x = (p * np.conj(a) + q * np.conj(b)) / r2

    if spec.family == GroupFamily.SL2R:
        return IwasawaCoords(v=(float(x.real),), t=t, k=KElement(angle=math.atan2(a.real, b.real)))

    k = np.array([[np.conj(b), -np.conj(a)], [a, b]]) / r
    return IwasawaCoords(v=(float(x.real), float(x.imag)), t=t, k=KElement(matrix=k))


def _decompose_so1n(spec: GroupSpec, m: np.ndarray) -> IwasawaCoords:
    n = spec.n
    head, tail = float(m[0, 0]), float(m[n, 0])
    column = m[1:n, 0]
    # (head - tail)(head + tail) = 1 + |column|^2; use the factor without cancellation
    if tail <= 0.0:
        D = head - tail
    elif head + tail > 0.0:
        D = (1.0 + float(column @ column)) / (head + tail)
    else:
        D = head - tail
    if D <= 0.0:
        raise DegenerateDecomposition(f"g[0,0] - g[n,0] = {D} is not positive")
    t = -math.log(D)
    v = column / D
    return IwasawaCoords(v=tuple(float(x) for x in v), t=t, k=KElement(matrix=_so1n_k_block(m, v, D)))


def _so1n_k_block(m: np.ndarray, v: np.ndarray, D: float) -> np.ndarray:
    """SO(n) block of k = (n_v a_t)^{-1} g, read off rows of g that do not cancel.

    (e_0 - e_n)^T n_v a_t = D (e_0 - e_n)^T, so p = g[0] - g[n] equals
    D (e_0 - k[n]), and the middle rows satisfy g[i] = k[i] + v_i p.
    """
    n = m.shape[0] - 1
    p = m[0, 1:] - m[n, 1:]
    middle = m[1:n, 1:] - np.outer(v, p)
    # nearest rows with orthonormal directions
    U, _, Vt = np.linalg.svd(middle, full_matrices=False)
    middle = U @ Vt

    # the last row spans the orthogonal complement of the middle rows
    last = -p / D
    last = last - middle.T @ (middle @ last)
    last /= np.linalg.norm(last)
    return np.vstack([middle, last])


def reconstruction_residual(g: GroupElement, coords: IwasawaCoords) -> float:
    return float(np.max(np.abs(compose(coords, g.spec).entries - g.entries)))


def k_first_column_residual(g: GroupElement) -> float:
    """Distance of the K-part's first column from e0 for an SO0(1,n) element."""
    coords = _decompose_so1n(g.spec, g.entries)
    k = a_matrix(g.spec, -coords.t) @ n_matrix(g.spec, -np.asarray(coords.v)) @ g.entries
    e0 = np.zeros(g.spec.n + 1)
    e0[0] = 1.0
    return float(np.max(np.abs(k[:, 0] - e0)))


def kan_coords(g: GroupElement) -> IwasawaCoords:
    return decompose(inverse(g))


def haar_volume(spec: GroupSpec, mu_N_psi: float, mu_K_phi: float, T: float, S: float = 0.0) -> float:
    if S < 0 or S > T:
        raise InvalidInterval(f"need 0 <= S <= T, got S={S}, T={T}")
    if mu_N_psi <= 0 or mu_K_phi <= 0:
        raise InvalidInterval("domain measures must be positive")
    two_rho = spec.two_rho
    return mu_N_psi * mu_K_phi * math.exp(two_rho * S) * math.expm1(two_rho * (T - S)) / two_rho


# Lie algebra

def lie_basis(spec: GroupSpec) -> List[np.ndarray]:
    """Basis of Lie(G), orthonormal for <X, Y> = Re tr(X^* Y)."""
    if spec.family in (GroupFamily.SL2R, GroupFamily.SL2C):
        H = np.array([[1, 0], [0, -1]], dtype=complex) / math.sqrt(2)
        E = np.array([[0, 1], [0, 0]], dtype=complex)
        F = np.array([[0, 0], [1, 0]], dtype=complex)
        basis = [H, E, F]
        if spec.family == GroupFamily.SL2C:
            basis += [1j * X for X in basis]
        return basis

    n = spec.n
    basis = []
    for j in range(1, n + 1):
        X = np.zeros((n + 1, n + 1))
        X[0, j] = X[j, 0] = 1 / math.sqrt(2)
        basis.append(X)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            X = np.zeros((n + 1, n + 1))
            X[i, j] = 1 / math.sqrt(2)
            X[j, i] = -1 / math.sqrt(2)
            basis.append(X)
    return basis


def lie_coordinates(spec: GroupSpec, X: np.ndarray) -> np.ndarray:
    return np.array([np.real(np.vdot(B, X)) for B in lie_basis(spec)])


def ad_matrix(g: GroupElement) -> np.ndarray:
    """Matrix of X -> g^{-1} X g in the orthonormal basis of lie_basis."""
    basis = lie_basis(g.spec)
    m = g.entries
    m_inv = inverse(g).entries
    columns = [lie_coordinates(g.spec, m_inv @ B @ m) for B in basis]
    return np.stack(columns, axis=1)


def ad_operator_norm(g: GroupElement) -> float:
    return float(np.linalg.norm(ad_matrix(g), 2))


def random_k(spec: GroupSpec, rng: np.random.Generator) -> KElement:
    if spec.family == GroupFamily.SL2R:
        return KElement(angle=rng.uniform(0.0, 2 * math.pi))
    if spec.family == GroupFamily.SL2C:
        q = rng.standard_normal(4)
        q /= np.linalg.norm(q)
        alpha, beta = complex(q[0], q[1]), complex(q[2], q[3])
        return KElement(matrix=np.array([[alpha, -np.conj(beta)], [beta, np.conj(alpha)]]))
    if spec.n == 1:
        return KElement(matrix=np.eye(1))
    return KElement(matrix=special_ortho_group.rvs(spec.n, random_state=rng))


def random_coords(spec: GroupSpec, rng: np.random.Generator, v_max: float = 5.0, t_max: float = 5.0) -> IwasawaCoords:
    direction = rng.standard_normal(spec.p)
    direction /= np.linalg.norm(direction)
    v = direction * rng.uniform(0.0, v_max)
    return IwasawaCoords(v=tuple(float(x) for x in v), t=float(rng.uniform(-t_max, t_max)), k=random_k(spec, rng))


def random_element(spec: GroupSpec, rng: np.random.Generator, v_max: float = 5.0, t_max: float = 5.0) -> GroupElement:
    return compose(random_coords(spec, rng, v_max, t_max), spec)
