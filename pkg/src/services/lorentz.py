import itertools
import logging
import math
from fractions import Fraction
from typing import Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from ..core.config import settings
from ..core.exceptions import DimensionMismatch, HeightUndefined, UnsupportedDimension
from ..core.models import LorentzSolution, ParityLattice

logger = logging.getLogger(__name__)

SUPPORTED_N = (2, 3, 4)


def _check_n(n: int) -> None:
    if n not in SUPPORTED_N:
        raise UnsupportedDimension(f"Lorentz enumeration supports n in {SUPPORTED_N}, got {n}")


def _isqrt_array(s: np.ndarray) -> np.ndarray:
    r = np.floor(np.sqrt(s.astype(float))).astype(np.int64)
    r = np.where((r + 1) * (r + 1) <= s, r + 1, r)
    r = np.where(r * r > s, r - 1, r)
    return r


def _sums_of_squares(target: int, k: int) -> np.ndarray:
    """All integer (x_1..x_k) with sum x_i^2 = target, lexicographically sorted.

    Leading coordinates are fixed one at a time, each bounded by the norm
    still left, and only the last pair is solved with array operations.
    """
    bound = math.isqrt(target)
    if k == 1:
        if bound * bound != target:
            return np.zeros((0, 1), dtype=np.int64)
        if bound == 0:
            return np.zeros((1, 1), dtype=np.int64)
        return np.array([[-bound], [bound]], dtype=np.int64)

    if k > 2:
        blocks = []
        for x in range(-bound, bound + 1):
            tail = _sums_of_squares(target - x * x, k - 1)
            if len(tail):
                blocks.append(np.column_stack([np.full(len(tail), x, dtype=np.int64), tail]))
        if not blocks:
            return np.zeros((0, k), dtype=np.int64)
        return np.concatenate(blocks)

    head = np.arange(-bound, bound + 1, dtype=np.int64)[:, None]
    rest = target - head[:, 0] * head[:, 0]
    root = _isqrt_array(rest)
    square = root * root == rest
    head, root = head[square], root[square]

    zero = root == 0
    rows = [
        np.column_stack([head[zero], root[zero]]),
        np.column_stack([head[~zero], -root[~zero]]),
        np.column_stack([head[~zero], root[~zero]]),
    ]
    solutions = np.concatenate(rows)
    order = np.lexsort(solutions.T[::-1])
    return solutions[order]


def lorentz_arrays(n: int, x0_max: int) -> np.ndarray:
    """Integer rows (x0, ..., xn) on the upper sheet with 1 <= x0 <= x0_max."""
    _check_n(n)
    if x0_max < 1:
        raise UnsupportedDimension("x0_max must be at least 1")

    blocks = []
    for x0 in tqdm(range(1, x0_max + 1), desc="lorentz slices", disable=not settings.progress):
        tail = _sums_of_squares(x0 * x0 - 1, n)
        if len(tail):
            blocks.append(np.column_stack([np.full(len(tail), x0, dtype=np.int64), tail]))
    rows = np.concatenate(blocks)
    logger.info(f"Lorentz n={n}: {len(rows)} solutions with x0 <= {x0_max}")
    return rows


def _solution_from_row(x: Sequence[int]) -> LorentzSolution:
    x = tuple(int(xi) for xi in x)
    denominator = x[0] - x[-1]
    if denominator <= 0:
        return LorentzSolution(x=x)
    v = tuple(Fraction(xi, denominator) for xi in x[1:-1])
    return LorentzSolution(x=x, height=-math.log(denominator), v=v, z_comp=z_component(x))


def enumerate_lorentz(n: int, x0_max: int) -> Iterator[LorentzSolution]:
    for row in lorentz_arrays(n, x0_max).tolist():
        yield _solution_from_row(row)


def z_component(x: Sequence[int]) -> Fraction:
    """Central N-coordinate of a group element with first column x; zero on the form."""
    D = x[0] - x[-1]
    middle = sum(xi * xi for xi in x[1:-1])
    return Fraction(x[0] + x[-1], D) / 2 - Fraction(1 + middle, D * D) / 2


def extract_hv(sol: LorentzSolution) -> Tuple[float, Tuple[Fraction, ...]]:
    D = sol.denominator
    if D <= 0:
        raise HeightUndefined(f"x0 - xn = {D} for {sol.x}")
    return -math.log(D), tuple(Fraction(xi, D) for xi in sol.x[1:-1])


def in_psi0(v: Sequence[Fraction]) -> bool:
    return sum(abs(Fraction(x)) for x in v) <= 1


def reduce_mod_parity(v: Sequence[Fraction], n: int) -> Tuple[Fraction, ...]:
    """Shortest representative of v modulo the even-sum lattice, lexicographically first on ties."""
    v = tuple(Fraction(x) for x in v)
    lattice = ParityLattice(n=n)
    if len(v) != lattice.rank:
        raise DimensionMismatch(f"expected {lattice.rank} coordinates, got {len(v)}")

    ranges = [range(math.floor(x) - 1, math.floor(x) + 3) for x in v]
    best: Optional[Tuple[Fraction, Tuple[Fraction, ...]]] = None
    for lam in itertools.product(*ranges):
        if sum(lam) % 2:
            continue
        residual = tuple(x - li for x, li in zip(v, lam))
        key = (sum(r * r for r in residual), residual)
        if best is None or key < best:
            best = key
    return best[1]


def shortest_solutions(solutions: Sequence[LorentzSolution]) -> List[LorentzSolution]:
    """Solutions whose own v is already the reduced representative of its coset."""
    kept = []
    for sol in solutions:
        if sol.v is None:
            continue
        if reduce_mod_parity(sol.v, sol.n) == sol.v and in_psi0(sol.v):
            kept.append(sol)
    return kept


def lorentz_frame(n: int, x0_max: int, shortest_only: bool = False) -> pd.DataFrame:
    rows = lorentz_arrays(n, x0_max)
    records = []
    for row in rows.tolist():
        sol = _solution_from_row(row)
        record = {f"x{i}": xi for i, xi in enumerate(sol.x)}
        if sol.v is None:
            record.update({"height": float("nan"), "depth": float("nan")})
            records.append(record)
            continue

        reduced = reduce_mod_parity(sol.v, n)
        if shortest_only and (reduced != sol.v or not in_psi0(sol.v)):
            continue
        record["height"] = sol.height
        record["depth"] = -sol.height
        for i, vi in enumerate(sol.v, start=1):
            record[f"v_{i}_num"] = vi.numerator
            record[f"v_{i}_den"] = vi.denominator
        for i, ri in enumerate(reduced, start=1):
            record[f"reduced_v_{i}_num"] = ri.numerator
            record[f"reduced_v_{i}_den"] = ri.denominator
            record[f"reduced_v_{i}"] = float(ri)
        record["z_comp"] = float(sol.z_comp)
        records.append(record)

    columns = [f"x{i}" for i in range(n + 1)] + ["height", "depth"]
    columns += [f"v_{i}_{part}" for i in range(1, n) for part in ("num", "den")]
    columns += [f"reduced_v_{i}_{part}" for i in range(1, n) for part in ("num", "den")]
    columns += [f"reduced_v_{i}" for i in range(1, n)] + ["z_comp"]
    return pd.DataFrame.from_records(records, columns=columns)
