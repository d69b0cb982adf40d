import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from src.core.exceptions import DimensionMismatch, HeightUndefined, UnsupportedDimension
from src.core.models import GroupSpec, IwasawaCoords, LorentzSolution, ParityLattice, ShellSample
from src.services.equidistribution import ks_statistic, uniform_cdf
from src.services.iwasawa import compose, decompose, random_k
from src.services.lorentz import (
    enumerate_lorentz,
    extract_hv,
    in_psi0,
    lorentz_arrays,
    lorentz_frame,
    reduce_mod_parity,
    shortest_solutions,
    z_component,
)


def brute_force_n2(x0_max: int):
    return {
        (x0, x1, x2)
        for x0 in range(1, x0_max + 1)
        for x1 in range(-x0, x0 + 1)
        for x2 in range(-x0, x0 + 1)
        if x0 * x0 - x1 * x1 - x2 * x2 == 1
    }


class TestEnumeration:

    def test_matches_brute_force(self):
        rows = {tuple(r) for r in lorentz_arrays(2, 50).tolist()}
        assert rows == brute_force_n2(50)

    def test_n3_rows_on_the_form(self):
        rows = lorentz_arrays(3, 30)
        assert all(x0 * x0 - x1 * x1 - x2 * x2 - x3 * x3 == 1 for x0, x1, x2, x3 in rows.tolist())

    def test_base_point_first(self):
        first = next(enumerate_lorentz(2, 3))
        assert first.x == (1, 0, 0)
        assert first.height == 0.0
        assert first.v == (Fraction(0),)

    def test_n3_matches_brute_force(self):
        rows = {tuple(r) for r in lorentz_arrays(3, 15).tolist()}
        expected = {
            (x0,) + tail
            for x0 in range(1, 16)
            for tail in itertools.product(range(-x0, x0 + 1), repeat=3)
            if x0 * x0 - sum(x * x for x in tail) == 1
        }
        assert rows == expected

    def test_n4_matches_brute_force(self):
        rows = {tuple(r) for r in lorentz_arrays(4, 8).tolist()}
        expected = {
            (x0,) + tail
            for x0 in range(1, 9)
            for tail in itertools.product(range(-x0, x0 + 1), repeat=4)
            if x0 * x0 - sum(x * x for x in tail) == 1
        }
        assert rows == expected

    def test_n4_larger_radius(self):
        rows = lorentz_arrays(4, 40)
        x0, tail = rows[:, 0], rows[:, 1:]

        assert np.all(x0 * x0 - np.sum(tail * tail, axis=1) == 1)
        assert len(np.unique(rows, axis=0)) == len(rows)
        assert np.all(np.diff(x0) >= 0)
        assert x0.max() == 40

    @pytest.mark.parametrize("n", [1, 5])
    def test_unsupported_dimension(self, n):
        with pytest.raises(UnsupportedDimension):
            lorentz_arrays(n, 10)


class TestHeights:

    def test_extract(self):
        h, v = extract_hv(LorentzSolution(x=(3, 2, -2)))
        assert h == pytest.approx(-math.log(5))
        assert v == (Fraction(2, 5),)

    def test_height_zero(self):
        h, v = extract_hv(LorentzSolution(x=(3, 2, 2)))
        assert h == 0.0
        assert v == (Fraction(2),)

    def test_height_undefined(self):
        with pytest.raises(HeightUndefined):
            extract_hv(LorentzSolution(x=(1, 0, 1)))

    def test_agrees_with_decompose(self):
        spec = GroupSpec.so1n(3)
        rng = np.random.default_rng(31)
        for sol in itertools.islice(enumerate_lorentz(3, 40), 1000):
            h, v = extract_hv(sol)
            # K fixes e0, so the first column stays x
            coords = IwasawaCoords(v=tuple(float(x) for x in v), t=h, k=random_k(spec, rng))
            g = compose(coords, spec)
            assert np.allclose(g.entries[:, 0], sol.x, rtol=1e-12, atol=1e-9)

            back = decompose(g)
            assert back.t == pytest.approx(h, abs=1e-10)
            assert np.allclose(back.v, coords.v, rtol=1e-10, atol=1e-10)

    def test_z_component_vanishes(self):
        for sol in enumerate_lorentz(3, 20):
            assert z_component(sol.x) == 0


class TestParityReduction:

    def test_lattice_membership(self):
        lattice = ParityLattice(n=3)
        assert lattice.contains((1, 1))
        assert not lattice.contains((1, 0))
        assert not lattice.contains((Fraction(1, 2), Fraction(3, 2)))

    def test_n2_reduction(self):
        assert reduce_mod_parity((Fraction(2, 5),), 2) == (Fraction(2, 5),)
        assert reduce_mod_parity((Fraction(3, 2),), 2) == (Fraction(-1, 2),)

    def test_tie_breaks_lexicographically(self):
        assert reduce_mod_parity((Fraction(1),), 2) == (Fraction(-1),)

    def test_n3_representative_in_l1_ball(self):
        for v in [(Fraction(7, 3), Fraction(-5, 4)), (Fraction(1, 2), Fraction(1, 2)), (Fraction(9), Fraction(2))]:
            reduced = reduce_mod_parity(v, 3)
            assert in_psi0(reduced)
            assert ParityLattice(n=3).contains(tuple(a - b for a, b in zip(v, reduced)))

    def test_n4_cube_corner_outside_l1_ball(self):
        half = Fraction(1, 2)
        reduced = reduce_mod_parity((half, half, half), 4)
        assert reduced == (-half, -half, half)
        assert not in_psi0(reduced)

    @pytest.mark.parametrize("n,count", [(2, 20), (3, 20), (4, 3)])
    def test_shortest_over_lattice_box(self, n, count):
        rng = np.random.default_rng(60 + n)
        rank = n - 1
        grid = np.indices((41,) * rank).reshape(rank, -1).T - 20
        grid = grid[grid.sum(axis=1) % 2 == 0]
        for _ in range(count):
            den = int(rng.integers(1, 7))
            v = tuple(Fraction(int(num), den) for num in rng.integers(-8 * den, 8 * den + 1, rank))
            reduced = reduce_mod_parity(v, n)

            assert ParityLattice(n=n).contains(tuple(a - b for a, b in zip(v, reduced)))
            scaled = np.array([int(x * den) for x in v], dtype=np.int64)
            squares = np.sum((scaled - den * grid) ** 2, axis=1)
            assert sum(r * r for r in reduced) * den * den == int(squares.min())
            ties = grid[squares == squares.min()]
            assert reduced == min(tuple(x - int(li) for x, li in zip(v, lam)) for lam in ties)

    def test_wrong_length(self):
        with pytest.raises(DimensionMismatch):
            reduce_mod_parity((Fraction(1), Fraction(2)), 2)

    def test_shortest_solutions_are_reduced(self):
        kept = shortest_solutions(list(enumerate_lorentz(2, 40)))
        assert kept
        for sol in kept:
            assert in_psi0(sol.v)
            assert reduce_mod_parity(sol.v, 2) == sol.v


class TestFrame:

    def test_columns(self):
        frame = lorentz_frame(2, 20)
        assert list(frame.columns[:5]) == ["x0", "x1", "x2", "height", "depth"]
        assert "reduced_v_1" in frame.columns

    def test_reduced_values_in_psi0(self):
        frame = lorentz_frame(2, 200)
        assert frame["reduced_v_1"].between(-1.0, 1.0).all()
        assert (frame["z_comp"] == 0).all()

    def test_shortest_only_subset(self):
        full = lorentz_frame(2, 60)
        short = lorentz_frame(2, 60, shortest_only=True)
        assert 0 < len(short) < len(full)


def window_ks(frame, lo: float, hi: float) -> float:
    window = frame[(frame["depth"] >= lo) & (frame["depth"] < hi)]
    sample = ShellSample(shell=(lo, hi), values=window["reduced_v_1"].to_numpy())
    return ks_statistic(sample, uniform_cdf(-1.0, 1.0))


class TestHeightWindows:

    def test_deep_window_closer_to_uniform(self):
        frame = lorentz_frame(2, 500)
        assert window_ks(frame, 3.0, 6.0) < window_ks(frame, 0.0, 3.0)

    @pytest.mark.slow
    def test_windows_to_x0_5000(self):
        frame = lorentz_frame(2, 5000)
        ks = [window_ks(frame, lo, hi) for lo, hi in ((0.0, 3.0), (3.0, 6.0), (6.0, 8.0))]

        assert frame["reduced_v_1"].between(-1.0, 1.0).all()
        assert ks[1] < ks[0]
        assert ks[2] < ks[0]
        assert max(ks[1], ks[2]) < 0.1
