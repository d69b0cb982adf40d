import logging
import math
from fractions import Fraction

import numpy as np
import pytest

from src.core.exceptions import ConfigMismatch, InvalidInterval
from src.core.models import DomainSpec, ImagQuadRing, KRegion, LatticeConfig
from src.services.counting import (
    LatticeCounter,
    count_difference,
    count_sl2od,
    count_sl2z,
    count_translates,
    error_exponent,
    horosphere_lift_count,
    k_measure,
    norm2_window,
)
from src.services.quadratic_ring import primitive_od_arrays

HALF = Fraction(1, 2)


def brute_force_count(norm2_max: int) -> int:
    r = math.isqrt(norm2_max)
    return sum(
        1
        for a in range(-r, r + 1)
        for b in range(-r, r + 1)
        if 0 < a * a + b * b <= norm2_max and math.gcd(a, b) == 1
    )


def z_domain(T: float, S: float = 0.0, psi=((-HALF, HALF),), phi=None) -> DomainSpec:
    return DomainSpec(psi=psi, phi=phi or KRegion.full(), T=T, S=S)


class TestHelpers:

    def test_error_exponent(self):
        assert error_exponent(1, 3) == pytest.approx(7 / 8)

    def test_error_exponent_bad_input(self):
        with pytest.raises(InvalidInterval):
            error_exponent(0, 3)

    def test_norm2_window(self):
        assert norm2_window(0.0, 0.0) == (0, 1)
        assert norm2_window(2 * math.log(10), 0.0) == (0, 100)
        assert norm2_window(2 * math.log(10), math.log(10)) == (10, 100)

    def test_count_translates(self):
        num, den = np.array([1, -1]), np.array([3, 2])
        assert count_translates(num, den, -HALF, HALF).tolist() == [1, 1]
        assert count_translates(num, den, -HALF, Fraction(3, 2)).tolist() == [2, 2]

    def test_count_translates_large_values(self):
        num = np.array([10 ** 17 + 1], dtype=np.int64)
        den = np.array([3 * 10 ** 17], dtype=np.int64)
        assert list(count_translates(num, den, -HALF, HALF)) == [1]

    def test_full_cap_measure(self):
        config = LatticeConfig.sl2od(1)
        assert k_measure(KRegion.cap((1, 0, 0, 0), math.pi), config) == pytest.approx(config.muK_total)


class TestCountSL2Z:

    @pytest.fixture
    def config(self):
        return LatticeConfig.sl2z()

    def test_unit_vectors_at_zero(self, config):
        assert count_sl2z(z_domain(0.0), config).observed == 4

    @pytest.mark.parametrize("R", [10, 50, 200])
    def test_oracle(self, config, R):
        report = count_sl2z(z_domain(2 * math.log(R)), config)
        assert report.observed == brute_force_count(R * R)

    def test_wider_psi_doubles(self, config):
        single = count_sl2z(z_domain(2 * math.log(30)), config).observed
        double = count_sl2z(z_domain(2 * math.log(30), psi=((-1, 1),)), config).observed
        assert double == 2 * single

    def test_workers_do_not_change_counts(self, config):
        domain = z_domain(2 * math.log(80))
        assert count_sl2z(domain, config, workers=4).observed == count_sl2z(domain, config, workers=1).observed

    def test_difference_additivity(self, config):
        T = 2 * math.log(100)
        S = T / 2
        annulus = count_difference(z_domain(T, S), config).observed
        outer = count_difference(z_domain(T), config).observed
        inner = count_difference(z_domain(S), config).observed
        assert annulus == outer - inner

    def test_quadrant_additivity(self, config):
        T = 2 * math.log(60)
        quarters = [KRegion.arc(0.1 + k * math.pi / 2, 0.1 + (k + 1) * math.pi / 2) for k in range(4)]
        total = sum(count_sl2z(z_domain(T, phi=arc), config).observed for arc in quarters)
        assert total == count_sl2z(z_domain(T), config).observed

    def test_main_term(self, config):
        report = count_sl2z(z_domain(2 * math.log(200)), config)
        assert report.main_term == pytest.approx(6 * (200 ** 2 - 1) / math.pi)
        assert abs(report.relative_dev) < 0.05
        assert report.error_bound > 0
        assert report.error_bound_shape == "shape-only"

    def test_degenerate_domain(self, config):
        T = 2 * math.log(10)
        report = count_sl2z(z_domain(T, T), config)
        assert report.observed == 0
        assert report.degenerate
        assert report.relative_dev is None

    def test_cap_rejected(self, config):
        domain = z_domain(1.0, phi=KRegion.cap((1, 0, 0, 0), 1.0))
        with pytest.raises(ConfigMismatch):
            count_sl2z(domain, config)

    def test_wrong_lattice(self):
        with pytest.raises(ConfigMismatch):
            count_sl2z(z_domain(1.0), LatticeConfig.sl2od(1))

    def test_sweep(self, config):
        domains = [z_domain(2 * math.log(R)) for R in (5, 10, 20)]
        with LatticeCounter(config) as counter:
            reports = counter.sweep(domains)
        assert [r.observed for r in reports] == [brute_force_count(R * R) for R in (5, 10, 20)]

    @pytest.mark.slow
    def test_main_term_at_radius_2000(self, config):
        report = count_sl2z(z_domain(2 * math.log(2000)), config, workers=4)
        assert 0.97 <= report.observed / report.main_term <= 1.03

    @pytest.mark.slow
    def test_sector_main_term(self, config):
        report = count_sl2z(z_domain(2 * math.log(2000), phi=KRegion.arc(0.0, math.pi / 2)), config, workers=4)
        assert 0.95 <= report.observed / report.main_term <= 1.05

    @pytest.mark.slow
    def test_annulus_main_term(self, config):
        T = 2 * math.log(1000)
        report = count_difference(z_domain(T, T / 2), config, workers=4)
        assert abs(report.relative_dev) < 0.05


class TestHorosphere:

    def test_matches_rectangle_count(self):
        config = LatticeConfig.sl2z()
        T = 2 * math.log(100)
        lift = horosphere_lift_count(T, 0.0, config)
        box = count_sl2z(z_domain(T), config)

        assert lift.observed == box.observed
        assert lift.main_term == pytest.approx(2 * math.pi * math.exp(T) / config.covolume)

    def test_negative_T(self):
        with pytest.raises(InvalidInterval):
            horosphere_lift_count(-1.0, 0.0, LatticeConfig.sl2z())


class TestCountSL2Od:

    @pytest.mark.parametrize("d", [1, 3])
    def test_unit_box_counts_each_pair_once(self, d):
        ring = ImagQuadRing(d=d)
        domain = DomainSpec(psi=((-HALF, HALF), (-HALF, HALF)), T=math.log(16))
        report = count_sl2od(ring, domain, LatticeConfig.sl2od(d))
        assert report.observed == len(primitive_od_arrays(ring, 16)["r2"])

    def test_density_mode(self, caplog):
        ring = ImagQuadRing(d=1)
        domain = DomainSpec(psi=((-HALF, HALF), (-HALF, HALF)), T=math.log(9))
        with caplog.at_level(logging.WARNING):
            report = count_sl2od(ring, domain, LatticeConfig.sl2od(1))

        assert report.main_term is None
        assert report.density == pytest.approx(report.observed / 81)
        assert "density" in caplog.text

    def test_half_box(self):
        ring = ImagQuadRing(d=1)
        config = LatticeConfig.sl2od(1)
        T = math.log(25)
        lower = DomainSpec(psi=((-HALF, HALF), (-HALF, 0)), T=T)
        upper = DomainSpec(psi=((-HALF, HALF), (0, HALF)), T=T)
        full = DomainSpec(psi=((-HALF, HALF), (-HALF, HALF)), T=T)
        parts = count_sl2od(ring, lower, config).observed + count_sl2od(ring, upper, config).observed
        assert parts == count_sl2od(ring, full, config).observed

    def test_one_dimensional_psi_rejected(self):
        with pytest.raises(ConfigMismatch):
            count_sl2od(ImagQuadRing(d=1), z_domain(1.0), LatticeConfig.sl2od(1))

    def test_ring_mismatch(self):
        domain = DomainSpec(psi=((-HALF, HALF), (-HALF, HALF)), T=1.0)
        with pytest.raises(ConfigMismatch):
            count_sl2od(ImagQuadRing(d=3), domain, LatticeConfig.sl2od(1))
