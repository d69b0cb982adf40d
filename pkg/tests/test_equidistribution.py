import math

import numpy as np
import pandas as pd
import pytest

from src.core.exceptions import DegenerateFit, EmptySample, ParseError
from src.core.models import ImagQuadRing, KRegion, ShellSample, SolutionSign, TargetLaw
from src.services.equidistribution import (
    ShellAccumulator,
    angular_discrepancy,
    cap_angle_cdf,
    discrepancy_report,
    filter_sign,
    geometric_shells,
    ks_statistic,
    lipschitz_sum,
    parse_shells,
    rate_fit,
    shell_samples,
    star_discrepancy,
    target_cdf,
    uniform_cdf,
    w_direction_angles,
)
from src.services.gcd_lab import scan_z
from src.services.quadratic_ring import nu_d_cdf, scan_od


def quantile_sample(n: int, hi: float = 0.5) -> ShellSample:
    return ShellSample(shell=(0.0, 1.0), values=(np.arange(n) + 0.5) / n * hi)


class TestTargets:

    def test_parse(self):
        law, cdf = target_cdf("uniform:0:0.5")
        assert law == TargetLaw.UNIFORM_INTERVAL
        assert cdf(np.array([0.25]))[0] == pytest.approx(0.5)

    def test_nu(self):
        law, cdf = target_cdf("nu:3")
        assert law == TargetLaw.NU_D
        assert cdf(np.array([0.3]))[0] == pytest.approx(nu_d_cdf(ImagQuadRing(d=3), 0.3))

    @pytest.mark.parametrize("bad", ["foo", "uniform:x", "nu:abc"])
    def test_parse_errors(self, bad):
        with pytest.raises(ParseError):
            target_cdf(bad)

    def test_cap_angle_cdf(self):
        assert cap_angle_cdf(np.array(0.0)) == pytest.approx(0.0)
        assert cap_angle_cdf(np.array(math.pi / 2)) == pytest.approx(0.5)
        assert cap_angle_cdf(np.array(math.pi)) == pytest.approx(1.0)


class TestShells:

    def test_geometric(self):
        assert geometric_shells(10, 100) == [(10, 20), (20, 40), (40, 80), (80, 160)]

    def test_parse(self):
        assert parse_shells("edges:1,2,4", 10) == [(1.0, 2.0), (2.0, 4.0)]
        assert parse_shells("linear:0:2:2", 10) == [(0.0, 1.0), (1.0, 2.0)]
        with pytest.raises(ParseError):
            parse_shells("spiral:3", 10)

    def test_accumulator_merge(self):
        left, right = ShellAccumulator((0, 1)), ShellAccumulator((0, 1))
        left.add(np.array([0.3, 0.1]))
        right.add(np.array([0.2]))
        merged = left.merge(right)

        assert merged.count == 3
        assert (merged.min, merged.max) == (0.1, 0.3)
        assert merged.to_sample().values.tolist() == [0.1, 0.2, 0.3]

    def test_shell_samples_stream(self):
        frames = [
            pd.DataFrame({"norm_v": [1.5, 2.5], "ratio": [0.1, 0.2]}),
            pd.DataFrame({"norm_v": [3.5, 1.2], "ratio": [0.3, 0.4]}),
        ]
        samples = shell_samples(frames, "ratio", "norm_v", [(1, 2), (2, 4)])
        assert [s.count for s in samples] == [2, 2]
        assert samples[0].values.tolist() == [0.1, 0.4]

    def test_sign_filter(self):
        frame = pd.DataFrame({"sign": ["positive", "negative", "positive"], "ncomp_num": [0, -1, 2]})
        assert len(filter_sign(frame, SolutionSign.POSITIVE)) == 2
        assert len(filter_sign(frame, SolutionSign.BOUNDARY)) == 1


class TestStatistics:

    def test_ks_of_quantiles(self):
        n = 1000
        assert ks_statistic(quantile_sample(n), uniform_cdf(0.0, 0.5)) == pytest.approx(1 / (2 * n))

    def test_ks_empty(self):
        with pytest.raises(EmptySample):
            ks_statistic(ShellSample(shell=(0, 1), values=np.zeros(0)), uniform_cdf(0.0, 1.0))

    def test_star_grid_points(self):
        points = (np.arange(1024) + 0.5) / 1024
        assert star_discrepancy(points) == pytest.approx(0.0, abs=1e-12)

    def test_star_clustered(self):
        assert star_discrepancy(np.zeros(10)) == pytest.approx(1 - 1 / 1024)

    def test_star_two_dimensional(self):
        g = (np.arange(32) + 0.5) / 32
        X, Y = np.meshgrid(g, g)
        points = np.column_stack([X.ravel(), Y.ravel()])
        assert star_discrepancy(points, depth=5) == pytest.approx(0.0, abs=1e-12)

    def test_report(self):
        report = discrepancy_report(quantile_sample(100), uniform_cdf(0.0, 0.5), "uniform:0:0.5")
        assert report.count == 100
        assert report.ks == pytest.approx(0.005)

    def test_angular_arc(self):
        angles = ShellSample(shell=(0, 1), values=(np.arange(1024) + 0.5) / 1024 * (math.pi / 2))
        assert angular_discrepancy(angles, KRegion.arc(0.0, math.pi / 2)) == pytest.approx(0.0, abs=1e-9)


class TestLipschitz:

    def test_one_dimensional(self):
        points = (np.arange(10_000) + 0.5) / 10_000 - 0.5
        result = lipschitz_sum(points, lambda x: x ** 2, [(-0.5, 0.5)], lipschitz_constant=1.0)

        assert result.reference_integral == pytest.approx(1 / 12)
        assert result.deviation < 1e-6
        assert result.count == 10_000

    def test_two_dimensional(self):
        g = (np.arange(100) + 0.5) / 100
        X, Y = np.meshgrid(g, g)
        points = np.column_stack([X.ravel(), Y.ravel()])
        result = lipschitz_sum(points, lambda x, y: x + y, [(0, 1), (0, 1)])

        assert result.reference_integral == pytest.approx(1.0)
        assert result.deviation < 1e-9

    def test_empty(self):
        with pytest.raises(EmptySample):
            lipschitz_sum(np.zeros(0), lambda x: x, [(0, 1)])


class TestRateFit:

    def test_power_law(self):
        points = [(R, 2.0 * R ** -0.5) for R in (10, 100, 1000, 10_000)]
        fit = rate_fit(points)
        assert fit.slope == pytest.approx(-0.5)
        assert fit.r2 == pytest.approx(1.0)
        assert fit.points == 4

    def test_synthetic_log_corrected_curve(self):
        points = [(R, R ** -0.25 * math.log(R)) for R in np.geomspace(1e2, 1e4, 9)]
        assert -0.25 < rate_fit(points).slope < 0

    def test_too_few_points(self):
        with pytest.raises(DegenerateFit):
            rate_fit([(10, 0.1), (20, 0.05)])

    def test_non_positive(self):
        with pytest.raises(DegenerateFit):
            rate_fit([(10, 0.1), (20, 0.0), (40, 0.02)])


class TestPipelines:

    @pytest.fixture(scope="class")
    def frame(self):
        return scan_z(200)

    def test_ratio_close_to_uniform(self, frame):
        samples = shell_samples([frame], "ratio", "norm_v", [(100, 200)])
        assert ks_statistic(samples[0], uniform_cdf(0.0, 0.5)) < 0.05

    def test_directions_close_to_uniform(self, frame):
        samples = shell_samples([frame], "angle_v", "norm_v", [(100, 200)])
        assert angular_discrepancy(samples[0]) < 0.05

    def test_w_direction_angles(self, frame):
        gaps = w_direction_angles(frame)
        assert len(gaps) == len(frame)
        assert gaps.between(-math.pi, math.pi).all()

    @pytest.mark.slow
    @pytest.mark.parametrize("sign", [None, SolutionSign.POSITIVE, SolutionSign.NEGATIVE])
    def test_ratio_ks_decreases(self, sign):
        frame = scan_z(2000)
        shells = [(R, 2 * R) for R in (125, 250, 500, 1000)]
        samples = shell_samples([frame], "ratio", "norm_v", shells, sign)
        ks = [ks_statistic(s, uniform_cdf(0.0, 0.5)) for s in samples]

        assert all(a > b for a, b in zip(ks, ks[1:]))
        assert rate_fit([(s[1], k) for s, k in zip(shells, ks)]).slope <= -0.1

    @pytest.mark.slow
    @pytest.mark.parametrize("d", [1, 3])
    def test_nu_d_ks_decreases(self, d):
        ring = ImagQuadRing(d=d)
        frame = scan_od(ring, 32)
        shells = [(4, 8), (8, 16), (16, 32)]
        samples = shell_samples([frame], "ratio", "norm_v", shells)
        _, cdf = target_cdf(f"nu:{d}")
        ks = [ks_statistic(s, cdf) for s in samples]
        assert all(a > b for a, b in zip(ks, ks[1:]))
