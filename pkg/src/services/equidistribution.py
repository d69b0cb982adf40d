import logging
import math
import warnings
from typing import Callable, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import integrate, stats

from ..core.exceptions import ConfigError, DegenerateFit, EmptySample, ParseError, QuadratureFailure
from ..core.models import (
    DiscrepancyReport,
    ImagQuadRing,
    KRegion,
    KRegionKind,
    LipschitzResult,
    RateFit,
    ShellSample,
    SolutionSign,
    TargetLaw,
    TWO_PI,
)
from .quadratic_ring import nu_d_cdf_array

logger = logging.getLogger(__name__)

GRID_DEPTH = 10
QUADRATURE_TOLERANCE = 1e-8

Cdf = Callable[[np.ndarray], np.ndarray]


# Target laws

def uniform_cdf(lo: float, hi: float) -> Cdf:
    return stats.uniform(loc=lo, scale=hi - lo).cdf


def cap_angle_cdf(x: np.ndarray) -> np.ndarray:
    """Distance from a fixed point of a uniform point on S^3."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, math.pi)
    return (x - np.sin(x) * np.cos(x)) / math.pi


def target_cdf(target: str) -> Tuple[TargetLaw, Cdf]:
    """Parse targets like 'uniform:0:0.5', 'nu:3', 'arc:0:1.57', 'cap'."""
    parts = target.lower().split(":")
    name, args = parts[0], parts[1:]
    try:
        if name == TargetLaw.UNIFORM_01_HALF.value:
            return TargetLaw.UNIFORM_01_HALF, uniform_cdf(0.0, 0.5)
        if name == TargetLaw.UNIFORM_INTERVAL.value:
            lo, hi = float(args[0]), float(args[1])
            return TargetLaw.UNIFORM_INTERVAL, uniform_cdf(lo, hi)
        if name == TargetLaw.NU_D.value:
            ring = ImagQuadRing(d=int(args[0]))
            return TargetLaw.NU_D, lambda x: nu_d_cdf_array(ring, x)
        if name == TargetLaw.UNIFORM_ARC.value:
            lo, hi = float(args[0]), float(args[1])
            return TargetLaw.UNIFORM_ARC, uniform_cdf(lo, hi)
        if name == TargetLaw.UNIFORM_CAP_S3.value:
            return TargetLaw.UNIFORM_CAP_S3, cap_angle_cdf
    except (IndexError, ValueError) as e:
        raise ParseError(f"Malformed target {target!r}: {e}") from e
    raise ParseError(f"Unknown target law {target!r}")


# Shells

def geometric_shells(r0: float, r_max: float, factor: float = 2.0) -> List[Tuple[float, float]]:
    shells = []
    lo = r0
    while lo < r_max:
        shells.append((lo, lo * factor))
        lo *= factor
    return shells


def parse_shells(spec: str, r_max: float) -> List[Tuple[float, float]]:
    """'geometric:R0', 'edges:e0,e1,...' or 'linear:lo:hi:count'."""
    kind, _, rest = spec.partition(":")
    try:
        if kind == "geometric":
            return geometric_shells(float(rest), r_max)
        if kind == "edges":
            edges = [float(e) for e in rest.split(",")]
            return list(zip(edges[:-1], edges[1:]))
        if kind == "linear":
            lo, hi, count = rest.split(":")
            edges = np.linspace(float(lo), float(hi), int(count) + 1)
            return list(zip(edges[:-1].tolist(), edges[1:].tolist()))
    except ValueError as e:
        raise ParseError(f"Malformed shell spec {spec!r}: {e}") from e
    raise ParseError(f"Unknown shell scheme {spec!r}")


class ShellAccumulator:
    """Mergeable per-shell buffer: count, min, max and the values themselves."""

    def __init__(self, shell: Tuple[float, float]):
        self.shell = shell
        self.count = 0
        self.min = math.inf
        self.max = -math.inf
        self._chunks: List[np.ndarray] = []

    def add(self, values: np.ndarray) -> None:
        values = np.asarray(values, dtype=float)
        if len(values) == 0:
            return
        self.count += len(values)
        self.min = min(self.min, float(values.min()))
        self.max = max(self.max, float(values.max()))
        self._chunks.append(values)

    def merge(self, other: "ShellAccumulator") -> "ShellAccumulator":
        if other.shell != self.shell:
            raise ConfigError("cannot merge accumulators of different shells")
        merged = ShellAccumulator(self.shell)
        merged.count = self.count + other.count
        merged.min = min(self.min, other.min)
        merged.max = max(self.max, other.max)
        merged._chunks = self._chunks + other._chunks
        return merged

    def to_sample(self) -> ShellSample:
        values = np.sort(np.concatenate(self._chunks)) if self._chunks else np.zeros(0)
        return ShellSample(shell=self.shell, values=values)


def shell_samples(
    frames: Iterable[pd.DataFrame],
    value_column: str,
    shell_column: str,
    shells: Sequence[Tuple[float, float]],
    sign: Optional[SolutionSign] = None
) -> List[ShellSample]:
    """Split value_column into shells (lo, hi] of shell_column, streaming over frames."""
    accumulators = [ShellAccumulator(shell) for shell in shells]
    for frame in frames:
        if sign is not None:
            frame = filter_sign(frame, sign)
        key = frame[shell_column].to_numpy(dtype=float)
        values = frame[value_column].to_numpy(dtype=float)
        for acc in accumulators:
            lo, hi = acc.shell
            acc.add(values[(key > lo) & (key <= hi)])
    return [acc.to_sample() for acc in accumulators]


def filter_sign(frame: pd.DataFrame, sign: SolutionSign) -> pd.DataFrame:
    if sign == SolutionSign.BOUNDARY:
        return frame[frame["ncomp_num"] == 0]
    return frame[frame["sign"] == sign.value]


# Statistics

def ks_statistic(sample: ShellSample, cdf: Cdf) -> float:
    if sample.count == 0:
        raise EmptySample(f"shell {sample.shell} is empty")
    return float(stats.kstest(sample.values, cdf).statistic)


def star_discrepancy(points: np.ndarray, depth: int = GRID_DEPTH) -> float:
    """Star discrepancy of points in [0,1] or [0,1]^2 over the dyadic grid of the given depth."""
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        raise EmptySample("no points")
    bins = 1 << depth
    grid = np.arange(1, bins + 1) / bins
    points = np.clip(points, 0.0, 1.0)

    if points.ndim == 1:
        hist, _ = np.histogram(points, bins=bins, range=(0.0, 1.0))
        below = np.cumsum(hist) / len(points)
        return float(np.max(np.abs(below - grid)))

    hist, _, _ = np.histogram2d(points[:, 0], points[:, 1], bins=bins, range=[[0.0, 1.0], [0.0, 1.0]])
    below = np.cumsum(np.cumsum(hist, axis=0), axis=1) / len(points)
    return float(np.max(np.abs(below - np.outer(grid, grid))))


def discrepancy_report(sample: ShellSample, cdf: Cdf, target: str) -> DiscrepancyReport:
    ks = ks_statistic(sample, cdf)
    star = star_discrepancy(cdf(sample.values))
    logger.debug(f"shell {sample.shell}: n={sample.count} ks={ks:.4g} star={star:.4g}")
    return DiscrepancyReport(shell=sample.shell, count=sample.count, ks=ks, star_disc=star, target=target)


def angular_discrepancy(angles: ShellSample, arc: Optional[KRegion] = None, depth: int = GRID_DEPTH) -> float:
    if angles.count == 0:
        raise EmptySample(f"shell {angles.shell} is empty")
    lo, width = (0.0, TWO_PI) if arc is None or arc.kind != KRegionKind.ARC else (arc.lo, arc.arc_length)
    offsets = np.mod(angles.values - lo, TWO_PI) / width
    return star_discrepancy(offsets[offsets < 1.0] if width < TWO_PI else offsets, depth)


def lipschitz_sum(
    points: np.ndarray,
    f: Callable,
    psi: Sequence[Tuple[float, float]],
    lipschitz_constant: Optional[float] = None
) -> LipschitzResult:
    points = np.asarray(points, dtype=float)
    if len(points) == 0:
        raise EmptySample("no points for the Lipschitz sum")

    with warnings.catch_warnings():
        warnings.simplefilter("error", integrate.IntegrationWarning)
        try:
            if len(psi) == 1:
                (lo, hi), = [(float(a), float(b)) for a, b in psi]
                weighted_mean = float(np.mean(f(points)))
                integral, err = integrate.quad(f, lo, hi, epsabs=1e-12)
                volume, _ = integrate.quad(lambda x: 1.0, lo, hi)
            else:
                (x_lo, x_hi), (y_lo, y_hi) = [(float(a), float(b)) for a, b in psi]
                weighted_mean = float(np.mean(f(points[:, 0], points[:, 1])))
                integral, err = integrate.dblquad(lambda y, x: f(x, y), x_lo, x_hi, y_lo, y_hi, epsabs=1e-12)
                volume, _ = integrate.dblquad(lambda y, x: 1.0, x_lo, x_hi, y_lo, y_hi)
        except integrate.IntegrationWarning as e:
            raise QuadratureFailure(f"quadrature did not converge: {e}") from e

    if err > QUADRATURE_TOLERANCE:
        raise QuadratureFailure(f"quadrature error estimate {err:.3e} exceeds {QUADRATURE_TOLERANCE}")
    reference = integral / volume
    return LipschitzResult(
        weighted_mean=weighted_mean,
        reference_integral=reference,
        deviation=abs(weighted_mean - reference),
        lipschitz_constant=lipschitz_constant,
        count=len(points),
    )


def rate_fit(points: Sequence[Tuple[float, float]]) -> RateFit:
    if len(points) < 3:
        raise DegenerateFit(f"need at least 3 points, got {len(points)}")
    scales = np.array([p[0] for p in points], dtype=float)
    deviations = np.array([p[1] for p in points], dtype=float)
    if np.any(scales <= 0) or np.any(deviations <= 0):
        raise DegenerateFit("rate fits need positive scales and deviations")
    x, y = np.log(scales), np.log(deviations)
    if np.ptp(x) == 0:
        raise DegenerateFit("all scales coincide")

    slope, intercept = np.polyfit(x, y, 1)
    residual = y - (slope * x + intercept)
    total = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 if total == 0 else 1.0 - float(np.sum(residual ** 2)) / total
    return RateFit(slope=float(slope), intercept=float(intercept), r2=r2, points=len(points))


def wrap_angle(x: np.ndarray) -> np.ndarray:
    return np.mod(np.asarray(x) + math.pi, TWO_PI) - math.pi


def w_direction_angles(frame: pd.DataFrame) -> pd.Series:
    """Angle from w_v to v for positive v, and from w_v to -v for negative v."""
    angle_w = np.arctan2(frame["y"].to_numpy(dtype=float), frame["x"].to_numpy(dtype=float))
    angle_v = np.arctan2(frame["b"].to_numpy(dtype=float), frame["a"].to_numpy(dtype=float))
    negative = (frame["sign"] == SolutionSign.NEGATIVE.value).to_numpy()
    gap = wrap_angle(angle_v + np.where(negative, math.pi, 0.0) - angle_w)
    return pd.Series(gap, index=frame.index, name="w_gap")
