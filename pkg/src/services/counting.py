import logging
import math
from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..core.config import settings
from ..core.exceptions import ConfigMismatch, InvalidInterval
from ..core.models import (
    CountReport,
    DomainSpec,
    GroupSpec,
    ImagQuadRing,
    KRegion,
    KRegionKind,
    LatticeConfig,
    LatticeKind,
)
from .gcd_lab import primitive_z2_arrays, shortest_solution_arrays
from .iwasawa import haar_volume
from .quadratic_ring import conj, mul, primitive_od_arrays, reduce_into_box

logger = logging.getLogger(__name__)

SNAP_TOLERANCE = 1e-9
# products of psi endpoints and n_comp denominators above this go to Python ints
INT64_PRODUCT_LIMIT = 1 << 62


def error_exponent(m_gamma: int, dim_g: int) -> float:
    if m_gamma < 1 or dim_g < 3:
        raise InvalidInterval(f"need m >= 1 and dim G >= 3, got m={m_gamma}, dim={dim_g}")
    return float(1 - Fraction(1, 2 * m_gamma * (1 + dim_g)))


def snapped_floor(value: float) -> int:
    nearest = round(value)
    if abs(value - nearest) <= SNAP_TOLERANCE * max(1.0, abs(value)):
        return int(nearest)
    return int(math.floor(value))


def norm2_window(T: float, S: float) -> Tuple[int, int]:
    """Integer bounds (lo, hi) with |v|^2 in (lo, hi] matching (e^S, e^T], or (0, e^T] at S = 0."""
    hi = snapped_floor(math.exp(T))
    lo = snapped_floor(math.exp(S)) if S > 0 else 0
    return lo, hi


def _ceil_div(num, den):
    return -((-num) // den)


def count_translates(num: np.ndarray, den: np.ndarray, lo: Fraction, hi: Fraction) -> np.ndarray:
    """Number of integers m with num/den + m in [lo, hi), exactly."""
    num = np.asarray(num)
    den = np.asarray(den)
    if len(den):
        scale = max(abs(lo.numerator), abs(hi.numerator), lo.denominator, hi.denominator)
        magnitude = int(np.max(np.abs(num))) + int(np.max(den))
        if scale * magnitude * max(lo.denominator, hi.denominator) >= INT64_PRODUCT_LIMIT:
            num = num.astype(object)
            den = den.astype(object)
    upper = _ceil_div(hi.numerator * den - num * hi.denominator, hi.denominator * den)
    lower = _ceil_div(lo.numerator * den - num * lo.denominator, lo.denominator * den)
    return upper - lower


def k_measure(region: KRegion, config: LatticeConfig) -> float:
    if region.kind == KRegionKind.FULL:
        return config.muK_total
    if region.kind == KRegionKind.ARC:
        return config.muK_total * region.arc_length / (2 * math.pi)
    r = region.radius
    return config.muK_total * math.pi * (2 * r - math.sin(2 * r)) / (2 * math.pi ** 2)


def _shell_edges(lo: int, hi: int, shells: int) -> List[Tuple[int, int]]:
    if hi <= lo:
        return [(lo, hi)]
    edges = np.unique(np.linspace(lo, hi, shells + 1).round().astype(np.int64))
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:])]


class LatticeCounter:
    """Exact lattice-point counts in Iwasawa boxes, split over norm shells."""

    def __init__(self, config: LatticeConfig, workers: Optional[int] = None):
        self.config = config
        self.workers = workers or settings.workers
        self.executor = ThreadPoolExecutor(max_workers=self.workers)

    def close(self) -> None:
        self.executor.shutdown(wait=True)

    def __enter__(self) -> "LatticeCounter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _sum_over_shells(self, lo: int, hi: int, count_shell: Callable[[int, int], int]) -> int:
        edges = _shell_edges(lo, hi, max(1, self.workers))
        counts = list(self.executor.map(lambda edge: count_shell(*edge), edges))
        logger.debug(f"Shell counts over {edges}: {counts}")
        return int(sum(counts))

    # Z^2

    def _count_z_shell(self, lo: int, hi: int, domain: DomainSpec) -> int:
        a, b = primitive_z2_arrays(hi, lo, domain.phi)
        if len(a) == 0:
            return 0
        sol = shortest_solution_arrays(a, b)
        psi_lo, psi_hi = domain.psi[0]
        return int(count_translates(sol["ip"], sol["r2"], psi_lo, psi_hi).sum())

    def count_sl2z(self, domain: DomainSpec) -> CountReport:
        if self.config.lattice != LatticeKind.SL2Z:
            raise ConfigMismatch(f"count_sl2z needs an SL2Z lattice config, got {self.config.lattice.value}")
        if len(domain.psi) != 1:
            raise ConfigMismatch("SL2Z domains have a one-dimensional psi")
        if domain.phi.kind == KRegionKind.CAP:
            raise ConfigMismatch("SL2Z domains take arcs, not caps")

        lo, hi = norm2_window(domain.T, domain.S)
        observed = self._sum_over_shells(lo, hi, lambda a, b: self._count_z_shell(a, b, domain))
        return self._report(GroupSpec.sl2r(), domain, observed, float(domain.mu_n))

    # O_d^2

    def _count_od_shell(self, lo: int, hi: int, ring: ImagQuadRing, domain: DomainSpec) -> int:
        arr = primitive_od_arrays(ring, hi, lo, domain.phi)
        r2 = arr["r2"]
        if len(r2) == 0:
            return 0
        alpha = (arr["alpha_u"], arr["alpha_w"])
        beta = (arr["beta_u"], arr["beta_w"])
        xi = (arr["t_u"], arr["t_w"])
        eta = (-arr["s_u"], -arr["s_w"])
        ip = tuple(x + y for x, y in zip(mul(ring, xi, conj(ring, alpha)), mul(ring, eta, conj(ring, beta))))
        m = reduce_into_box(ring, ip, r2)
        ip_u, ip_w = ip[0] + m[0] * r2, ip[1] + m[1] * r2

        (x_lo, x_hi), (y_lo, y_hi) = domain.psi
        # box coordinates: x = (2*ip_u + c1*ip_w) / (2*r2), y = ip_w / r2
        first = _ceil_div(y_lo.numerator * r2 - ip_w * y_lo.denominator, y_lo.denominator * r2)
        rows = count_translates(ip_w, r2, y_lo, y_hi)
        total = 0
        for j in range(int(rows.max()) if len(rows) else 0):
            active = rows > j
            m_w = first[active] + j
            x_num = 2 * ip_u[active] + ring.c1 * ip_w[active] + ring.c1 * m_w * r2[active]
            total += int(count_translates(x_num, 2 * r2[active], x_lo, x_hi).sum())
        return total

    def count_sl2od(self, ring: ImagQuadRing, domain: DomainSpec) -> CountReport:
        if self.config.lattice != LatticeKind.SL2OD:
            raise ConfigMismatch(f"count_sl2od needs an SL2OD lattice config, got {self.config.lattice.value}")
        if self.config.d is not None and self.config.d != ring.d:
            raise ConfigMismatch(f"lattice config is for d={self.config.d}, ring has d={ring.d}")
        if len(domain.psi) != 2:
            raise ConfigMismatch("SL2(O_d) domains have a two-dimensional psi")
        if domain.phi.kind == KRegionKind.ARC:
            raise ConfigMismatch("SL2(O_d) domains take caps, not arcs")

        lo, hi = norm2_window(domain.T, domain.S)
        observed = self._sum_over_shells(lo, hi, lambda a, b: self._count_od_shell(a, b, ring, domain))
        return self._report(GroupSpec.sl2c(), domain, observed, float(domain.mu_n) * ring.im_omega)

    def count_difference(self, domain: DomainSpec, ring: Optional[ImagQuadRing] = None) -> CountReport:
        if domain.S > domain.T or domain.S < 0:
            raise InvalidInterval(f"need 0 <= S <= T, got S={domain.S}, T={domain.T}")
        if self.config.lattice == LatticeKind.SL2OD:
            return self.count_sl2od(ring or ImagQuadRing(d=self.config.d), domain)
        return self.count_sl2z(domain)

    def horosphere_lift_count(self, T: float, y: float) -> CountReport:
        if self.config.lattice != LatticeKind.SL2Z:
            raise ConfigMismatch("horosphere lifts are counted for SL2Z only")
        if T < 0:
            raise InvalidInterval(f"T must be non-negative, got {T}")

        # bottom rows of gamma^{-1}: e^{-T-y} <= |v|^2 <= e^{T-y}, one translate each
        hi = snapped_floor(math.exp(T - y))
        lower = math.exp(-T - y)
        lo = max(0, -snapped_floor(-lower) - 1)
        observed = self._sum_over_shells(lo, hi, lambda a, b: len(primitive_z2_arrays(b, a)[0]))

        domain = DomainSpec(psi=[(Fraction(-1, 2), Fraction(1, 2))], T=T)
        main_term = None
        relative_dev = None
        if self.config.covolume is not None:
            main_term = self.config.muK_total * math.exp(T - y) / self.config.covolume
            relative_dev = observed / main_term - 1
        return CountReport(
            lattice=self.config.lattice,
            observed=observed,
            main_term=main_term,
            error_bound=self._error_bound(GroupSpec.sl2r(), T),
            relative_dev=relative_dev,
            density=observed / math.exp(T - y),
            kappa=self.config.kappa,
            domain=domain,
        )

    def sweep(self, domains: Sequence[DomainSpec], ring: Optional[ImagQuadRing] = None) -> List[CountReport]:
        return [self.count_difference(domain, ring) for domain in domains]

    # reports

    def _error_bound(self, spec: GroupSpec, T: float) -> Optional[float]:
        if self.config.kappa is None:
            return None
        return self.config.error_constant * T * math.exp(spec.two_rho * self.config.kappa * T)

    def _report(self, spec: GroupSpec, domain: DomainSpec, observed: int, mu_n: float) -> CountReport:
        mu_k = k_measure(domain.phi, self.config)
        volume = haar_volume(spec, mu_n, mu_k, domain.T, domain.S)
        main_term = relative_dev = log_form = None
        degenerate = False

        if self.config.covolume is None:
            logger.warning(f"No covolume for {self.config.lattice.value}; reporting density only")
        else:
            main_term = volume / self.config.covolume
            if main_term > 0:
                relative_dev = observed / main_term - 1
            else:
                degenerate = True
                logger.warning(f"Main term vanishes for T={domain.T}, S={domain.S}")

        if self.config.kappa is not None and volume > 1:
            log_form = self.config.error_constant * math.log(volume) * volume ** self.config.kappa

        report = CountReport(
            lattice=self.config.lattice,
            observed=observed,
            main_term=main_term,
            error_bound=self._error_bound(spec, domain.T),
            error_bound_log_form=log_form,
            relative_dev=relative_dev,
            density=observed / math.exp(spec.two_rho * domain.T),
            kappa=self.config.kappa,
            degenerate=degenerate,
            domain=domain,
        )
        logger.info(
            f"{self.config.lattice.value}: T={domain.T:.6g} S={domain.S:.6g} observed={observed} "
            f"main_term={main_term}"
        )
        return report


def count_sl2z(domain: DomainSpec, config: LatticeConfig, workers: Optional[int] = None) -> CountReport:
    with LatticeCounter(config, workers) as counter:
        return counter.count_sl2z(domain)


def count_sl2od(ring: ImagQuadRing, domain: DomainSpec, config: LatticeConfig, workers: Optional[int] = None) -> CountReport:
    with LatticeCounter(config, workers) as counter:
        return counter.count_sl2od(ring, domain)


def count_difference(domain: DomainSpec, config: LatticeConfig, workers: Optional[int] = None) -> CountReport:
    with LatticeCounter(config, workers) as counter:
        return counter.count_difference(domain)


def horosphere_lift_count(T: float, y: float, config: LatticeConfig, workers: Optional[int] = None) -> CountReport:
    with LatticeCounter(config, workers) as counter:
        return counter.horosphere_lift_count(T, y)
