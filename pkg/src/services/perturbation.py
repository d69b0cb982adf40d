import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm, logm

from ..core.config import settings
from ..core.exceptions import InvalidInterval
from ..core.models import (
    ConstantsEstimate,
    GroupElement,
    GroupFamily,
    GroupSpec,
    IwasawaCoords,
    KElement,
    PerturbationProbe,
    TScanResult,
)
from .iwasawa import ad_operator_norm, compose, decompose, inverse, lie_basis, multiply, random_element

logger = logging.getLogger(__name__)

LINEAR_EPSILONS = (1e-5, 1e-4, 1e-3, 1e-2)
SAMPLE_BLOCK = 500


def _ball_coefficients(dim: int, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    while True:
        c = rng.uniform(-epsilon, epsilon, size=dim)
        if c @ c <= epsilon * epsilon:
            return c


def sample_algebra(spec: GroupSpec, epsilon: float, rng: np.random.Generator) -> np.ndarray:
    """Uniform X in the epsilon-ball of Lie(G) by rejection from the bounding box."""
    if epsilon <= 0:
        raise InvalidInterval(f"epsilon must be positive, got {epsilon}")
    basis = lie_basis(spec)
    c = _ball_coefficients(len(basis), epsilon, rng)
    return sum(ci * B for ci, B in zip(c, basis))


def sample_ball(spec: GroupSpec, epsilon: float, rng: np.random.Generator) -> GroupElement:
    return GroupElement(spec=spec, entries=expm(sample_algebra(spec, epsilon, rng)))


def log_norm(g: GroupElement) -> float:
    return float(np.linalg.norm(logm(g.entries), "fro"))


def k_from_angle(spec: GroupSpec, phi: float) -> KElement:
    if spec.family == GroupFamily.SL2R:
        return KElement(angle=phi)
    c, s = math.cos(phi), math.sin(phi)
    if spec.family == GroupFamily.SL2C:
        return KElement(matrix=np.array([[c, -s], [s, c]], dtype=complex))
    R = np.eye(spec.n)
    R[:2, :2] = [[c, -s], [s, c]]
    return KElement(matrix=R)


def k_distance(spec: GroupSpec, k1: KElement, k2: KElement) -> float:
    if spec.family == GroupFamily.SL2R:
        delta = (k2.angle - k1.angle) % (2 * math.pi)
        return min(delta, 2 * math.pi - delta)
    return float(np.linalg.norm(logm(np.conj(k1.matrix).T @ k2.matrix), "fro"))


def _probe_partition(
    probe: PerturbationProbe,
    g: GroupElement,
    samples: int,
    rng: np.random.Generator
) -> Tuple[float, float, float]:
    spec, base = probe.spec, probe.base
    v0 = np.asarray(base.v)
    c_n = c_a = c_k = 0.0
    for _ in range(samples):
        u = sample_ball(spec, probe.epsilon, rng)
        w = sample_ball(spec, probe.epsilon, rng)
        coords = decompose(multiply(u, g, w))
        c_n = max(c_n, float(np.linalg.norm(np.asarray(coords.v) - v0)))
        c_a = max(c_a, abs(coords.t - base.t))
        c_k = max(c_k, k_distance(spec, base.k, coords.k))
    return c_n / probe.epsilon, c_a / probe.epsilon, c_k / probe.epsilon


def probe_constants(probe: PerturbationProbe) -> ConstantsEstimate:
    """Largest coordinate displacements of u*g*w over epsilon, u and w from the epsilon-ball."""
    g = compose(probe.base, probe.spec)
    # one jumped stream per fixed-size block, whatever the worker count
    blocks = -(-probe.samples // SAMPLE_BLOCK)
    shares = [min(SAMPLE_BLOCK, probe.samples - i * SAMPLE_BLOCK) for i in range(blocks)]
    streams = [np.random.Generator(np.random.PCG64(probe.seed).jumped(i)) for i in range(blocks)]

    with ThreadPoolExecutor(max_workers=probe.workers) as executor:
        results = list(executor.map(
            lambda job: _probe_partition(probe, g, job[0], job[1]),
            zip(shares, streams)
        ))

    c_n, c_a, c_k = (max(r[i] for r in results) for i in range(3))
    logger.debug(f"t={probe.base.t:.3g}: c_n={c_n:.4g} c_a={c_a:.4g} c_k={c_k:.4g}")
    return ConstantsEstimate(
        c_n=c_n, c_a=c_a, c_k=c_k,
        t=probe.base.t, epsilon=probe.epsilon,
        samples=probe.samples, seed=probe.seed,
    )


def _ratio(values: Sequence[float]) -> float:
    low = min(values)
    return math.inf if low == 0 else max(values) / low


def t_scan(
    spec: GroupSpec,
    v: Sequence[float],
    phi: float,
    epsilon: float,
    t_grid: Sequence[float],
    samples: int = 10_000,
    seed: Optional[int] = None,
    workers: int = 1,
    contrast: bool = False
) -> TScanResult:
    if not contrast and any(t > 0 for t in t_grid):
        raise InvalidInterval("t_grid must be non-positive unless contrast is set")
    seed = settings.default_seed if seed is None else seed
    k = k_from_angle(spec, phi)

    estimates = []
    for t in t_grid:
        base = IwasawaCoords(v=tuple(v), t=t, k=k)
        probe = PerturbationProbe(
            spec=spec, base=base, epsilon=epsilon, samples=samples,
            seed=seed, workers=workers, contrast=contrast,
        )
        estimates.append(probe_constants(probe))

    ratios = {
        name: _ratio([getattr(e, name) for e in estimates])
        for name in ("c_n", "c_a", "c_k")
    }
    logger.info(f"t-scan over {len(estimates)} points: ratios {ratios}")
    return TScanResult(estimates=estimates, ratios=ratios)


def linear_regime_limit(
    spec: GroupSpec,
    base: IwasawaCoords,
    epsilons: Sequence[float] = LINEAR_EPSILONS,
    samples: int = 2_000,
    seed: Optional[int] = None,
    tolerance: float = 0.1
) -> Tuple[float, List[ConstantsEstimate]]:
    """Largest epsilon whose displacement-per-epsilon stays within tolerance of the smallest epsilon's."""
    seed = settings.default_seed if seed is None else seed
    epsilons = sorted(epsilons)
    estimates = [
        probe_constants(PerturbationProbe(spec=spec, base=base, epsilon=eps, samples=samples, seed=seed, contrast=True))
        for eps in epsilons
    ]
    reference = estimates[0]
    limit = epsilons[0]
    for eps, est in zip(epsilons[1:], estimates[1:]):
        within = all(
            abs(getattr(est, name) - getattr(reference, name)) <= tolerance * getattr(reference, name)
            for name in ("c_n", "c_a", "c_k")
        )
        if not within:
            break
        limit = eps
    logger.info(f"Linear regime holds up to epsilon={limit:g}")
    return limit, estimates


def adjoint_containment(
    spec: GroupSpec,
    epsilon: float = 1e-3,
    trials: int = 1_000,
    seed: Optional[int] = None,
    v_max: float = 2.0,
    t_max: float = 2.0
) -> Dict[str, float]:
    """Check |log(g^{-1} u g)| <= epsilon * |Ad g| for random g and u in the epsilon-ball."""
    rng = np.random.Generator(np.random.PCG64(settings.default_seed if seed is None else seed))
    worst = 0.0
    for _ in range(trials):
        g = random_element(spec, rng, v_max, t_max)
        u = sample_ball(spec, epsilon, rng)
        conjugated = multiply(inverse(g), u, g)
        worst = max(worst, log_norm(conjugated) / (epsilon * ad_operator_norm(g)))
    return {"worst_ratio": worst, "trials": float(trials), "epsilon": epsilon}
