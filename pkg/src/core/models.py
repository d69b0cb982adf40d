from fractions import Fraction
from math import gcd, isqrt, pi, sqrt
from typing import Dict, List, Optional, Tuple
from enum import Enum

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, computed_field, field_validator, model_validator

from .exceptions import InvalidInterval, NotPrimitive, UnsupportedRing, DimensionMismatch


TWO_PI = 2.0 * pi
EUCLIDEAN_D = (1, 2, 3, 7, 11)


class GroupFamily(str, Enum):
    SL2R = "sl2r"
    SL2C = "sl2c"
    SO1N = "so1n"


class SolutionSign(str, Enum):
    POSITIVE = "positive"
    NEGATIVE = "negative"
    BOUNDARY = "boundary"


class LatticeKind(str, Enum):
    SL2Z = "sl2z"
    SL2OD = "sl2od"
    SO1NZ = "so1nz"


class CountMode(str, Enum):
    RECTANGLE = "rectangle"
    HOROSPHERE = "horosphere"


class OutputFormat(str, Enum):
    CSV = "csv"
    JSON = "json"


class KRegionKind(str, Enum):
    FULL = "full"
    ARC = "arc"
    CAP = "cap"


class TargetLaw(str, Enum):
    UNIFORM_01_HALF = "uniform01half"
    UNIFORM_INTERVAL = "uniform"
    NU_D = "nu"
    UNIFORM_ARC = "arc"
    UNIFORM_CAP_S3 = "cap"


class GroupSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    family: GroupFamily
    n: int
    p: int
    q: int = 0
    two_rho: float

    @model_validator(mode="after")
    def _check_invariants(self) -> "GroupSpec":
        expected = {
            GroupFamily.SL2R: (2, 1, 0),
            GroupFamily.SL2C: (3, 2, 0),
        }
        if self.family in expected:
            n, p, q = expected[self.family]
            if (self.n, self.p, self.q) != (n, p, q):
                raise DimensionMismatch(f"{self.family.value} requires n={n}, p={p}, q={q}")
        elif self.n < 2 or self.p != self.n - 1 or self.q != 0:
            raise DimensionMismatch(f"so1n requires n >= 2, p = n - 1, q = 0 (got n={self.n}, p={self.p})")
        if abs(self.two_rho - (self.p + 2 * self.q)) > 1e-12:
            raise DimensionMismatch("two_rho must equal p + 2q")
        return self

    @classmethod
    def sl2r(cls) -> "GroupSpec":
        return cls(family=GroupFamily.SL2R, n=2, p=1, q=0, two_rho=1.0)

    @classmethod
    def sl2c(cls) -> "GroupSpec":
        return cls(family=GroupFamily.SL2C, n=3, p=2, q=0, two_rho=2.0)

    @classmethod
    def so1n(cls, n: int) -> "GroupSpec":
        return cls(family=GroupFamily.SO1N, n=n, p=n - 1, q=0, two_rho=float(n - 1))

    @classmethod
    def for_family(cls, family: GroupFamily, n: Optional[int] = None) -> "GroupSpec":
        family = GroupFamily(family)
        if family == GroupFamily.SL2R:
            return cls.sl2r()
        if family == GroupFamily.SL2C:
            return cls.sl2c()
        return cls.so1n(2 if n is None else n)

    @property
    def matrix_size(self) -> int:
        return self.n + 1 if self.family == GroupFamily.SO1N else 2

    @property
    def lie_dim(self) -> int:
        if self.family == GroupFamily.SL2R:
            return 3
        if self.family == GroupFamily.SL2C:
            return 6
        return self.n * (self.n + 1) // 2


class KElement(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    angle: Optional[float] = None
    matrix: Optional[np.ndarray] = None

    @model_validator(mode="after")
    def _one_representation(self) -> "KElement":
        if (self.angle is None) == (self.matrix is None):
            raise DimensionMismatch("KElement needs exactly one of angle or matrix")
        if self.angle is not None:
            object.__setattr__(self, "angle", float(self.angle) % TWO_PI)
        else:
            m = np.array(self.matrix)
            m.flags.writeable = False
            object.__setattr__(self, "matrix", m)
        return self

    @classmethod
    def identity(cls, spec: GroupSpec) -> "KElement":
        if spec.family == GroupFamily.SL2R:
            return cls(angle=0.0)
        if spec.family == GroupFamily.SL2C:
            return cls(matrix=np.eye(2, dtype=complex))
        return cls(matrix=np.eye(spec.n))


class GroupElement(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spec: GroupSpec
    entries: np.ndarray

    @model_validator(mode="after")
    def _freeze_entries(self) -> "GroupElement":
        size = self.spec.matrix_size
        dtype = float if self.spec.family == GroupFamily.SO1N else complex
        m = np.array(self.entries, dtype=dtype)
        if m.shape != (size, size):
            raise DimensionMismatch(f"{self.spec.family.value} expects a {size}x{size} matrix, got {m.shape}")
        m.flags.writeable = False
        object.__setattr__(self, "entries", m)
        return self


class IwasawaCoords(BaseModel):
    model_config = ConfigDict(frozen=True)

    v: Tuple[float, ...]
    z: Tuple[float, ...] = ()
    t: float
    k: KElement


class PrimitiveVectorZ(BaseModel):
    model_config = ConfigDict(frozen=True)

    a: int
    b: int

    @model_validator(mode="after")
    def _check_primitive(self) -> "PrimitiveVectorZ":
        if gcd(self.a, self.b) != 1:
            raise NotPrimitive(f"({self.a}, {self.b}) is not primitive")
        return self

    @property
    def norm2(self) -> int:
        return self.a * self.a + self.b * self.b


class ShortestSolutionZ(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    v: PrimitiveVectorZ
    w: Tuple[int, int]
    n_comp: Fraction
    ratio: float
    theta_v: float
    sign: SolutionSign

    @property
    def boundary(self) -> bool:
        return self.n_comp == 0


class ImagQuadRing(BaseModel):
    model_config = ConfigDict(frozen=True)

    d: int

    @field_validator("d")
    @classmethod
    def _euclidean(cls, d: int) -> int:
        if d not in EUCLIDEAN_D:
            raise UnsupportedRing(f"d={d} is not one of the Euclidean values {EUCLIDEAN_D}")
        return d

    @computed_field
    @property
    def disc(self) -> int:
        return -self.d if self.d % 4 == 3 else -4 * self.d

    @computed_field
    @property
    def omega(self) -> complex:
        if self.d % 4 == 3:
            return complex(0.5, sqrt(self.d) / 2)
        return complex(0.0, sqrt(self.d))

    @computed_field
    @property
    def half_height(self) -> float:
        return sqrt(abs(self.disc)) / 4

    @computed_field
    @property
    def rho_d(self) -> float:
        return sqrt(0.25 + abs(self.disc) / 16)

    # omega^2 = c0 + c1 * omega
    @property
    def c0(self) -> int:
        return -(1 + self.d) // 4 if self.d % 4 == 3 else -self.d

    @property
    def c1(self) -> int:
        return 1 if self.d % 4 == 3 else 0

    @property
    def re_omega(self) -> Fraction:
        return Fraction(self.c1, 2)

    @property
    def im_omega(self) -> float:
        return self.omega.imag

    @property
    def covolume(self) -> float:
        return self.im_omega


class AlgebraicInt(BaseModel):
    """u + w*omega in the ring of integers O_d."""

    model_config = ConfigDict(frozen=True)

    u: int
    w: int
    d: int

    @property
    def ring(self) -> ImagQuadRing:
        return ImagQuadRing(d=self.d)

    def _coerce(self, other) -> "AlgebraicInt":
        if isinstance(other, AlgebraicInt):
            if other.d != self.d:
                raise UnsupportedRing("cannot mix elements of different rings")
            return other
        return AlgebraicInt(u=int(other), w=0, d=self.d)

    def __add__(self, other) -> "AlgebraicInt":
        other = self._coerce(other)
        return AlgebraicInt(u=self.u + other.u, w=self.w + other.w, d=self.d)

    __radd__ = __add__

    def __neg__(self) -> "AlgebraicInt":
        return AlgebraicInt(u=-self.u, w=-self.w, d=self.d)

    def __sub__(self, other) -> "AlgebraicInt":
        return self + (-self._coerce(other))

    def __mul__(self, other) -> "AlgebraicInt":
        other = self._coerce(other)
        ring = self.ring
        u = self.u * other.u + ring.c0 * self.w * other.w
        w = self.u * other.w + self.w * other.u + ring.c1 * self.w * other.w
        return AlgebraicInt(u=u, w=w, d=self.d)

    __rmul__ = __mul__

    def conj(self) -> "AlgebraicInt":
        return AlgebraicInt(u=self.u + self.ring.c1 * self.w, w=-self.w, d=self.d)

    def norm(self) -> int:
        ring = self.ring
        return self.u * self.u + ring.c1 * self.u * self.w - ring.c0 * self.w * self.w

    def is_zero(self) -> bool:
        return self.u == 0 and self.w == 0

    def to_complex(self) -> complex:
        return self.u + self.w * self.ring.omega


class ShortestSolutionOd(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    ring: ImagQuadRing
    v: Tuple[AlgebraicInt, AlgebraicInt]
    w: Tuple[AlgebraicInt, AlgebraicInt]
    # <w,v>/|v|^2 = s + t*omega, exact
    n_omega: Tuple[Fraction, Fraction]
    ratio: float
    s_v: complex
    c_v: complex

    @property
    def n_comp(self) -> complex:
        s, t = self.n_omega
        return float(s) + float(t) * self.ring.omega

    @property
    def n_box(self) -> Tuple[Fraction, Fraction]:
        s, t = self.n_omega
        return (s + t * self.ring.re_omega, t)


class KRegion(BaseModel):
    model_config = ConfigDict(frozen=True)

    kind: KRegionKind = KRegionKind.FULL
    lo: float = 0.0
    hi: float = TWO_PI
    center: Optional[Tuple[float, float, float, float]] = None
    radius: Optional[float] = None

    @model_validator(mode="after")
    def _normalise(self) -> "KRegion":
        if self.kind == KRegionKind.ARC:
            width = self.hi - self.lo
            if not 0.0 < width <= TWO_PI:
                raise InvalidInterval(f"arc [{self.lo}, {self.hi}) must have length in (0, 2pi]")
            if width < TWO_PI:
                object.__setattr__(self, "lo", self.lo % TWO_PI)
                object.__setattr__(self, "hi", self.lo + width)
        elif self.kind == KRegionKind.CAP:
            if self.center is None or self.radius is None:
                raise InvalidInterval("cap needs a center and an angular radius")
            c = np.asarray(self.center, dtype=float)
            norm = float(np.linalg.norm(c))
            if norm == 0.0 or not 0.0 < self.radius <= pi:
                raise InvalidInterval("cap center must be nonzero and radius in (0, pi]")
            object.__setattr__(self, "center", tuple(float(x) for x in c / norm))
        return self

    @classmethod
    def full(cls) -> "KRegion":
        return cls(kind=KRegionKind.FULL)

    @classmethod
    def arc(cls, lo: float, hi: float) -> "KRegion":
        return cls(kind=KRegionKind.ARC, lo=lo, hi=hi)

    @classmethod
    def cap(cls, center: Tuple[float, float, float, float], radius: float) -> "KRegion":
        return cls(kind=KRegionKind.CAP, center=center, radius=radius)

    @property
    def arc_length(self) -> float:
        return self.hi - self.lo


class DomainSpec(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    psi: Tuple[Tuple[Fraction, Fraction], ...]
    phi: KRegion = Field(default_factory=KRegion.full)
    T: float
    S: float = 0.0

    @field_validator("psi", mode="before")
    @classmethod
    def _as_fractions(cls, psi):
        return tuple((Fraction(lo), Fraction(hi)) for lo, hi in psi)

    @model_validator(mode="after")
    def _check_domain(self) -> "DomainSpec":
        if not self.psi:
            raise InvalidInterval("psi must have at least one dimension")
        for lo, hi in self.psi:
            if not lo < hi:
                raise InvalidInterval(f"psi interval [{lo}, {hi}) is empty")
        if self.S < 0 or self.S > self.T:
            raise InvalidInterval(f"need 0 <= S <= T, got S={self.S}, T={self.T}")
        return self

    @property
    def mu_n(self) -> Fraction:
        measure = Fraction(1)
        for lo, hi in self.psi:
            measure *= hi - lo
        return measure


class LatticeConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    lattice: LatticeKind
    d: Optional[int] = None
    n: Optional[int] = None
    kappa: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    covolume: Optional[float] = Field(default=None, gt=0.0)
    muK_total: float = Field(gt=0.0)
    error_constant: float = Field(default=1.0, gt=0.0)

    @classmethod
    def sl2z(cls, covolume: Optional[float] = pi ** 2 / 3, kappa: float = 7 / 8, error_constant: float = 1.0) -> "LatticeConfig":
        return cls(
            lattice=LatticeKind.SL2Z, kappa=kappa, covolume=covolume,
            muK_total=TWO_PI, error_constant=error_constant
        )

    @classmethod
    def sl2od(cls, d: int, kappa: Optional[float] = None, covolume: Optional[float] = None, error_constant: float = 1.0) -> "LatticeConfig":
        ImagQuadRing(d=d)
        return cls(
            lattice=LatticeKind.SL2OD, d=d, kappa=kappa, covolume=covolume,
            muK_total=2 * pi ** 2, error_constant=error_constant
        )


class CountReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    lattice: LatticeKind
    observed: int = Field(ge=0)
    main_term: Optional[float] = None
    error_bound: Optional[float] = None
    error_bound_log_form: Optional[float] = None
    relative_dev: Optional[float] = None
    density: float
    kappa: Optional[float] = None
    error_bound_shape: str = "shape-only"
    degenerate: bool = False
    domain: DomainSpec


class ShellSample(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    shell: Tuple[float, float]
    values: np.ndarray

    @model_validator(mode="after")
    def _freeze(self) -> "ShellSample":
        values = np.array(self.values, dtype=float)
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        return self

    @computed_field
    @property
    def count(self) -> int:
        return int(self.values.shape[0])


class DiscrepancyReport(BaseModel):
    model_config = ConfigDict(frozen=True)

    shell: Tuple[float, float]
    count: int
    ks: float = Field(ge=0.0, le=1.0)
    star_disc: float = Field(ge=0.0, le=1.0)
    target: str


class RateFit(BaseModel):
    model_config = ConfigDict(frozen=True)

    slope: float
    intercept: float
    r2: float
    points: int


class LipschitzResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    weighted_mean: float
    reference_integral: float
    deviation: float
    lipschitz_constant: Optional[float] = None
    count: int


class ParityLattice(BaseModel):
    """Integer vectors of length n - 1 with even coordinate sum."""

    model_config = ConfigDict(frozen=True)

    n: int = Field(ge=2)

    @property
    def rank(self) -> int:
        return self.n - 1

    def contains(self, x) -> bool:
        if len(x) != self.rank:
            return False
        if any(Fraction(xi).denominator != 1 for xi in x):
            return False
        return sum(int(xi) for xi in x) % 2 == 0


class LorentzSolution(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    x: Tuple[int, ...]
    height: Optional[float] = None
    v: Optional[Tuple[Fraction, ...]] = None
    z_comp: Optional[Fraction] = None

    @property
    def n(self) -> int:
        return len(self.x) - 1

    @property
    def denominator(self) -> int:
        return self.x[0] - self.x[-1]


class PerturbationProbe(BaseModel):
    model_config = ConfigDict(frozen=True)

    spec: GroupSpec
    base: IwasawaCoords
    epsilon: float = Field(gt=0.0, le=0.1)
    samples: int = Field(ge=1)
    seed: int = Field(ge=0)
    workers: int = Field(default=1, ge=1)
    contrast: bool = False

    @model_validator(mode="after")
    def _negative_direction(self) -> "PerturbationProbe":
        if self.base.t > 0 and not self.contrast:
            raise InvalidInterval(f"probe base needs t <= 0 (got t={self.base.t}); set contrast=True to override")
        return self


class ConstantsEstimate(BaseModel):
    model_config = ConfigDict(frozen=True)

    c_n: float = Field(ge=0.0)
    c_a: float = Field(ge=0.0)
    c_k: float = Field(ge=0.0)
    t: float
    epsilon: float
    samples: int
    seed: int
    label: str = "estimate"


class TScanResult(BaseModel):
    model_config = ConfigDict(frozen=True)

    estimates: List[ConstantsEstimate]
    ratios: Dict[str, float]
