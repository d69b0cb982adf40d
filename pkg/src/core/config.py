from pydantic_settings import BaseSettings
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from dotenv import dotenv_values
from pathlib import Path
from typing import Any, Dict, List, Optional, Type, TypeVar
import math

from .exceptions import ConfigError, ParseError
from .models import CountMode, GroupFamily, LatticeKind, OutputFormat


class Settings(BaseSettings):
    log_level: str = "INFO"
    log_file: Optional[str] = None

    output_dir: str = "./output"
    default_seed: int = 20240229
    workers: int = 1
    progress: bool = False

    tolerance: float = 1e-10
    float_digits: int = 17
    schema_version: str = "1"

    class Config:
        env_file = ".env"
        env_prefix = "HOROCOUNT_"
        case_sensitive = False
        extra = "ignore"


settings = Settings()


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    out: Optional[Path] = None
    format: OutputFormat = OutputFormat.CSV
    workers: int = Field(default_factory=lambda: settings.workers, ge=1)
    seed: int = Field(default_factory=lambda: settings.default_seed, ge=0, lt=2**64)


class DecomposeConfig(RunConfig):
    group: GroupFamily = GroupFamily.SL2R
    n: Optional[int] = None
    matrix: str


class GcdScanConfig(RunConfig):
    ring: str = "z"
    d: Optional[int] = None
    rmax: float = Field(ge=1.0)
    phi: str = "full"

    @field_validator("ring")
    @classmethod
    def _ring_name(cls, value: str) -> str:
        value = value.lower()
        if value not in ("z", "od"):
            raise ValueError(f"ring must be 'z' or 'od', got {value!r}")
        return value


class CountConfig(RunConfig):
    lattice: LatticeKind = LatticeKind.SL2Z
    mode: CountMode = CountMode.RECTANGLE
    d: Optional[int] = None
    psi: Optional[str] = None
    phi: str = "full"
    T: Optional[float] = Field(default=None, ge=0.0)
    S: float = Field(default=0.0, ge=0.0)
    y: float = 0.0
    sweep: Optional[List[float]] = None
    kappa: Optional[float] = Field(default=None, gt=0.0, lt=1.0)
    covolume: Optional[float] = Field(default=None, gt=0.0)
    error_constant: float = Field(default=1.0, gt=0.0)
    format: OutputFormat = OutputFormat.JSON

    @field_validator("sweep", mode="before")
    @classmethod
    def _split_sweep(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [float(item) for item in value.split(",") if item.strip()]
        return value


class LorentzConfig(RunConfig):
    n: int = 2
    x0_max: int = Field(ge=1)
    shortest_only: bool = False


class PerturbConfig(RunConfig):
    group: GroupFamily = GroupFamily.SL2R
    n: Optional[int] = None
    v: List[float] = Field(default_factory=lambda: [0.3])
    phi: float = math.pi / 7
    epsilon: float = Field(default=1e-4, gt=0.0, le=0.1)
    t_grid: List[float] = Field(default_factory=lambda: [float(-t) for t in range(0, 21, 2)])
    samples: int = Field(default=10_000, ge=1)
    contrast: bool = False
    adjoint_check: bool = False
    linear_scan: bool = False
    format: OutputFormat = OutputFormat.JSON

    @field_validator("v", "t_grid", mode="before")
    @classmethod
    def _split_floats(cls, value: Any) -> Any:
        if isinstance(value, str):
            return [float(item) for item in value.split(",") if item.strip()]
        return value


class StatsConfig(RunConfig):
    input: Path
    statistic: str = "ks"
    column: str = "ratio"
    target: str = "uniform:0:0.5"
    shells: str = "geometric:10"
    shell_column: str = "norm_v"
    sign: Optional[str] = None
    fit: bool = False

    @field_validator("statistic")
    @classmethod
    def _statistic_name(cls, value: str) -> str:
        value = value.lower()
        if value not in ("ks", "star", "angular"):
            raise ValueError(f"unknown statistic {value!r}")
        return value


ConfigT = TypeVar("ConfigT", bound=RunConfig)


def load_run_config(
    config_cls: Type[ConfigT],
    config_path: Optional[Path] = None,
    overrides: Optional[Dict[str, Any]] = None
) -> ConfigT:
    values: Dict[str, Any] = {}

    if config_path is not None:
        if not Path(config_path).exists():
            raise ParseError(f"Config file not found: {config_path}")
        values.update({k: v for k, v in dotenv_values(config_path).items() if v is not None})

    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})

    try:
        return config_cls(**values)
    except ValidationError as e:
        raise ConfigError(f"Invalid {config_cls.__name__}: {e}") from e
