"""JSON run configuration validated with pydantic."""

import json
import logging
from typing import Any, Literal

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from src.core.config_loader import load_settings
from src.core.exceptions import ConfigError
from src.physics.params import MobilityLaws, PhysicsParams
from src.solvers.state import ModelKind, TangentialMode
from src.stepping.stepper import StepperConfig

logger = logging.getLogger(__name__)


class DiscGeometry(BaseModel):
    """Unit disc support."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    refinement: int = Field(default=2, ge=0)


class RidgeGeometry(BaseModel):
    """Perturbed ridge [0, L] x [0, H]."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    L: float = Field(default=1.0, gt=0)
    H: float = Field(default=4.0, gt=0)
    delta: float = 0.1
    refinement: int = Field(default=1, ge=0)

    @field_validator("delta")
    @classmethod
    def validate_delta(cls, v: float) -> float:
        """
        Reject amplitudes that could fold the initial map.

        Args:
            v: Perturbation amplitude.

        Returns:
            The amplitude.
        """
        if abs(v) >= 1:
            raise ValueError("|delta| must be < 1")
        return v


class GeometryConfig(BaseModel):
    """Exactly one of the supported supports."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    disc: DiscGeometry | None = None
    ridge: RidgeGeometry | None = None

    @model_validator(mode="after")
    def check_exactly_one(self) -> "GeometryConfig":
        """
        Validate that one geometry is selected.

        Returns:
            The validated model.
        """
        if (self.disc is None) == (self.ridge is None):
            raise ValueError("exactly one of 'disc' or 'ridge' must be given")
        return self

    @property
    def refinement(self) -> int:
        """Refinement level of the selected geometry."""
        selected = self.disc if self.disc is not None else self.ridge
        assert selected is not None
        return selected.refinement

    def with_refinement(self, refinement: int) -> "GeometryConfig":
        """Copy with another refinement level."""
        if self.disc is not None:
            return self.model_copy(update={"disc": self.disc.model_copy(update={"refinement": refinement})})
        assert self.ridge is not None
        return self.model_copy(update={"ridge": self.ridge.model_copy(update={"refinement": refinement})})


class OutputConfig(BaseModel):
    """Where and what to write."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    dir: str = "output"
    snapshot_every: int = Field(default=10, ge=1)
    csv: bool = True
    vtk: bool = False


class RunConfig(BaseModel):
    """
    Complete description of one simulation.

    Attributes:
        model: transient, strong or weak.
        geometry: Disc or ridge support.
        degree: Polynomial degree of the isoparametric elements.
        physics: Energy coefficients.
        mobilities: Mobility laws.
        stepper: Time stepping.
        volume: Liquid volume; defaults to 1 for discs and to the equilibrium
            cross-section times H for ridges.
        tangential_mode: Tangential boundary velocity; defaults to traveling_wave
            for discs and zero for ridges.
        g_min: Floor of |grad h|.
        feasibility_tol: Largest tolerated negative height.
        quadrature_extra: Extra Gauss points per direction.
        output: Output settings.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    model: ModelKind = "transient"
    geometry: GeometryConfig = GeometryConfig(disc=DiscGeometry())
    degree: Literal[1, 2, 3] = 2
    physics: PhysicsParams = PhysicsParams()
    mobilities: MobilityLaws = MobilityLaws()
    stepper: StepperConfig
    volume: float | None = Field(default=None, gt=0)
    tangential_mode: TangentialMode | None = None
    g_min: float = Field(default=1e-8, gt=0)
    feasibility_tol: float = Field(default=1e-3, ge=0)
    quadrature_extra: int = Field(default=1, ge=0)
    output: OutputConfig = OutputConfig()

    @model_validator(mode="after")
    def check_consistency(self) -> "RunConfig":
        """
        Align the stepper with the model and fill geometry-dependent defaults.

        Returns:
            The validated model.
        """
        if self.model in ("transient", "weak") and self.physics.eps_line > 0:
            raise ValueError(f"line tension requires the strong model, got model={self.model}")
        if self.model == "weak" and self.physics.s == 0:
            raise ValueError("the weak model needs s > 0")
        stepper = self.stepper
        updates: dict[str, Any] = {}
        if "solver" in stepper.model_fields_set and stepper.solver != self.model:
            raise ValueError(f"stepper.solver={stepper.solver} contradicts model={self.model}")
        updates["solver"] = self.model
        if "snapshot_every" not in stepper.model_fields_set:
            updates["snapshot_every"] = self.output.snapshot_every
        object.__setattr__(self, "stepper", stepper.model_copy(update=updates))
        if self.tangential_mode is None:
            mode = "zero" if self.geometry.ridge is not None else "traveling_wave"
            object.__setattr__(self, "tangential_mode", mode)
        if self.volume is None:
            object.__setattr__(self, "volume", self.default_volume())
        return self

    def default_volume(self) -> float:
        """Volume used when none is configured."""
        ridge = self.geometry.ridge
        if ridge is None:
            return 1.0
        return float(self.physics.equilibrium_slope * ridge.L**2 * ridge.H / 6.0)

    def to_json(self) -> str:
        """Serialise with resolved defaults."""
        return self.model_dump_json(indent=2)


def _apply_defaults(data: dict[str, Any], settings: dict[str, Any]) -> dict[str, Any]:
    solver = settings["solver"]
    for key in ("g_min", "feasibility_tol", "quadrature_extra"):
        data.setdefault(key, solver[key])
    output = data.setdefault("output", {})
    if isinstance(output, dict):
        output.setdefault("dir", settings["output"]["directory"])
        output.setdefault("snapshot_every", settings["output"]["snapshot_every"])
    return data


def _describe(error: ValidationError) -> tuple[str, str]:
    first = error.errors()[0]
    key = ".".join(str(p) for p in first["loc"]) or "<root>"
    expected = first.get("ctx", {}).get("expected")
    message = first["msg"] if expected is None else f"{first['msg']} (expected {expected})"
    return key, message


def parse_config(text: str, settings: dict[str, Any] | None = None) -> RunConfig:
    """
    Parse and validate a JSON run configuration.

    Missing solver and output defaults are taken from settings.ini.

    Args:
        text: JSON document.
        settings: Settings as returned by load_settings (loaded if None).

    Returns:
        Validated configuration.

    Raises:
        ConfigError: On malformed JSON or schema violations, naming the offending key.
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg} at line {e.lineno}") from e
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    data = _apply_defaults(data, settings if settings is not None else load_settings())
    try:
        config = RunConfig.model_validate(data)
    except ValidationError as e:
        key, message = _describe(e)
        raise ConfigError(message, key=key) from e
    logger.debug(f"Parsed run configuration: model={config.model}, scheme={config.stepper.scheme}")
    return config


def with_resolution(config: RunConfig, refinement: int | None = None, tau: float | None = None) -> RunConfig:
    """
    Copy a configuration with another refinement or step size.

    Args:
        config: Base configuration.
        refinement: New refinement level.
        tau: New step size.

    Returns:
        Updated configuration.
    """
    updates: dict[str, Any] = {}
    if refinement is not None:
        updates["geometry"] = config.geometry.with_refinement(refinement)
    if tau is not None:
        updates["stepper"] = config.stepper.model_copy(update={"tau": float(tau)})
    return config.model_copy(update=updates)

