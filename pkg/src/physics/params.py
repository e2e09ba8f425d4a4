"""Energy coefficients and mobility laws."""

from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator


class PhysicsParams(BaseModel):
    """
    Nondimensional energy coefficients.

    Attributes:
        sigma: Surface tension.
        s: Spreading coefficient; the equilibrium contact slope is sqrt(2 s / sigma).
        g_x: In-plane gravity vector.
        g_z: Normal gravity.
        eps_line: Line tension.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    sigma: float = Field(default=1.0, gt=0)
    s: float = Field(default=1.0, ge=0)
    g_x: tuple[float, float] = (0.0, 0.0)
    g_z: float = 0.0
    eps_line: float = Field(default=0.0, ge=0)

    @property
    def equilibrium_slope(self) -> float:
        """Contact slope |grad h| at which the contact line is at rest."""
        return float(np.sqrt(2.0 * self.s / self.sigma))


class PowerLaw(BaseModel):
    """m(h) = m0 |h|^alpha."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    m0: float = Field(default=1.0, gt=0)
    alpha: float = Field(default=2.0, ge=0)

    def __call__(self, h: np.ndarray) -> np.ndarray:
        return self.m0 * np.power(np.maximum(h, 0.0), self.alpha)


class SlipLaw(BaseModel):
    """m(h) = h^3 / 3 + b h^2 (Navier slip)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    b: float = Field(default=0.0, ge=0)

    def __call__(self, h: np.ndarray) -> np.ndarray:
        h = np.maximum(h, 0.0)
        return h**3 / 3.0 + self.b * h**2


class BulkMobility(BaseModel):
    """Exactly one of the bulk mobility laws."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    power: PowerLaw | None = None
    slip: SlipLaw | None = None

    @model_validator(mode="after")
    def check_exactly_one(self) -> "BulkMobility":
        """
        Validate that one law is selected.

        Returns:
            The validated model.

        Raises:
            ValueError: If none or both laws are given.
        """
        if (self.power is None) == (self.slip is None):
            raise ValueError("exactly one of 'power' or 'slip' must be given")
        return self

    @property
    def law(self) -> PowerLaw | SlipLaw:
        """The selected law."""
        return self.power if self.power is not None else self.slip  # type: ignore[return-value]


class ContactLaw(BaseModel):
    """n = n0 |grad h|^theta."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    n0: float = Field(default=1.0, gt=0)
    theta: Literal[-1, 0, 1] = 0


class MobilityLaws(BaseModel):
    """
    Bulk and contact-line mobilities.

    Attributes:
        m: Bulk mobility law.
        n: Contact-line mobility law.
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    m: BulkMobility = BulkMobility(power=PowerLaw())
    n: ContactLaw = ContactLaw()

    @field_validator("m", mode="before")
    @classmethod
    def default_power_law(cls, v: object) -> object:
        """
        Treat an empty bulk block as the default power law.

        Args:
            v: Raw bulk mobility value.

        Returns:
            Value to validate.
        """
        if isinstance(v, dict) and not v:
            return {"power": {}}
        return v

    def mobility_bulk(self, h: np.ndarray | float) -> np.ndarray:
        """
        Bulk mobility with negative heights clamped to zero.

        Args:
            h: Heights.

        Returns:
            m(max(h, 0)).
        """
        return np.asarray(self.m.law(np.asarray(h, dtype=float)))

    def mobility_contact(self, grad_norm: np.ndarray | float, g_min: float = 1e-8) -> np.ndarray:
        """
        Contact-line mobility n0 * max(|grad h|, g_min)^theta.

        Args:
            grad_norm: Contact slopes |grad h|.
            g_min: Gradient-magnitude floor.

        Returns:
            Mobility values.
        """
        g = np.maximum(np.asarray(grad_norm, dtype=float), g_min)
        return self.n.n0 * g ** float(self.n.theta)
