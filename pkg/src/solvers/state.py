"""
State objects of the ALE discretisation and the context shared by the solvers.

States are immutable and every step returns a new one.
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Literal

import numpy as np

from src.fem.space import FeSpace, Field
from src.mesh.reference_mesh import FacetTag, ReferenceMesh
from src.physics.params import MobilityLaws, PhysicsParams

logger = logging.getLogger(__name__)

ModelKind = Literal["transient", "strong", "weak"]
TangentialMode = Literal["zero", "traveling_wave"]


@dataclass(frozen=True)
class AleState:
    """
    Discrete ALE state: the map psi and the height h on the reference mesh.

    Attributes:
        psi: Vector field mapping the reference domain onto the support.
        h: Scalar height field, zero on FreeBoundary nodes.
        t: Time.
        vol0: Target volume fixed at initialisation.
    """

    psi: Field
    h: Field
    t: float
    vol0: float

    @property
    def mesh(self) -> ReferenceMesh:
        """Reference mesh."""
        return self.psi.space.mesh

    @property
    def degree(self) -> int:
        """Polynomial degree."""
        return self.psi.space.degree

    @property
    def space(self) -> FeSpace:
        """Scalar space of h."""
        return self.h.space

    def advanced(self, psi: Field, h: Field, t: float) -> "AleState":
        """Copy with new map, height and time."""
        return replace(self, psi=psi, h=h, t=t)

    def combine(self, weights: list[tuple[float, "AleState"]], t: float) -> "AleState":
        """
        Coefficient-wise linear combination of states on the same spaces.

        Args:
            weights: Pairs (weight, state).
            t: Time stamp of the result.

        Returns:
            State with psi and h combined.
        """
        psi = sum(w * s.psi.coeffs for w, s in weights)
        h = sum(w * s.h.coeffs for w, s in weights)
        return replace(self, psi=self.psi.with_coeffs(psi), h=self.h.with_coeffs(h), t=t)


@dataclass(frozen=True)
class QuasistaticState(AleState):
    """
    ALE state of the strong-dissipation model.

    Attributes:
        pi_hat: Lagrange multiplier of the volume constraint.
    """

    pi_hat: float = 0.0

    def combine(self, weights: list[tuple[float, "AleState"]], t: float) -> "QuasistaticState":
        """Linear combination including the volume multiplier."""
        combined = super().combine(weights, t)
        pi_hat = float(sum(w * getattr(s, "pi_hat", 0.0) for w, s in weights))
        return replace(combined, pi_hat=pi_hat)  # type: ignore[return-value]


@dataclass(frozen=True)
class KinematicRates:
    """
    Rates of one decoupled step.

    Attributes:
        hdot_eulerian: Eulerian height rate.
        pi: Pressure.
        zeta: Contact-line multiplier on the FreeBoundary nodes (empty in weak mode).
        zeta_dofs: Scalar nodes carrying zeta.
        psidot: ALE velocity.
        lam: Multiplier of the boundary-velocity constraint, per constrained row.
        hdot_ale: Height rate along the ALE map.
        w: Estimated translation velocity.
        dissipation: Bulk plus contact-line dissipation of (pi, zeta).
        power: Pairing of the driving force with hdot_eulerian.
    """

    hdot_eulerian: Field
    pi: Field
    zeta: np.ndarray
    zeta_dofs: np.ndarray
    psidot: Field
    lam: np.ndarray
    hdot_ale: Field
    w: np.ndarray
    dissipation: float = 0.0
    power: float = 0.0


@dataclass(frozen=True)
class SolverEvent:
    """Non-terminal numerical event recorded during a run."""

    kind: str
    message: str
    t: float


@dataclass
class SimulationContext:
    """
    Everything a step needs besides the state.

    Attributes:
        params: Energy coefficients.
        mobilities: Mobility laws.
        model: Model of the hierarchy to step.
        tangential_mode: Tangential boundary velocity used by the ALE extension.
        g_min: Floor of |grad h| in denominators and mobilities.
        feasibility_tol: Largest tolerated negative nodal height.
        quadrature_extra: Extra Gauss points per direction.
        events: Recorded non-terminal events.
    """

    params: PhysicsParams = field(default_factory=PhysicsParams)
    mobilities: MobilityLaws = field(default_factory=MobilityLaws)
    model: ModelKind = "transient"
    tangential_mode: TangentialMode = "traveling_wave"
    g_min: float = 1e-8
    feasibility_tol: float = 1e-3
    quadrature_extra: int = 1
    events: list[SolverEvent] = field(default_factory=list)

    def record(self, kind: str, message: str, t: float) -> None:
        """
        Record and log a non-terminal event.

        Consecutive events of the same kind at the same time are merged.

        Args:
            kind: Event kind.
            message: Human-readable description.
            t: Time of the state the event refers to.
        """
        if self.events and self.events[-1].kind == kind and self.events[-1].t == t:
            return
        self.events.append(SolverEvent(kind=kind, message=message, t=t))
        logger.warning(f"{kind} at t={t:.6g}: {message}")


def free_boundary_dofs(space: FeSpace) -> np.ndarray:
    """Scalar nodes on FreeBoundary facets."""
    return space.boundary_dofs(FacetTag.FREE_BOUNDARY)
