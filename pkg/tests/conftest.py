import pytest

from src.fem.space import FeSpace, Field
from src.mesh.builders import build_disc_mesh, build_ridge_mesh
from src.mesh.reference_mesh import ReferenceMesh
from src.physics.params import PhysicsParams
from src.solvers.quasistatic import stationary_shape
from src.solvers.state import AleState, SimulationContext


def pytest_addoption(parser: pytest.Parser) -> None:
    parser.addoption("--runslow", action="store_true", default=False, help="run long benchmark reproductions")


def pytest_collection_modifyitems(config: pytest.Config, items: list[pytest.Item]) -> None:
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def disc_mesh() -> ReferenceMesh:
    """Unit disc refined once (20 cells)."""
    return build_disc_mesh(1, 2)


@pytest.fixture
def disc_space(disc_mesh: ReferenceMesh) -> FeSpace:
    """Scalar Q2 space on the refined disc."""
    return FeSpace(disc_mesh, 2)


@pytest.fixture
def disc_identity(disc_space: FeSpace) -> Field:
    """Identity map of the refined disc."""
    return disc_space.identity()


@pytest.fixture
def ridge_mesh_and_map() -> tuple[ReferenceMesh, Field]:
    """Unperturbed unit ridge of height 2 with its identity map."""
    return build_ridge_mesh(1.0, 2.0, 0.0, 1, 2)


@pytest.fixture
def ctx() -> SimulationContext:
    """Default context: transient model, s = 1, no gravity."""
    return SimulationContext(params=PhysicsParams(s=1.0))


@pytest.fixture
def sliding_ctx() -> SimulationContext:
    """Transient context with in-plane gravity along x."""
    return SimulationContext(params=PhysicsParams(s=1.0, g_x=(2.0, 0.0)))


@pytest.fixture
def cap_state(disc_identity: Field, ctx: SimulationContext) -> AleState:
    """Unit-volume stationary shape on the unit disc without gravity."""
    h, _ = stationary_shape(disc_identity, 1.0, ctx.params, ctx)
    return AleState(psi=disc_identity, h=h, t=0.0, vol0=1.0)

