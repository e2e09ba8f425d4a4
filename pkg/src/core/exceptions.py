from collections.abc import Sequence


class ThinFilmError(Exception):
    """Base class for all errors raised by the simulator."""


class ConfigError(ThinFilmError):
    """
    Raised when a run configuration or CLI argument is invalid.

    Attributes:
        key: Dotted path of the offending configuration key, if known.
    """

    def __init__(self, message: str, key: str | None = None) -> None:
        super().__init__(message if key is None else f"{key}: {message}")
        self.key = key


class AssemblyError(ThinFilmError):
    """Raised when forms are assembled with incompatible spaces or coefficients."""


class SolverSingular(ThinFilmError):
    """Raised when the sparse factorisation of a linear system fails."""


class FitRejected(ThinFilmError):
    """Raised when a series is unsuitable for an asymptotic fit."""


class TerminalEvent(ThinFilmError):
    """
    Numerical event that ends a run.

    Terminal events are raised by the step functions and converted into an
    exit reason by the stepper; the state passed to the failing step is kept.
    """

    kind = "terminal"


class MeshTangled(TerminalEvent):
    """
    Raised when the ALE map folds, i.e. the Jacobian is non-positive somewhere.

    Attributes:
        cells: Indices of the cells with a non-positive Jacobian.
    """

    kind = "mesh_tangled"

    def __init__(self, cells: Sequence[int]) -> None:
        self.cells = [int(c) for c in cells]
        preview = ", ".join(str(c) for c in self.cells[:8])
        super().__init__(f"Non-positive Jacobian in {len(self.cells)} cell(s): {preview}")


class FeasibilityViolation(TerminalEvent):
    """
    Raised when the height becomes negative beyond the feasibility tolerance.

    Attributes:
        min_h: The minimal nodal height of the rejected state.
    """

    kind = "feasibility"

    def __init__(self, min_h: float, tolerance: float) -> None:
        super().__init__(f"min h = {min_h:.3e} below -{tolerance:.1e}")
        self.min_h = min_h
        self.tolerance = tolerance


class RidgeCollapsed(TerminalEvent):
    """Raised when the ridge width drops below the configured pinch-off threshold."""

    kind = "ridge_collapsed"

    def __init__(self, width: float, w_min: float) -> None:
        super().__init__(f"ridge width {width:.3e} below w_min={w_min:.1e}")
        self.width = width


class OutputError(ThinFilmError):
    """
    Raised when an output file cannot be written.

    Attributes:
        path: The file that failed.
    """

    def __init__(self, path: str, reason: str) -> None:
        super().__init__(f"cannot write {path}: {reason}")
        self.path = path
