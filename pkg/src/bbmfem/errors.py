"""Exception types shared across the package."""


class InvalidMeshError(ValueError):
    """Mesh nodes are not strictly increasing / endpoints are wrong."""


class DimensionMismatchError(ValueError):
    """Array lengths do not match the mesh or basis they belong to."""


class DegenerateMonitorError(ValueError):
    """Monitor function integrates to zero, equidistribution is undefined."""


class UnsupportedBasisError(ValueError):
    """Operation requires a basis kind with more smoothness than given."""


class ParameterError(ValueError):
    """Physical parameter outside its admissible range (e.g. wave speed <= 1)."""


class DegeneratePeakError(RuntimeError):
    """Field is too flat to locate a solitary-wave peak."""


class DegenerateCorrectionError(RuntimeError):
    """Correction direction has vanishing inner product with the discrete gradient."""


class FactorizationError(RuntimeError):
    """Linear solve inside an implicit step hit a singular matrix."""


class NewtonFailureError(RuntimeError):
    """Newton iteration did not reach the residual tolerance.

    Carries the last iterate and its residual norm so callers can dump state.
    """

    def __init__(self, message, last_iterate=None, residual_norm=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.residual_norm = residual_norm


class ConfigError(ValueError):
    """Experiment configuration is malformed or inconsistent."""
