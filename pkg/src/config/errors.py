class ConfigurationError(ValueError):
    """Raised when a run, grid or quadrature configuration cannot be honoured."""


class CheckpointError(RuntimeError):
    """Raised when a checkpoint file is corrupted or incompatible with the requested restore."""


class SolverAbortError(RuntimeError):
    """Raised when the particle solver reaches a state it cannot continue from."""


class EigenSolverError(RuntimeError):
    """Raised when the dense eigen-decomposition of the linearized operator fails."""


class ProvenanceError(RuntimeError):
    """Raised when outputs produced under different configurations would be mixed."""
