"""Exception types shared across the simulator."""


class ConfigError(ValueError):
    """Invalid system configuration or config file."""


class GenerationExhaustedError(RuntimeError):
    """Request rejection sampling hit its attempt bound (degenerate config)."""


class EpisodeFinishedError(RuntimeError):
    """step() called on a state whose horizon is already exhausted."""


class InfeasibleMergeError(ValueError):
    """merge_records() called on a pair that fails the XOR feasibility check."""


class PolicyFaultError(RuntimeError):
    """A policy returned an action not allowed by the current mask."""


class SimulationError(RuntimeError):
    """Generic simulation-side fault surfaced by the CLI with exit code 1."""
