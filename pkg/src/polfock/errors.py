"""Exception types raised across the package."""


class PolfockError(Exception):
    """Base class for all package errors."""


class RegistryError(PolfockError, ValueError):
    """Bad mode labels, unregistered modes or mismatched registries."""


class CutoffError(PolfockError, ValueError):
    """A state would exceed the configured photon-number cutoff."""


class ConfigError(PolfockError, ValueError):
    """Invalid or inconsistent experiment configuration."""


class InvariantError(PolfockError, RuntimeError):
    """A physical invariant of the simulation was violated."""
