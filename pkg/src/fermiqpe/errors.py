"""Exception hierarchy shared across the package."""


class FermiQPEError(Exception):
    """Base class for all package errors."""


class InvalidModelError(FermiQPEError, ValueError):
    """A Hamiltonian definition is malformed (bad size, non-finite or complex coefficients)."""


class PauliPrincipleError(InvalidModelError):
    """A ladder product repeats a creation or annihilation index."""


class DimensionError(FermiQPEError, ValueError):
    """Operands act on registers of different size or exceed a dimension cap."""


class UnsupportedShapeError(FermiQPEError, ValueError):
    """A Pauli string cannot be lowered by the gate compiler."""


class WiringError(FermiQPEError, ValueError):
    """A control qubit overlaps the register it controls."""


class ConfigError(FermiQPEError, ValueError):
    """Invalid run configuration."""


class ResourceError(FermiQPEError, RuntimeError):
    """A run would exceed the memory or dimension budget."""


class ConsistencyError(FermiQPEError, RuntimeError):
    """An internal algebraic check failed (e.g. a residual imaginary coefficient)."""
