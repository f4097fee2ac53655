"""Exception types shared across the package."""


class OpsysError(Exception):
    """Base class for all package errors."""


class PreconditionError(OpsysError, ValueError):
    """An input violates a documented precondition."""


class SizeError(OpsysError, ValueError):
    """A construction would exceed the configured dimension cap."""


class NumericalFailure(OpsysError, RuntimeError):
    """A numerical routine failed to reach its accuracy target."""


class ClassificationError(OpsysError, ValueError):
    """Input is reducible where an irreducible pair was required."""


class InconsistentCommutationError(OpsysError, ValueError):
    """Powers of a q-commuting unitary are not scalar."""


class SchemaError(OpsysError, ValueError):
    """A JSON document does not match the expected schema.

    ``path`` names the offending location, e.g. ``matrices[1][0][2]``.
    """

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class Inconclusive(OpsysError, RuntimeError):
    """A solver could not produce a definitive verdict."""
