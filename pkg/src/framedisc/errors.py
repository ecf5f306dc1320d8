"""Exception types shared across the package."""


class StructuralError(ValueError):
    """Shape, index or domain mismatch between objects that must agree."""


class CertificationError(RuntimeError):
    """A requested operation lacks the contraction certificate it requires."""


class SingularOperatorError(RuntimeError):
    """A linear operator that must be invertible is (numerically) singular."""
