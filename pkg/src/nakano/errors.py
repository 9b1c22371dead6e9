"""Exception types shared across the package."""


class DomainError(ValueError):
    """Arguments outside an operation's domain (atom mismatch, bad ranges)."""


class ContractError(ValueError):
    """A stated precondition of an operation does not hold."""


class NotIsometricError(ContractError):
    """An embedding failed the isometry probe; carries the worst witness."""

    def __init__(self, message: str, witness: dict | None = None):
        super().__init__(message)
        self.witness = witness or {}
