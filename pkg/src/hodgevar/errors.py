"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operands have incompatible dimensions, variable counts or cutoffs."""


class DomainError(ValueError):
    """Input violates a mathematical precondition (e.g. a norm contract)."""


class IllConditionedError(ArithmeticError):
    """A linear system is outside the guaranteed neighborhood (near-singular)."""


class ScenarioError(ValueError):
    """A scenario file failed parsing or cross-dimension validation."""

    def __init__(self, path: str, message: str):
        self.field_path = path
        super().__init__(f"{path}: {message}")
