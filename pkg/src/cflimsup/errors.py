class BudgetError(RuntimeError):
    """Work would exceed the configured enumeration budget."""


class ConvergenceError(RuntimeError):
    def __init__(self, msg, residual=None):
        super().__init__(msg if residual is None else f"{msg} (last residual {residual:.3g})")
        self.residual = residual


class ConfigurationError(ValueError):
    """Inputs are individually valid but do not admit a solution."""
