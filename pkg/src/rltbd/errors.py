"""Exception types raised across the package."""


class ParameterError(ValueError):
    """A model or configuration parameter is outside its valid range."""


class DomainError(ValueError):
    """A state lies outside the domain of an operation (e.g. the sensor origin)."""


class InterfaceError(ValueError):
    """Inputs have the wrong shape or are empty."""


class NumericalError(ArithmeticError):
    """NaN inputs, failed factorizations, or degenerate acceptance ratios."""


class DegenerateLikelihoodError(RuntimeError):
    """Every particle received zero likelihood weight."""


class ScenarioError(ValueError):
    """A simulated trajectory leaves the sensor field of view."""


class ConfigError(ValueError):
    """Invalid experiment configuration; ``key`` names the offending entry."""

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
