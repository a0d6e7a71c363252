class DomainError(ValueError):
    """An argument lies outside the domain an operation is defined on."""


class GridError(ValueError):
    """Distributions live on incompatible rational grids."""


class ConfigError(ValueError):
    """An experiment configuration is invalid."""
