"""Exception types raised across the package."""


class InvalidArgument(ValueError):
    """An input violates an operation's precondition."""


class NumericDomainError(InvalidArgument, ArithmeticError):
    """A value falls outside the domain of a formula (e.g. zero depth)."""


class GenerationFailure(RuntimeError):
    """Random scene or camera generation could not satisfy its constraints."""


class ConfigError(ValueError):
    """A scenario configuration is malformed.

    ``path`` is the dotted key path of the offending entry.
    """

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
