"""Exception hierarchy."""


class BoolPercError(Exception):
    """Base class for errors raised by this package."""


class GraphError(BoolPercError, ValueError):
    """Invalid graph construction or query."""


class GraphParseError(GraphError):
    """Malformed edge-list file."""

    def __init__(self, lineno: int, message: str):
        self.lineno = lineno
        super().__init__(f"line {lineno}: {message}")


class LawError(BoolPercError, ValueError):
    """Invalid radius law or probability."""


class DirectSamplerRequired(LawError):
    """The point-process route needs p < 1 (the first level intensity is infinite at p = 1)."""


class HorizonError(BoolPercError, ValueError):
    """A series was asked for terms beyond the growth-profile horizon."""


class ConfigError(BoolPercError, ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        self.key = key
        super().__init__(f"{key}: {message}")


class SupercriticalError(BoolPercError, ValueError):
    """An operation that needs a subcritical offspring law got a supercritical one."""
