"""Exception types shared across the package."""


class PneumotopError(Exception):
    """Base class for all package errors."""


class ConfigError(PneumotopError):
    """Invalid problem definition: bad schema, empty region, missing BCs."""


class SolveError(PneumotopError):
    """A linear solve or optimization subproblem failed its contract."""


class SingularSystemError(SolveError):
    """A system matrix was singular or produced non-finite solutions."""
