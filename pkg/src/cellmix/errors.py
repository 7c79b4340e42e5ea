"""Exception hierarchy; the CLI maps each branch to an exit code."""


class CellMixError(Exception):
    """Base class for every error raised by this package."""


class DomainError(CellMixError, ValueError):
    """A value lies outside its mathematical domain (bad ratio, non-divisible patch size)."""


class StructuralError(DomainError):
    """Shapes or index sets that should agree do not."""


class FormatError(CellMixError):
    """Malformed file contents: TBF headers, loss CSVs."""


class ConfigError(CellMixError):
    """Unknown or ill-typed configuration keys."""
