"""Exception types shared across the harness."""


class OscopeError(Exception):
    """Base class for harness-specific failures."""


class FormatError(OscopeError):
    """File does not look like a store (bad magic, version, or header)."""


class CorruptError(OscopeError):
    """Store file recognized but structurally damaged (truncation, bad line)."""


class DuplicateIdError(OscopeError):
    """Two records share an id."""


class IoError(OscopeError):
    """Underlying read/write failed."""


class DimError(OscopeError):
    """Vector dimensionalities do not line up."""


class ConfigError(OscopeError):
    """A task or experiment description is internally inconsistent."""


class UnsupportedError(OscopeError):
    """Requested operation is defined only for a different input class."""


class TrainingError(OscopeError):
    """Optimization diverged (non-finite loss)."""


class SchemaError(OscopeError):
    """Experiment config violates the schema; carries the offending field path."""

    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path
