"""Exception types shared across the package."""


class DataFormatError(ValueError):
    """Malformed input data: bad JSONL line, schema violation, broken span.

    Carries the file path and 1-based line number when known so CLI errors
    can point at the offending record.
    """

    def __init__(self, message: str, *, path=None, line: int | None = None):
        prefix = ""
        if path is not None:
            prefix += f"{path}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)
        self.path = path
        self.line = line


class ConfigError(ValueError):
    """Invalid run configuration (unknown keys, out-of-range values)."""


class EncoderStateError(RuntimeError):
    """Encoder used before weights were initialized or loaded."""
