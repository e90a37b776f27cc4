class ConfigError(ValueError):
    """Invalid configuration. ``field`` names the offending key (dotted path)."""

    def __init__(self, field: str, message: str):
        self.field = field
        self.message = message
        super().__init__(f"{field}: {message}")


class AuditError(RuntimeError):
    """A report failed its emit-time consistency audit."""
