"""Exception types shared across the package."""


class ConfigError(ValueError):
    """Invalid configuration. ``path`` names the offending field when known."""

    def __init__(self, message: str, path: str | None = None):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}" if path else message)

    def at(self, prefix: str) -> "ConfigError":
        """Copy of this error with ``prefix`` prepended to the field path."""
        path = f"{prefix}.{self.path}" if self.path else prefix
        return ConfigError(self.message, path)
