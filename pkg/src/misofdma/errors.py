class ConfigError(ValueError):
    """Invalid configuration value or inconsistent parameter combination."""


class SearchSpaceError(RuntimeError):
    """Exhaustive enumeration refused because the candidate space is too large."""
