"""Exception types shared across the package."""


class ConfigError(Exception):
    """Invalid configuration, scenario file, or map file."""


class EngineError(RuntimeError):
    """Engine API misuse, e.g. stepping a finished or un-reset episode."""
