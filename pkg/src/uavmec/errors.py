"""Shared exception types (map onto the CLI exit codes)."""


class ConfigError(Exception):
    """Invalid configuration; CLI exit code 2."""


class ScenarioInfeasibleError(ConfigError):
    """No feasible service placement exists for the scenario."""


class ArtifactError(Exception):
    """Unreadable or incompatible run artifact (checkpoint etc.); CLI exit code 3."""
