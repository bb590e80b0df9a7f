"""Shared exception types."""


class ConfigurationError(Exception):
    """A parameter set is structurally invalid (as opposed to a bad call argument)."""
