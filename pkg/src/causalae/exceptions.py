"""Shared error types for the toolkit."""


class CausalAeError(Exception):
    """Base class for all toolkit errors."""


class ConfigurationError(CausalAeError):
    """Bad shapes, invalid configuration values, or unparseable inputs."""


class EvaluationError(CausalAeError):
    """A run-time precondition failed, e.g. a treatment group is empty."""


class OverlapWarning(UserWarning):
    """A dataset (or a split of one) has an empty treatment or control group."""
