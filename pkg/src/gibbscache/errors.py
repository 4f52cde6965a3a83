"""Shared exception types."""


class CapacityError(Exception):
    """An exact enumeration was requested above the configured size limit."""


class ConfigError(ValueError):
    """Experiment configuration failed validation.

    The message carries the offending field path and a suggested remedy.
    """

    def __init__(self, field: str, problem: str, remedy: str = ""):
        self.field = field
        self.problem = problem
        self.remedy = remedy
        msg = f"{field}: {problem}"
        if remedy:
            msg += f" ({remedy})"
        super().__init__(msg)
