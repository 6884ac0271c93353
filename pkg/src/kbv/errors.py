"""Exception hierarchy shared by every module."""


class KbvError(Exception):
    """Base class. ``module`` names the module that raised, ``condition``
    the violated requirement in words."""

    def __init__(self, message: str, *, module: str = "kbv", condition: str | None = None):
        super().__init__(message)
        self.module = module
        self.condition = condition

    def describe(self) -> str:
        text = f"[{self.module}] {self}"
        if self.condition:
            text += f" (requires: {self.condition})"
        return text


class PreconditionError(KbvError, ValueError):
    pass


class ParameterError(KbvError, ValueError):
    pass


class NormalizationError(KbvError, ValueError):
    pass


class ResourceLimitError(KbvError, RuntimeError):
    """A configured size limit (memory budget, exact-mode cap) was exceeded."""
